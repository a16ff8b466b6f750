#include "conncalc/connection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace conncalc {

namespace {

bool same_presentation(const TracialBratteli& a, const TracialBratteli& b) {
  return a.presentation().preperiod == b.presentation().preperiod &&
         a.presentation().period == b.presentation().period;
}

std::string where(int k, int m, int n) {
  std::ostringstream os;
  os << "(k=" << k << ", m=" << m << ", n=" << n << ")";
  return os.str();
}

}  // namespace

UnitaryConnection::UnitaryConnection(ZeroCellPtr source, ZeroCellPtr target,
                                     std::vector<GraphFunctor> lambdas,
                                     std::vector<std::vector<CMat>> blocks)
    : source_(std::move(source)),
      target_(std::move(target)),
      lambdas_(std::move(lambdas)),
      blocks_(std::move(blocks)) {
  if (!same_presentation(*source_, *target_))
    structural_error("1-cell: source and target 0-cells have different presentations");
  const int top = source_->stored_levels();
  if (static_cast<int>(lambdas_.size()) != top)
    structural_error("1-cell: expected " + std::to_string(top) + " functors");
  if (static_cast<int>(blocks_.size()) != top - 1)
    structural_error("1-cell: expected " + std::to_string(top - 1) + " connection levels");
  for (int k = 0; k < top; ++k) {
    const GraphFunctor& l = lambdas_[static_cast<size_t>(k)];
    if (!l.source().same_objects(source_->stored_level(k)) ||
        !l.target().same_objects(target_->stored_level(k)))
      structural_error("1-cell: functor " + std::to_string(k) + " has the wrong categories");
  }
  const int L = presentation().preperiod;
  if (lambdas_.back().adjacency() != lambdas_[static_cast<size_t>(L)].adjacency())
    structural_error("1-cell: functor at level L+K must repeat the functor at level L");
  for (int k = 1; k < top; ++k) {
    size_t expect = static_cast<size_t>(source_->stored_level(k - 1).size()) *
                    static_cast<size_t>(target_->stored_level(k).size());
    if (blocks_[static_cast<size_t>(k - 1)].size() != expect)
      structural_error("1-cell: connection level " + std::to_string(k) + " has the wrong block count");
  }
}

GraphFunctor UnitaryConnection::lambda(int k) const {
  auto [j, n] = source_->representative(k);
  if (n == 0) return lambdas_[static_cast<size_t>(j)];
  return lambdas_[static_cast<size_t>(j)].rescaled(std::pow(presentation().pf_scalar, -n));
}

const CMat& UnitaryConnection::block(int k, int m, int n) const {
  if (k < 1) structural_error("1-cell: connections start at level 1");
  int j = source_->representative(k).first;
  const int nt = target_->stored_level(j).size();
  return blocks_[static_cast<size_t>(j - 1)][static_cast<size_t>(m) * nt + n];
}

Chain UnitaryConnection::w_domain(int k) const {
  return Chain(lambda(k - 1)).then(target_->functor(k));
}

Chain UnitaryConnection::w_codomain(int k) const {
  return Chain(source_->functor(k)).then(lambda(k));
}

NatTrans UnitaryConnection::w(int k) const {
  NatTrans nt(w_domain(k), w_codomain(k));
  for (int m = 0; m < nt.n_source(); ++m)
    for (int n = 0; n < nt.n_target(); ++n) {
      const CMat& b = block(k, m, n);
      CMat& dst = nt.block(m, n);
      if (b.rows() != dst.rows() || b.cols() != dst.cols()) {
        std::ostringstream os;
        os << "connection block " << where(k, m, n) << " has shape " << b.rows() << "x"
           << b.cols() << ", expected " << dst.rows() << "x" << dst.cols();
        structural_error(os.str());
      }
      dst = b;
    }
  return nt;
}

UnitaryConnection UnitaryConnection::unfold(int preperiod, int period) const {
  auto src = std::make_shared<const TracialBratteli>(source_->unfold(preperiod, period));
  auto tgt = std::make_shared<const TracialBratteli>(target_->unfold(preperiod, period));
  std::vector<GraphFunctor> ls;
  std::vector<std::vector<CMat>> bs;
  for (int k = 0; k <= preperiod + period; ++k) {
    ls.push_back(lambda(k));
    if (k >= 1) {
      std::vector<CMat> level;
      const int nm = src->stored_level(k - 1).size(), nn = tgt->stored_level(k).size();
      for (int m = 0; m < nm; ++m)
        for (int n = 0; n < nn; ++n) level.push_back(block(k, m, n));
      bs.push_back(std::move(level));
    }
  }
  return UnitaryConnection(src, tgt, std::move(ls), std::move(bs));
}

OneCellReport validate_one_cell(const UnitaryConnection& c, double tol) {
  OneCellReport rep;
  auto fail = [&rep](const std::string& e) {
    rep.ok = false;
    rep.errors.push_back(e);
  };
  const TracialBratteli& src = c.source();
  const TracialBratteli& tgt = c.target();
  const int top = c.stored_levels();
  for (int k = 1; k < top; ++k) {
    IMat dl = tgt.stored_adjacency(k) * c.stored_lambda(k - 1).adjacency();
    IMat lg = c.stored_lambda(k).adjacency() * src.stored_adjacency(k);
    const int nm = src.stored_level(k - 1).size(), nn = tgt.stored_level(k).size();
    for (int m = 0; m < nm; ++m)
      for (int n = 0; n < nn; ++n) {
        if (dl(n, m) != lg(n, m)) {
          fail("shape condition fails at " + where(k, m, n) + ": " + std::to_string(dl(n, m)) +
               " vs " + std::to_string(lg(n, m)) + " paths");
          continue;
        }
        const CMat& b = c.block(k, m, n);
        if (b.rows() != dl(n, m) || b.cols() != dl(n, m)) {
          fail("connection block " + where(k, m, n) + " has shape " + std::to_string(b.rows()) +
               "x" + std::to_string(b.cols()) + ", expected " + std::to_string(dl(n, m)) +
               " square");
          continue;
        }
        if (b.size() == 0) continue;
        const CMat id = CMat::Identity(b.rows(), b.cols());
        double r = std::max((b * b.adjoint() - id).cwiseAbs().maxCoeff(),
                            (b.adjoint() * b - id).cwiseAbs().maxCoeff());
        if (r > tol)
          fail("connection block " + where(k, m, n) + " is not unitary (residual " +
               std::to_string(r) + ")");
        rep.unitarity_residual = std::max(rep.unitarity_residual, r);
      }
  }
  const double dg = src.presentation().pf_scalar, dd = tgt.presentation().pf_scalar;
  if (std::abs(dg - dd) > tol * std::max(dg, dd))
    fail("boundedness fails in the periodic tail: source and target PF scalars differ (" +
         std::to_string(dg) + " vs " + std::to_string(dd) + ")");
  rep.eps = std::numeric_limits<double>::infinity();
  rep.M = 0.0;
  for (int k = 0; k < top; ++k) {
    RVec r = c.stored_lambda(k).adjacency().cast<double>().transpose() * tgt.stored_level(k).weights;
    RVec ratio = r.cwiseQuotient(src.stored_level(k).weights);
    rep.eps = std::min(rep.eps, ratio.minCoeff());
    rep.M = std::max(rep.M, ratio.maxCoeff());
  }
  rep.scanned_levels = top;
  return rep;
}

UnitaryConnection make_connection(ZeroCellPtr source, ZeroCellPtr target,
                                  const std::vector<IMat>& lambdas,
                                  std::vector<std::vector<CMat>> blocks) {
  std::vector<GraphFunctor> ls;
  for (size_t k = 0; k < lambdas.size(); ++k)
    ls.emplace_back(source->stored_level(static_cast<int>(k)),
                    target->stored_level(static_cast<int>(k)), lambdas[k]);
  return UnitaryConnection(std::move(source), std::move(target), std::move(ls), std::move(blocks));
}

UnitaryConnection tensor_one_cells(const UnitaryConnection& outer_in,
                                   const UnitaryConnection& inner_in) {
  if (!inner_in.target().structurally_equal(outer_in.source()) &&
      !(same_presentation(inner_in.target(), outer_in.source()) &&
        inner_in.target().unfold(0 + inner_in.presentation().preperiod,
                                 inner_in.presentation().period)
            .structurally_equal(outer_in.source())))
    structural_error("tensor: middle 0-cells differ");
  const int L = std::max(outer_in.presentation().preperiod, inner_in.presentation().preperiod);
  const int K = std::lcm(outer_in.presentation().period, inner_in.presentation().period);
  UnitaryConnection outer = outer_in.unfold(L, K);
  UnitaryConnection inner = inner_in.unfold(L, K);

  std::vector<GraphFunctor> ls;
  for (int k = 0; k <= L + K; ++k)
    ls.push_back(compose_functors(inner.lambda(k), outer.lambda(k)).functor);

  std::vector<std::vector<CMat>> bs;
  for (int k = 1; k <= L + K; ++k) {
    NatTrans a = whisker_right(outer.w(k), inner.lambda(k - 1));
    NatTrans b = whisker_left(outer.lambda(k), inner.w(k));
    NatTrans fused = nt_vertical(b, a);
    Chain dom = Chain(ls[static_cast<size_t>(k - 1)]).then(outer.target().functor(k));
    Chain cod = Chain(inner.source().functor(k)).then(ls[static_cast<size_t>(k)]);
    NatTrans w = convert(fused, dom, cod);
    std::vector<CMat> level;
    for (int m = 0; m < w.n_source(); ++m)
      for (int q = 0; q < w.n_target(); ++q) level.push_back(w.block(m, q));
    bs.push_back(std::move(level));
  }
  return UnitaryConnection(inner.source_ptr(), outer.target_ptr(), std::move(ls), std::move(bs));
}

UnitaryConnection build_vertex_model(const CMat& U, int nx, int ny, Presentation depth) {
  if (nx < 1 || ny < 1) throw Error(ErrorKind::Input, "vertex model: X and Y must be nonempty");
  const int s = nx * ny;
  if (U.rows() != s || U.cols() != s)
    throw Error(ErrorKind::Input, "vertex model: U must be |X||Y| x |X||Y|");
  double r = (U * U.adjoint() - CMat::Identity(s, s)).cwiseAbs().maxCoeff();
  if (r > 1e-12) throw Error(ErrorKind::Input, "vertex model: U is not unitary (residual " +
                                                    std::to_string(r) + ")");
  const int L = depth.preperiod, K = depth.period;
  std::vector<WeightedCategory> levels;
  std::vector<IMat> gam;
  for (int k = 0; k <= L + K; ++k) {
    RVec w(1);
    w << std::pow(static_cast<double>(nx), -k);
    levels.emplace_back(std::vector<std::string>{"H"}, w);
    if (k >= 1) gam.push_back(IMat::Constant(1, 1, nx));
  }
  auto g = std::make_shared<const TracialBratteli>(levels, gam,
                                                   Presentation{L, K, std::pow(double(nx), K)});
  // Δ∘Λ paths are (y, x) with index y*nx + x; Λ∘Γ paths are (x, y) with index x*ny + y.
  CMat W(s, s);
  for (int x = 0; x < nx; ++x)
    for (int y = 0; y < ny; ++y)
      for (int xp = 0; xp < nx; ++xp)
        for (int yp = 0; yp < ny; ++yp) W(x * ny + y, yp * nx + xp) = U(x * ny + y, xp * ny + yp);
  std::vector<IMat> lam(static_cast<size_t>(L + K + 1), IMat::Constant(1, 1, ny));
  std::vector<std::vector<CMat>> blocks(static_cast<size_t>(L + K), std::vector<CMat>{W});
  return make_connection(g, g, lam, blocks);
}

UnitaryConnection build_graph_identity(ZeroCellPtr g) {
  const Presentation& p = g->presentation();
  if (p.period != 1) throw Error(ErrorKind::Input, "graph identity: tower must have period 1");
  const IMat& gamma = g->stored_adjacency(1);
  for (int k = 1; k < g->stored_levels(); ++k)
    if (g->stored_adjacency(k) != gamma || !g->stored_level(k).same_objects(g->stored_level(0)))
      throw Error(ErrorKind::Input, "graph identity: tower is not constant");
  std::vector<IMat> lam(static_cast<size_t>(g->stored_levels()), gamma);
  IMat paths = gamma * gamma;
  std::vector<std::vector<CMat>> blocks;
  for (int k = 1; k < g->stored_levels(); ++k) {
    std::vector<CMat> level;
    for (Eigen::Index m = 0; m < gamma.cols(); ++m)
      for (Eigen::Index n = 0; n < gamma.rows(); ++n)
        level.push_back(CMat::Identity(paths(n, m), paths(n, m)));
    blocks.push_back(std::move(level));
  }
  return make_connection(g, g, lam, blocks);
}

CMat haar_unitary(int n, std::mt19937_64& rng) {
  if (n == 0) return CMat(0, 0);
  std::normal_distribution<double> normal(0.0, 1.0);
  CMat z(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      double re = normal(rng);
      double im = normal(rng);
      z(i, j) = cplx(re, im) / std::sqrt(2.0);
    }
  Eigen::HouseholderQR<CMat> qr(z);
  CMat q = qr.householderQ() * CMat::Identity(n, n);
  CMat r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < n; ++j) {
    cplx d = r(j, j);
    double a = std::abs(d);
    if (a > 0) q.col(j) *= d / a;
  }
  return q;
}

bool shapes_feasible(const TracialBratteli& source, const TracialBratteli& target,
                     const std::vector<IMat>& lambdas, std::string* why) {
  auto say = [why](const std::string& s) {
    if (why) *why = s;
    return false;
  };
  if (!same_presentation(source, target)) return say("0-cells have different presentations");
  const int top = source.stored_levels();
  if (static_cast<int>(lambdas.size()) != top)
    return say("expected " + std::to_string(top) + " functor adjacencies");
  for (int k = 0; k < top; ++k) {
    const IMat& l = lambdas[static_cast<size_t>(k)];
    if (l.rows() != target.stored_level(k).size() || l.cols() != source.stored_level(k).size())
      return say("functor " + std::to_string(k) + " has the wrong shape");
  }
  if (lambdas.back() != lambdas[static_cast<size_t>(source.presentation().preperiod)])
    return say("functor at level L+K must repeat the functor at level L");
  for (int k = 1; k < top; ++k) {
    IMat dl = target.stored_adjacency(k) * lambdas[static_cast<size_t>(k - 1)];
    IMat lg = lambdas[static_cast<size_t>(k)] * source.stored_adjacency(k);
    if (dl != lg) return say("shape condition fails at level " + std::to_string(k));
  }
  return true;
}

UnitaryConnection build_random_connection(ZeroCellPtr source, ZeroCellPtr target,
                                          const std::vector<IMat>& lambdas_in,
                                          std::mt19937_64& rng) {
  std::vector<IMat> lambdas = lambdas_in;
  if (lambdas.size() == 1)
    lambdas.assign(static_cast<size_t>(source->stored_levels()), lambdas_in.front());
  std::string why;
  if (!shapes_feasible(*source, *target, lambdas, &why))
    structural_error("random connection: infeasible shapes: " + why);
  std::vector<std::vector<CMat>> blocks;
  for (int k = 1; k < source->stored_levels(); ++k) {
    IMat dl = target->stored_adjacency(k) * lambdas[static_cast<size_t>(k - 1)];
    std::vector<CMat> level;
    for (Eigen::Index m = 0; m < dl.cols(); ++m)
      for (Eigen::Index n = 0; n < dl.rows(); ++n)
        level.push_back(haar_unitary(static_cast<int>(dl(n, m)), rng));
    blocks.push_back(std::move(level));
  }
  return make_connection(std::move(source), std::move(target), lambdas, std::move(blocks));
}

UnitaryConnection build_random_connection(ZeroCellPtr source, ZeroCellPtr target,
                                          const std::vector<IMat>& lambdas,
                                          unsigned long long seed) {
  std::mt19937_64 rng(seed);
  return build_random_connection(std::move(source), std::move(target), lambdas, rng);
}

std::vector<IMat> search_lambdas(const IMat& gamma, const IMat& delta, int max_mult,
                                 size_t max_solutions, size_t node_budget) {
  const int nm = static_cast<int>(gamma.cols());
  const int nn = static_cast<int>(delta.rows());
  if (gamma.rows() != nm || delta.cols() != nn)
    structural_error("search_lambdas: Γ and Δ must be square");
  // Column m of ΛΓ is complete once every u with Γ(u, m) > 0 is filled.
  std::vector<int> ready(static_cast<size_t>(nm), 0);
  for (int m = 0; m < nm; ++m)
    for (int u = 0; u < nm; ++u)
      if (gamma(u, m) > 0) ready[static_cast<size_t>(m)] = std::max(ready[static_cast<size_t>(m)], u);
  std::vector<IMat> out;
  IMat lam = IMat::Zero(nn, nm);
  size_t nodes = 0;
  const long long base = max_mult + 1;
  long long ncols = 1;
  for (int i = 0; i < nn; ++i) ncols *= base;

  auto consistent = [&](int filled) {
    for (int m = 0; m <= filled; ++m) {
      for (int n = 0; n < nn; ++n) {
        long long lhs = 0;
        for (int np = 0; np < nn; ++np) lhs += delta(n, np) * lam(np, m);
        long long partial = 0;
        for (int u = 0; u <= filled; ++u) partial += lam(n, u) * gamma(u, m);
        if (partial > lhs) return false;
        if (ready[static_cast<size_t>(m)] <= filled && partial != lhs) return false;
      }
    }
    return true;
  };

  std::function<void(int)> dfs = [&](int col) {
    if (out.size() >= max_solutions || nodes >= node_budget) return;
    if (col == nm) {
      for (int n = 0; n < nn; ++n)
        if (lam.row(n).sum() == 0) return;
      out.push_back(lam);
      return;
    }
    for (long long code = 1; code < ncols; ++code) {
      if (++nodes >= node_budget || out.size() >= max_solutions) return;
      long long c = code;
      for (int n = 0; n < nn; ++n) {
        lam(n, col) = c % base;
        c /= base;
      }
      if (consistent(col)) dfs(col + 1);
    }
    lam.col(col).setZero();
  };
  dfs(0);
  return out;
}

}  // namespace conncalc
