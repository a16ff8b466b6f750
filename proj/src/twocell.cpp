#include "conncalc/twocell.hpp"

#include <algorithm>
#include <cmath>

namespace conncalc {

namespace {

// Offsets of the groups of a two-step path enumeration (mid, first, second)
// from a fixed start to a fixed end: offsets[mid] and the second-edge count.
struct TwoStep {
  std::vector<long long> offset;
  std::vector<long long> first;
  std::vector<long long> second;
};

TwoStep two_step(const IMat& a, const IMat& b, int from, int to) {
  // a: first step (mid x from), b: second step (to x mid)
  TwoStep t;
  long long off = 0;
  for (Eigen::Index mid = 0; mid < a.rows(); ++mid) {
    t.offset.push_back(off);
    t.first.push_back(a(mid, from));
    t.second.push_back(b(to, mid));
    off += a(mid, from) * b(to, mid);
  }
  return t;
}

}  // namespace

CVec NtSpace::flatten(const NatTrans& eta) const { return eta.flatten(); }

NatTrans NtSpace::unflatten(const CVec& x) const {
  if (x.size() != dim) structural_error("NT space: vector has the wrong length");
  return NatTrans::from_flat(dom, cod, x);
}

cplx NtSpace::inner(const CVec& a, const CVec& b) const {
  cplx t = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) t += weights[i] * std::conj(b[i]) * a[i];
  return t;
}

NatTrans NtSpace::identity() const {
  if (!dom.same_as(cod)) structural_error("NT space: identity needs equal 1-cells");
  return NatTrans::identity(dom);
}

void require_parallel(const UnitaryConnection& c1, const UnitaryConnection& c2) {
  if (!c1.source().structurally_equal(c2.source()) || !c1.target().structurally_equal(c2.target()))
    structural_error("1-cells are not parallel: their 0-cells differ");
}

NtSpace nt_space(const UnitaryConnection& c1, const UnitaryConnection& c2, int k) {
  require_parallel(c1, c2);
  GraphFunctor lam = c1.lambda(k);
  GraphFunctor om = c2.lambda(k);
  NtSpace sp{k, Chain(lam), Chain(om), {}, 0, RVec()};
  const RVec mu = c1.source().weights(k);
  const RVec nu = c1.target().weights(k);
  std::vector<double> w;
  for (int u = 0; u < lam.source().size(); ++u)
    for (int n = 0; n < lam.target().size(); ++n) {
      NtSpace::Block b{u, n, om.edges(n, u), lam.edges(n, u), sp.dim};
      sp.blocks.push_back(b);
      for (long long i = 0; i < b.rows * b.cols; ++i) w.push_back(mu[u] * nu[n]);
      sp.dim += b.rows * b.cols;
    }
  sp.weights = Eigen::Map<RVec>(w.data(), static_cast<Eigen::Index>(w.size()));
  return sp;
}

NatTrans loop_apply(const UnitaryConnection& c1, const UnitaryConnection& c2, int k,
                    const NatTrans& eta) {
  if (k < 1) structural_error("loop operator: level must be >= 1");
  NtSpace sp = nt_space(c1, c2, k);
  if (!eta.domain().same_as(sp.dom) || !eta.codomain().same_as(sp.cod))
    structural_error("loop operator: η is not in NT(Λ_k, Ω_k) at level " + std::to_string(k));
  NatTrans wl = c1.w(k);
  NatTrans wo = c2.w(k);
  NatTrans e = whisker_right(eta, c1.source().functor(k));
  NatTrans x = nt_vertical(nt_star(wo), nt_vertical(e, wl));

  NtSpace prev = nt_space(c1, c2, k - 1);
  NatTrans out(prev.dom, prev.cod);
  const RVec nu0 = c1.target().weights(k - 1);
  const RVec nu1 = c1.target().weights(k);
  const IMat delta = c1.target().functor(k).adjacency();
  const IMat lam0 = c1.lambda(k - 1).adjacency();
  const IMat om0 = c2.lambda(k - 1).adjacency();
  for (int m = 0; m < out.n_source(); ++m)
    for (int n = 0; n < static_cast<int>(delta.rows()); ++n) {
      const CMat& xb = x.block(m, n);
      TwoStep rows = two_step(om0, delta, m, n);
      TwoStep cols = two_step(lam0, delta, m, n);
      for (int np = 0; np < out.n_target(); ++np) {
        const long long nd = delta(n, np);
        if (nd == 0) continue;
        const double ratio = nu1[n] / nu0[np];
        CMat& ob = out.block(m, np);
        for (long long o = 0; o < om0(np, m); ++o)
          for (long long l = 0; l < lam0(np, m); ++l) {
            cplx s = 0.0;
            for (long long d = 0; d < nd; ++d)
              s += xb(rows.offset[np] + o * nd + d, cols.offset[np] + l * nd + d);
            ob(o, l) += ratio * s;
          }
      }
    }
  return out;
}

LoopOperator loop_matrix(const UnitaryConnection& c1, const UnitaryConnection& c2, int k) {
  if (k < 1) structural_error("loop operator: level must be >= 1");
  NtSpace hi = nt_space(c1, c2, k);
  NtSpace lo = nt_space(c1, c2, k - 1);
  LoopOperator op;
  op.level = k;
  op.matrix = CMat::Zero(lo.dim, hi.dim);
  op.adjoint_matrix = CMat::Zero(hi.dim, lo.dim);
  const RVec mu0 = c1.source().weights(k - 1), mu1 = c1.source().weights(k);
  const RVec nu0 = c1.target().weights(k - 1), nu1 = c1.target().weights(k);
  const IMat gamma = c1.source().functor(k).adjacency();
  const IMat delta = c1.target().functor(k).adjacency();
  const IMat lam0 = c1.lambda(k - 1).adjacency(), lam1 = c1.lambda(k).adjacency();
  const IMat om0 = c2.lambda(k - 1).adjacency(), om1 = c2.lambda(k).adjacency();
  const int nm0 = static_cast<int>(gamma.cols());
  const int nn1 = static_cast<int>(delta.rows());

  for (int m = 0; m < nm0; ++m)
    for (int n = 0; n < nn1; ++n) {
      const CMat& wl = c1.block(k, m, n);
      const CMat& wo = c2.block(k, m, n);
      // Rows: paths (u, g, l) through [Γ_k, Λ_k]; columns: (n', l', d) through [Λ_{k-1}, Δ_k].
      TwoStep rl = two_step(gamma, lam1, m, n), ro = two_step(gamma, om1, m, n);
      TwoStep cl = two_step(lam0, delta, m, n), co = two_step(om0, delta, m, n);
      for (int u = 0; u < static_cast<int>(gamma.rows()); ++u) {
        const NtSpace::Block& bh = hi.block(u, n);
        for (int np = 0; np < static_cast<int>(delta.cols()); ++np) {
          const NtSpace::Block& bl = lo.block(m, np);
          const long long nd = delta(n, np);
          if (nd == 0 || gamma(u, m) == 0) continue;
          const double fwd = nu1[n] / nu0[np];
          const double bwd = mu0[m] / mu1[u];
          for (long long op_ = 0; op_ < bl.rows; ++op_)
            for (long long lp = 0; lp < bl.cols; ++lp) {
              const long long row_lo = bl.offset + op_ * bl.cols + lp;
              for (long long o = 0; o < bh.rows; ++o)
                for (long long l = 0; l < bh.cols; ++l) {
                  const long long col_hi = bh.offset + o * bh.cols + l;
                  cplx acc = 0.0, acc_adj = 0.0;
                  for (long long g = 0; g < gamma(u, m); ++g)
                    for (long long d = 0; d < nd; ++d) {
                      cplx a = wo(ro.offset[u] + g * bh.rows + o, co.offset[np] + op_ * nd + d);
                      cplx b = wl(rl.offset[u] + g * bh.cols + l, cl.offset[np] + lp * nd + d);
                      acc += std::conj(a) * b;
                      acc_adj += a * std::conj(b);
                    }
                  op.matrix(row_lo, col_hi) += fwd * acc;
                  op.adjoint_matrix(col_hi, row_lo) += bwd * acc_adj;
                }
            }
        }
      }
    }

  // <S e_i, e_j>_{k-1} = <e_i, S* e_j>_k over the full bases.
  double res = 0.0;
  for (long long i = 0; i < hi.dim; ++i)
    for (long long j = 0; j < lo.dim; ++j) {
      cplx lhs = lo.weights[j] * op.matrix(j, i);
      cplx rhs = hi.weights[i] * std::conj(op.adjoint_matrix(i, j));
      res = std::max(res, std::abs(lhs - rhs));
    }
  const double scale = lo.weights.size() ? lo.weights.maxCoeff() : 1.0;
  op.adjoint_residual = res / scale;
  const Presentation& p = c1.presentation();
  op.endomorphic = p.period == 1 && k - 1 >= p.preperiod;
  return op;
}

double exchange_check(const UnitaryConnection& c1, const UnitaryConnection& c2, int k,
                      const NatTrans& eta_k, const NatTrans& eta_k1) {
  NatTrans lhs = nt_vertical(c2.w(k + 1), whisker_left(c1.target().functor(k + 1), eta_k));
  NatTrans rhs = nt_vertical(whisker_right(eta_k1, c1.source().functor(k + 1)), c1.w(k + 1));
  return max_abs_diff(lhs, rhs);
}

RVec gamma_loop(const TracialBratteli& b, int k) {
  const IMat g = b.functor(k).adjacency();
  RVec out = g.cast<double>() * b.weights(k - 1);
  return out.cwiseQuotient(b.weights(k));
}

ExchangeLoopResult exchange_via_loop(const UnitaryConnection& c1, const UnitaryConnection& c2,
                                     int k, const NatTrans& eta, const LoopOperator& s,
                                     double threshold, bool cross_check) {
  NtSpace sp = nt_space(c1, c2, k);
  const CVec x = sp.flatten(eta);
  const CVec ssx = s.adjoint_matrix * (s.matrix * x);
  const RVec loop = gamma_loop(c1.source(), k);
  CVec lx = x;
  for (const auto& b : sp.blocks)
    lx.segment(b.offset, b.rows * b.cols) *= loop[b.u];
  ExchangeLoopResult r;
  r.residual = (ssx - lx).cwiseAbs().maxCoeff();
  if (x.size() == 0) r.residual = 0.0;
  r.holds = r.residual < threshold;
  if (cross_check) {
    NtSpace lo = nt_space(c1, c2, k - 1);
    NatTrans seta = lo.unflatten(s.matrix * x);
    double e = exchange_check(c1, c2, k - 1, seta, eta);
    r.exchange_residual = e;
    r.agrees = (e < threshold) == r.holds;
  }
  return r;
}

CVec random_flat(const NtSpace& sp, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  CVec x(sp.dim);
  for (long long i = 0; i < sp.dim; ++i) {
    double re = normal(rng);
    double im = normal(rng);
    x[i] = cplx(re, im);
  }
  return x;
}

namespace {

double cstar_norm(const NatTrans& a) {
  double n = 0.0;
  for (int u = 0; u < a.n_source(); ++u)
    for (int w = 0; w < a.n_target(); ++w) {
      const CMat& b = a.block(u, w);
      if (b.size() == 0) continue;
      Eigen::JacobiSVD<CMat> svd(b);
      n = std::max(n, svd.singularValues()(0));
    }
  return n;
}

}  // namespace

UcpReport ucp_suite(const UnitaryConnection& c, int k, const LoopOperator& s, int samples,
                    unsigned long long seed) {
  UcpReport rep;
  NtSpace hi = nt_space(c, c, k);
  NtSpace lo = nt_space(c, c, k - 1);
  auto apply = [&](const NatTrans& eta) { return lo.unflatten(s.matrix * hi.flatten(eta)); };

  rep.unital_residual = max_abs_diff(apply(hi.identity()), lo.identity());

  // S(E_ab) must equal S(E_ba)* for every matrix unit.
  for (const auto& b : hi.blocks)
    for (long long r = 0; r < b.rows; ++r)
      for (long long q = 0; q < b.cols; ++q) {
        CVec col = s.matrix.col(b.offset + r * b.cols + q);
        CVec colt = s.matrix.col(b.offset + q * b.cols + r);
        NatTrans a = lo.unflatten(col);
        NatTrans bt = nt_star(lo.unflatten(colt));
        rep.star_residual = std::max(rep.star_residual, max_abs_diff(a, bt));
      }

  std::mt19937_64 rng(seed);
  rep.schwarz_min_eig = std::numeric_limits<double>::infinity();
  for (int t = 0; t < samples; ++t) {
    NatTrans eta = hi.unflatten(random_flat(hi, rng));
    NatTrans se = apply(eta);
    NatTrans defect = apply(nt_vertical(nt_star(eta), eta)) - nt_vertical(nt_star(se), se);
    for (int u = 0; u < defect.n_source(); ++u)
      for (int w = 0; w < defect.n_target(); ++w) {
        const CMat& b = defect.block(u, w);
        if (b.size() == 0) continue;
        CMat h = (b + b.adjoint()) / 2.0;
        Eigen::SelfAdjointEigenSolver<CMat> es(h);
        rep.schwarz_min_eig = std::min(rep.schwarz_min_eig, es.eigenvalues().minCoeff());
      }
    double ne = cstar_norm(eta);
    if (ne > 0) rep.cstar_ratio = std::max(rep.cstar_ratio, cstar_norm(se) / ne);
  }
  if (!std::isfinite(rep.schwarz_min_eig)) rep.schwarz_min_eig = 0.0;

  if (s.endomorphic && s.matrix.rows() == s.matrix.cols() && s.matrix.size() > 0) {
    Eigen::ComplexEigenSolver<CMat> es(s.matrix, false);
    rep.spectral_radius = es.eigenvalues().cwiseAbs().maxCoeff();
  }

  // Normalized traces τ_k = Tr_k / Tr_k(1).
  const RVec loop = gamma_loop(c.source(), k);
  rep.two_norm_applicable = (loop.maxCoeff() - loop.minCoeff()) <= 1e-12 * loop.maxCoeff();
  const CVec one_hi = hi.flatten(hi.identity()), one_lo = lo.flatten(lo.identity());
  const double t_hi = hi.inner(one_hi, one_hi).real(), t_lo = lo.inner(one_lo, one_lo).real();
  RVec ghi = (hi.weights / t_hi).cwiseSqrt(), glo = (lo.weights / t_lo).cwiseSqrt();
  CMat scaled = glo.asDiagonal() * s.matrix * ghi.cwiseInverse().asDiagonal();
  if (scaled.size() > 0) {
    Eigen::JacobiSVD<CMat> svd(scaled);
    rep.normalized_two_norm = svd.singularValues()(0);
  }

  auto fail = [&rep](const std::string& what) {
    rep.ok = false;
    rep.failures.push_back(what);
  };
  if (rep.unital_residual >= 1e-10) fail("unitality");
  if (rep.star_residual >= 1e-12) fail("*-preservation");
  if (rep.schwarz_min_eig < -1e-9) fail("Schwarz inequality");
  if (rep.cstar_ratio > 1.0 + 1e-9) fail("C*-norm contraction");
  if (rep.spectral_radius && *rep.spectral_radius > 1.0 + 1e-9) fail("spectral radius");
  if (rep.two_norm_applicable && rep.normalized_two_norm > 1.0 + 1e-9) fail("trace-norm contraction");
  return rep;
}

}  // namespace conncalc
