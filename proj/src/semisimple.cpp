#include "conncalc/semisimple.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace conncalc {

void structural_error(const std::string& what) {
  throw Error(ErrorKind::Structural, what);
}

WeightedCategory::WeightedCategory(std::vector<std::string> labels_in, RVec weights_in)
    : labels(std::move(labels_in)), weights(std::move(weights_in)) {
  if (static_cast<Eigen::Index>(labels.size()) != weights.size())
    structural_error("category: label count differs from weight count");
  std::set<std::string> seen;
  for (size_t i = 0; i < labels.size(); ++i) {
    if (!seen.insert(labels[i]).second)
      structural_error("category: duplicate label '" + labels[i] + "'");
    if (!(weights[static_cast<Eigen::Index>(i)] > 0.0) ||
        !std::isfinite(weights[static_cast<Eigen::Index>(i)]))
      structural_error("category: weight of '" + labels[i] + "' is not positive");
  }
}

WeightedCategory WeightedCategory::scaled(double factor) const {
  WeightedCategory c;
  c.labels = labels;
  c.weights = weights * factor;
  return c;
}

WeightedCategory WeightedCategory::trivial() {
  RVec w(1);
  w << 1.0;
  return WeightedCategory({"*"}, w);
}

long long PathBasis::index(int v, int w, const PathTriple& t) const {
  const auto& ps = paths(v, w);
  auto it = std::find(ps.begin(), ps.end(), t);
  if (it == ps.end()) structural_error("path basis: path not found");
  return it - ps.begin();
}

GraphFunctor::GraphFunctor(WeightedCategory source, WeightedCategory target, IMat adjacency)
    : source_(std::move(source)), target_(std::move(target)), adj_(std::move(adjacency)) {
  if (adj_.rows() != target_.size() || adj_.cols() != source_.size())
    structural_error("functor: adjacency shape does not match |target| x |source|");
  if ((adj_.array() < 0).any()) structural_error("functor: negative multiplicity");
  for (Eigen::Index r = 0; r < adj_.rows(); ++r)
    if (adj_.row(r).sum() == 0)
      structural_error("functor: target simple '" + target_.labels[r] + "' is isolated");
  for (Eigen::Index c = 0; c < adj_.cols(); ++c)
    if (adj_.col(c).sum() == 0)
      structural_error("functor: source simple '" + source_.labels[c] + "' is isolated");
}

std::vector<int> GraphFunctor::expand_edge(int v, int w, long long e) const {
  if (!is_composite()) return {v, static_cast<int>(e), w};
  const PathTriple& t = basis_->paths(v, w).at(static_cast<size_t>(e));
  std::vector<int> a = first_->expand_edge(v, t.mid, t.first_edge);
  std::vector<int> b = second_->expand_edge(t.mid, w, t.second_edge);
  a.insert(a.end(), b.begin() + 1, b.end());
  return a;
}

std::vector<const GraphFunctor*> GraphFunctor::primitives() const {
  if (!is_composite()) return {this};
  auto a = first_->primitives();
  auto b = second_->primitives();
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

bool GraphFunctor::same_as(const GraphFunctor& o) const {
  if (!source_.same_objects(o.source_) || !target_.same_objects(o.target_)) return false;
  if (adj_ != o.adj_) return false;
  if (is_composite() != o.is_composite()) return false;
  if (!is_composite()) return true;
  return first_->same_as(*o.first_) && second_->same_as(*o.second_);
}

GraphFunctor GraphFunctor::rescaled(double factor) const {
  if (!is_composite())
    return GraphFunctor(source_.scaled(factor), target_.scaled(factor), adj_);
  return compose_functors(first_->rescaled(factor), second_->rescaled(factor)).functor;
}

ComposedFunctor compose_functors(const GraphFunctor& first, const GraphFunctor& second) {
  if (!first.target().same_objects(second.source()))
    structural_error("compose: target of first functor differs from source of second");
  IMat adj = second.adjacency() * first.adjacency();
  const int ns = first.source().size();
  const int nt = second.target().size();
  const int nm = first.target().size();
  PathBasis basis(ns, nt);
  for (int v = 0; v < ns; ++v)
    for (int w = 0; w < nt; ++w) {
      auto& ps = basis.paths(v, w);
      for (int m = 0; m < nm; ++m)
        for (long long a = 0; a < first.edges(m, v); ++a)
          for (long long b = 0; b < second.edges(w, m); ++b) ps.push_back({m, a, b});
    }
  GraphFunctor g(first.source(), second.target(), adj);
  g.first_ = std::make_shared<const GraphFunctor>(first);
  g.second_ = std::make_shared<const GraphFunctor>(second);
  g.basis_ = std::make_shared<const PathBasis>(basis);
  return {g, basis};
}

GraphFunctor adjoint_functor(const GraphFunctor& f) {
  return GraphFunctor(f.target(), f.source(), f.adjacency().transpose());
}

// ---------------------------------------------------------------- Chain

Chain::Chain(WeightedCategory base) : source_(std::move(base)) {}

Chain::Chain(const GraphFunctor& f) : source_(f.source()), fs_{f} {}

Chain::Chain(std::vector<GraphFunctor> fs) {
  if (fs.empty()) structural_error("chain: use the base-category constructor for identity");
  source_ = fs.front().source();
  for (size_t i = 1; i < fs.size(); ++i)
    if (!fs[i - 1].target().same_objects(fs[i].source()))
      structural_error("chain: functors are not composable");
  fs_ = std::move(fs);
}

const WeightedCategory& Chain::target() const {
  return fs_.empty() ? source_ : fs_.back().target();
}

Chain Chain::then(const GraphFunctor& f) const {
  if (!target().same_objects(f.source())) structural_error("chain: cannot append functor");
  Chain c = *this;
  c.fs_.push_back(f);
  return c;
}

Chain Chain::then(const Chain& other) const {
  if (!target().same_objects(other.source())) structural_error("chain: cannot append chain");
  Chain c = *this;
  c.fs_.insert(c.fs_.end(), other.fs_.begin(), other.fs_.end());
  return c;
}

Chain Chain::after(const GraphFunctor& f) const {
  if (!f.target().same_objects(source())) structural_error("chain: cannot prepend functor");
  Chain c(f.source());
  c.fs_.push_back(f);
  c.fs_.insert(c.fs_.end(), fs_.begin(), fs_.end());
  return c;
}

IMat Chain::counts() const {
  IMat m = IMat::Identity(source_.size(), source_.size());
  for (const auto& f : fs_) m = f.adjacency() * m;
  return m;
}

std::vector<std::vector<Path>> Chain::paths_from(int v) const {
  std::vector<std::vector<Path>> cur(static_cast<size_t>(source_.size()));
  cur[static_cast<size_t>(v)].push_back(Path{v});
  for (const auto& f : fs_) {
    std::vector<std::vector<Path>> next(static_cast<size_t>(f.target().size()));
    for (int w = 0; w < f.target().size(); ++w)
      for (int mid = 0; mid < f.source().size(); ++mid) {
        const long long ne = f.edges(w, mid);
        if (ne == 0) continue;
        for (const Path& p : cur[static_cast<size_t>(mid)])
          for (long long e = 0; e < ne; ++e) {
            Path q = p;
            q.push_back(static_cast<int>(e));
            q.push_back(w);
            next[static_cast<size_t>(w)].push_back(std::move(q));
          }
      }
    cur = std::move(next);
  }
  return cur;
}

Path Chain::expand(const Path& p) const {
  Path out{p.front()};
  for (size_t i = 0; i < fs_.size(); ++i) {
    auto sub = fs_[i].expand_edge(p[2 * i], p[2 * i + 2], p[2 * i + 1]);
    out.insert(out.end(), sub.begin() + 1, sub.end());
  }
  return out;
}

std::vector<const GraphFunctor*> Chain::primitives() const {
  std::vector<const GraphFunctor*> out;
  for (const auto& f : fs_) {
    auto p = f.primitives();
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

bool Chain::same_as(const Chain& o) const {
  if (!source_.same_objects(o.source_) || fs_.size() != o.fs_.size()) return false;
  for (size_t i = 0; i < fs_.size(); ++i)
    if (!fs_[i].same_as(o.fs_[i])) return false;
  return true;
}

// ---------------------------------------------------------------- NatTrans

NatTrans::NatTrans(Chain dom, Chain cod) : dom_(std::move(dom)), cod_(std::move(cod)) {
  if (!dom_.source().same_objects(cod_.source()) || !dom_.target().same_objects(cod_.target()))
    structural_error("natural transformation: domain and codomain are not parallel");
  IMat cd = dom_.counts();
  IMat cc = cod_.counts();
  blocks_.resize(static_cast<size_t>(n_source()) * n_target());
  for (int v = 0; v < n_source(); ++v)
    for (int w = 0; w < n_target(); ++w) block(v, w) = CMat::Zero(cc(w, v), cd(w, v));
}

NatTrans NatTrans::identity(const Chain& c) {
  NatTrans id(c, c);
  for (auto& b : id.blocks_) b.setIdentity();
  return id;
}

CVec NatTrans::flatten() const {
  CVec x(flat_dim());
  Eigen::Index k = 0;
  for (const auto& b : blocks_)
    for (Eigen::Index r = 0; r < b.rows(); ++r)
      for (Eigen::Index c = 0; c < b.cols(); ++c) x[k++] = b(r, c);
  return x;
}

NatTrans NatTrans::from_flat(const Chain& dom, const Chain& cod, const CVec& x) {
  NatTrans n(dom, cod);
  if (x.size() != n.flat_dim()) structural_error("natural transformation: flat size mismatch");
  Eigen::Index k = 0;
  for (auto& b : n.blocks_)
    for (Eigen::Index r = 0; r < b.rows(); ++r)
      for (Eigen::Index c = 0; c < b.cols(); ++c) b(r, c) = x[k++];
  return n;
}

long long NatTrans::flat_dim() const {
  long long d = 0;
  for (const auto& b : blocks_) d += b.size();
  return d;
}

NatTrans NatTrans::rebased(const Chain& dom, const Chain& cod) const {
  NatTrans n(dom, cod);
  if (n.blocks_.size() != blocks_.size()) structural_error("rebase: category sizes differ");
  for (size_t i = 0; i < blocks_.size(); ++i) {
    if (n.blocks_[i].rows() != blocks_[i].rows() || n.blocks_[i].cols() != blocks_[i].cols())
      structural_error("rebase: path counts differ");
    n.blocks_[i] = blocks_[i];
  }
  return n;
}

double NatTrans::max_abs() const {
  double m = 0.0;
  for (const auto& b : blocks_)
    if (b.size() > 0) m = std::max(m, b.cwiseAbs().maxCoeff());
  return m;
}

static void check_parallel_same(const NatTrans& a, const NatTrans& b) {
  if (!a.domain().same_as(b.domain()) || !a.codomain().same_as(b.codomain()))
    structural_error("natural transformations are not between the same chains");
}

NatTrans& NatTrans::operator+=(const NatTrans& o) {
  check_parallel_same(*this, o);
  for (size_t i = 0; i < blocks_.size(); ++i) blocks_[i] += o.blocks_[i];
  return *this;
}

NatTrans& NatTrans::operator-=(const NatTrans& o) {
  check_parallel_same(*this, o);
  for (size_t i = 0; i < blocks_.size(); ++i) blocks_[i] -= o.blocks_[i];
  return *this;
}

NatTrans& NatTrans::operator*=(cplx s) {
  for (auto& b : blocks_) b *= s;
  return *this;
}

NatTrans operator+(NatTrans a, const NatTrans& b) { return a += b; }
NatTrans operator-(NatTrans a, const NatTrans& b) { return a -= b; }
NatTrans operator*(cplx s, NatTrans a) { return a *= s; }

double max_abs_diff(const NatTrans& a, const NatTrans& b) { return (a - b).max_abs(); }

NatTrans nt_vertical(const NatTrans& a, const NatTrans& b) {
  if (!a.domain().same_as(b.codomain()))
    structural_error("vertical composition: codomain of the inner map differs from domain of the outer");
  NatTrans r(b.domain(), a.codomain());
  for (int v = 0; v < r.n_source(); ++v)
    for (int w = 0; w < r.n_target(); ++w) r.block(v, w) = a.block(v, w) * b.block(v, w);
  return r;
}

NatTrans nt_star(const NatTrans& a) {
  NatTrans r(a.codomain(), a.domain());
  for (int v = 0; v < r.n_source(); ++v)
    for (int w = 0; w < r.n_target(); ++w) r.block(v, w) = a.block(v, w).adjoint();
  return r;
}

namespace {

using PathIndex = std::map<Path, int>;

std::vector<PathIndex> index_paths(const std::vector<std::vector<Path>>& groups) {
  std::vector<PathIndex> out(groups.size());
  for (size_t w = 0; w < groups.size(); ++w)
    for (size_t i = 0; i < groups[w].size(); ++i) out[w][groups[w][i]] = static_cast<int>(i);
  return out;
}

// Entry (new index, old index, old endpoint) grouped by a key.
struct Slot {
  int fresh;
  int old;
};
using Groups = std::map<std::pair<int, int>, std::pair<int, std::vector<Slot>>>;

}  // namespace

NatTrans whisker_left(const GraphFunctor& f, const NatTrans& eta) {
  Chain dom = eta.domain().then(f);
  Chain cod = eta.codomain().then(f);
  NatTrans r(dom, cod);
  for (int v = 0; v < r.n_source(); ++v) {
    auto a_idx = index_paths(eta.domain().paths_from(v));
    auto b_idx = index_paths(eta.codomain().paths_from(v));
    auto in_paths = dom.paths_from(v);
    auto out_paths = cod.paths_from(v);
    for (int w = 0; w < r.n_target(); ++w) {
      auto collect = [](const std::vector<Path>& ps, const std::vector<PathIndex>& idx) {
        Groups g;
        for (size_t i = 0; i < ps.size(); ++i) {
          const Path& p = ps[i];
          int mid = p[p.size() - 3];
          int e = p[p.size() - 2];
          Path prefix(p.begin(), p.end() - 2);
          auto& slot = g[{mid, e}];
          slot.first = mid;
          slot.second.push_back({static_cast<int>(i), idx[static_cast<size_t>(mid)].at(prefix)});
        }
        return g;
      };
      Groups gin = collect(in_paths[static_cast<size_t>(w)], a_idx);
      Groups gout = collect(out_paths[static_cast<size_t>(w)], b_idx);
      CMat& R = r.block(v, w);
      for (const auto& [key, in] : gin) {
        auto it = gout.find(key);
        if (it == gout.end()) continue;
        const CMat& E = eta.block(v, in.first);
        for (const Slot& s_in : in.second)
          for (const Slot& s_out : it->second.second) R(s_out.fresh, s_in.fresh) = E(s_out.old, s_in.old);
      }
    }
  }
  return r;
}

NatTrans whisker_left(const Chain& f, const NatTrans& eta) {
  NatTrans r = eta;
  for (const auto& g : f.functors()) r = whisker_left(g, r);
  return r;
}

NatTrans whisker_right(const NatTrans& eta, const GraphFunctor& f) {
  Chain dom = eta.domain().after(f);
  Chain cod = eta.codomain().after(f);
  NatTrans r(dom, cod);
  const int nmid = f.target().size();
  std::vector<std::vector<PathIndex>> a_idx, b_idx;
  for (int m = 0; m < nmid; ++m) {
    a_idx.push_back(index_paths(eta.domain().paths_from(m)));
    b_idx.push_back(index_paths(eta.codomain().paths_from(m)));
  }
  for (int u = 0; u < r.n_source(); ++u) {
    auto in_paths = dom.paths_from(u);
    auto out_paths = cod.paths_from(u);
    for (int w = 0; w < r.n_target(); ++w) {
      auto collect = [w](const std::vector<Path>& ps,
                         const std::vector<std::vector<PathIndex>>& idx) {
        Groups g;
        for (size_t i = 0; i < ps.size(); ++i) {
          const Path& p = ps[i];
          int e = p[1];
          int mid = p[2];
          Path rest(p.begin() + 2, p.end());
          auto& slot = g[{mid, e}];
          slot.first = mid;
          slot.second.push_back(
              {static_cast<int>(i),
               idx[static_cast<size_t>(mid)][static_cast<size_t>(w)].at(rest)});
        }
        return g;
      };
      Groups gin = collect(in_paths[static_cast<size_t>(w)], a_idx);
      Groups gout = collect(out_paths[static_cast<size_t>(w)], b_idx);
      CMat& R = r.block(u, w);
      for (const auto& [key, in] : gin) {
        auto it = gout.find(key);
        if (it == gout.end()) continue;
        const CMat& E = eta.block(in.first, w);
        for (const Slot& s_in : in.second)
          for (const Slot& s_out : it->second.second) R(s_out.fresh, s_in.fresh) = E(s_out.old, s_in.old);
      }
    }
  }
  return r;
}

NatTrans whisker_right(const NatTrans& eta, const Chain& f) {
  NatTrans r = eta;
  const auto& fs = f.functors();
  for (auto it = fs.rbegin(); it != fs.rend(); ++it) r = whisker_right(r, *it);
  return r;
}

NatTrans nt_tensor(const NatTrans& inner, const NatTrans& outer) {
  return nt_vertical(whisker_left(outer.codomain(), inner),
                     whisker_right(outer, inner.domain()));
}

NatTrans convert(const NatTrans& eta, const Chain& dom, const Chain& cod) {
  auto same_primitives = [](const Chain& a, const Chain& b) {
    auto pa = a.primitives();
    auto pb = b.primitives();
    if (!a.source().same_objects(b.source()) || pa.size() != pb.size()) return false;
    for (size_t i = 0; i < pa.size(); ++i)
      if (!pa[i]->same_as(*pb[i])) return false;
    return true;
  };
  if (!same_primitives(eta.domain(), dom) || !same_primitives(eta.codomain(), cod))
    structural_error("convert: chains do not expand to the same primitive functors");
  NatTrans r(dom, cod);
  auto permutation = [](const Chain& from, const Chain& to, int v) {
    auto pf = from.paths_from(v);
    auto pt = to.paths_from(v);
    std::vector<std::vector<int>> perm(pf.size());
    for (size_t w = 0; w < pf.size(); ++w) {
      std::map<Path, int> target_index;
      for (size_t i = 0; i < pt[w].size(); ++i)
        target_index[to.expand(pt[w][i])] = static_cast<int>(i);
      for (const Path& p : pf[w]) perm[w].push_back(target_index.at(from.expand(p)));
    }
    return perm;
  };
  for (int v = 0; v < r.n_source(); ++v) {
    auto pin = permutation(eta.domain(), dom, v);
    auto pout = permutation(eta.codomain(), cod, v);
    for (int w = 0; w < r.n_target(); ++w) {
      const CMat& E = eta.block(v, w);
      CMat& R = r.block(v, w);
      for (Eigen::Index i = 0; i < E.rows(); ++i)
        for (Eigen::Index j = 0; j < E.cols(); ++j)
          R(pout[static_cast<size_t>(w)][static_cast<size_t>(i)],
            pin[static_cast<size_t>(w)][static_cast<size_t>(j)]) = E(i, j);
    }
  }
  return r;
}

// ---------------------------------------------------------------- duality

DualitySolution DualitySolution::tracial(const GraphFunctor& f, const RVec& mu_source,
                                         const RVec& mu_target) {
  if (mu_source.size() != f.source().size() || mu_target.size() != f.target().size())
    structural_error("duality: weight vectors do not match the functor");
  RMat k(mu_target.size(), mu_source.size());
  for (Eigen::Index w = 0; w < k.rows(); ++w)
    for (Eigen::Index v = 0; v < k.cols(); ++v) k(w, v) = mu_target[w] / mu_source[v];
  return DualitySolution{f, k};
}

static void check_duality(const GraphFunctor& f, const DualitySolution& d) {
  if (!f.same_as(d.functor)) structural_error("duality solution belongs to a different functor");
}

NatTrans cup(const GraphFunctor& f, const DualitySolution& d) {
  check_duality(f, d);
  Chain cod = Chain(f).then(adjoint_functor(f));
  NatTrans r(Chain(f.source()), cod);
  for (int v = 0; v < f.source().size(); ++v) {
    auto ps = cod.paths_from(v)[static_cast<size_t>(v)];
    CMat& b = r.block(v, v);
    for (size_t i = 0; i < ps.size(); ++i)
      if (ps[i][1] == ps[i][3]) b(static_cast<Eigen::Index>(i), 0) = std::sqrt(d.kappa_ts(ps[i][2], v));
  }
  return r;
}

NatTrans cap(const GraphFunctor& f, const DualitySolution& d) { return nt_star(cup(f, d)); }

NatTrans cup_target(const GraphFunctor& f, const DualitySolution& d) {
  check_duality(f, d);
  Chain cod = Chain(adjoint_functor(f)).then(f);
  NatTrans r(Chain(f.target()), cod);
  for (int w = 0; w < f.target().size(); ++w) {
    auto ps = cod.paths_from(w)[static_cast<size_t>(w)];
    CMat& b = r.block(w, w);
    for (size_t i = 0; i < ps.size(); ++i)
      if (ps[i][1] == ps[i][3]) b(static_cast<Eigen::Index>(i), 0) = std::sqrt(d.kappa_st(ps[i][2], w));
  }
  return r;
}

NatTrans cap_target(const GraphFunctor& f, const DualitySolution& d) {
  return nt_star(cup_target(f, d));
}

RVec loop_source(const DualitySolution& d) {
  const IMat& n = d.functor.adjacency();
  RVec out = RVec::Zero(n.cols());
  for (Eigen::Index v = 0; v < n.cols(); ++v)
    for (Eigen::Index w = 0; w < n.rows(); ++w) out[v] += static_cast<double>(n(w, v)) * d.kappa(w, v);
  return out;
}

RVec loop_target(const DualitySolution& d) {
  const IMat& n = d.functor.adjacency();
  RVec out = RVec::Zero(n.rows());
  for (Eigen::Index w = 0; w < n.rows(); ++w)
    for (Eigen::Index v = 0; v < n.cols(); ++v) out[w] += static_cast<double>(n(w, v)) / d.kappa(w, v);
  return out;
}

double zigzag_residual(const GraphFunctor& f, const DualitySolution& d) {
  GraphFunctor fa = adjoint_functor(f);
  NatTrans rho_src = cup(f, d);
  NatTrans rho_tgt = cup_target(f, d);
  NatTrans z1 = nt_vertical(nt_star(whisker_right(rho_tgt, f)), whisker_left(f, rho_src));
  NatTrans z2 = nt_vertical(nt_star(whisker_right(rho_src, fa)), whisker_left(fa, rho_tgt));
  double r1 = max_abs_diff(z1, NatTrans::identity(Chain(f)));
  double r2 = max_abs_diff(z2, NatTrans::identity(Chain(fa)));
  return std::max(r1, r2);
}

// ---------------------------------------------------------------- traces

cplx categorical_trace(const std::vector<long long>& multiplicities,
                       const std::vector<CMat>& alpha, const WeightedCategory& cat) {
  if (static_cast<int>(multiplicities.size()) != cat.size() ||
      static_cast<int>(alpha.size()) != cat.size())
    structural_error("categorical trace: object does not match the category");
  cplx t = 0.0;
  for (int v = 0; v < cat.size(); ++v) {
    const CMat& a = alpha[static_cast<size_t>(v)];
    if (a.rows() != multiplicities[static_cast<size_t>(v)] || a.cols() != a.rows())
      structural_error("categorical trace: block size differs from multiplicity");
    t += cat.weights[v] * a.trace();
  }
  return t;
}

cplx nt_trace(const NatTrans& eta, const RVec& mu, const RVec& nu) {
  if (!eta.domain().same_as(eta.codomain()))
    structural_error("trace: natural transformation is not an endomorphism");
  if (mu.size() != eta.n_source() || nu.size() != eta.n_target())
    structural_error("trace: weight vectors do not match");
  cplx t = 0.0;
  for (int u = 0; u < eta.n_source(); ++u)
    for (int w = 0; w < eta.n_target(); ++w) t += mu[u] * nu[w] * eta.block(u, w).trace();
  return t;
}

cplx nt_trace(const NatTrans& eta) {
  return nt_trace(eta, eta.domain().source().weights, eta.domain().target().weights);
}

cplx nt_inner(const NatTrans& eta, const NatTrans& kappa, const RVec& mu, const RVec& nu) {
  check_parallel_same(eta, kappa);
  cplx t = 0.0;
  for (int u = 0; u < eta.n_source(); ++u)
    for (int w = 0; w < eta.n_target(); ++w)
      t += mu[u] * nu[w] * (kappa.block(u, w).adjoint() * eta.block(u, w)).trace();
  return t;
}

cplx nt_inner(const NatTrans& eta, const NatTrans& kappa) {
  return nt_inner(eta, kappa, eta.domain().source().weights, eta.domain().target().weights);
}

TraceCompatResult nt_trace_compat_check(const GraphFunctor& lambda,
                                        const GraphFunctor& sigma, const NatTrans& eta,
                                        const RVec& mu, const RVec& nu, const RVec& pi) {
  Chain sl = Chain(lambda).then(sigma);
  if (!eta.domain().same_as(sl) || !eta.codomain().same_as(sl))
    structural_error("trace compatibility: eta is not an endomorphism of sigma∘lambda");
  TraceCompatResult out{};
  out.total = nt_trace(eta, mu, pi);

  GraphFunctor sigma_bar = adjoint_functor(sigma);
  NatTrans beta = cup(sigma, DualitySolution::tracial(sigma, nu, pi));
  NatTrans beta_l = whisker_right(beta, lambda);
  NatTrans x = nt_vertical(nt_star(beta_l), nt_vertical(whisker_left(sigma_bar, eta), beta_l));
  out.via_lambda = nt_trace(x, mu, nu);

  GraphFunctor lambda_bar = adjoint_functor(lambda);
  NatTrans rho = cup_target(lambda, DualitySolution::tracial(lambda, mu, nu));
  NatTrans s_rho = whisker_left(sigma, rho);
  NatTrans y = nt_vertical(nt_star(s_rho), nt_vertical(whisker_right(eta, lambda_bar), s_rho));
  out.via_sigma = nt_trace(y, nu, pi);

  out.residual = std::max(std::abs(out.via_lambda - out.total), std::abs(out.via_sigma - out.total));
  return out;
}

ObjectTraceResult object_trace_compat(const GraphFunctor& x, const GraphFunctor& f,
                                      bool x_in_target, const NatTrans& alpha,
                                      const RVec& mu_source, const RVec& mu_target) {
  RVec one = RVec::Ones(1);
  DualitySolution d = DualitySolution::tracial(f, mu_source, mu_target);
  ObjectTraceResult out{};
  if (x_in_target) {
    NatTrans rho_x = whisker_right(cup_target(f, d), x);
    NatTrans inner = nt_vertical(nt_star(rho_x), nt_vertical(whisker_left(f, alpha), rho_x));
    out.lhs = nt_trace(inner, one, mu_target);
    out.rhs = nt_trace(alpha, one, mu_source);
  } else {
    NatTrans rho_x = whisker_right(cup(f, d), x);
    NatTrans inner =
        nt_vertical(nt_star(rho_x), nt_vertical(whisker_left(adjoint_functor(f), alpha), rho_x));
    out.lhs = nt_trace(inner, one, mu_source);
    out.rhs = nt_trace(alpha, one, mu_target);
  }
  out.residual = std::abs(out.lhs - out.rhs);
  return out;
}

}  // namespace conncalc
