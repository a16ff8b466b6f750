#include "conncalc/bratteli.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

namespace conncalc {

TracialBratteli::TracialBratteli(std::vector<WeightedCategory> levels, std::vector<IMat> adjacency,
                                 Presentation presentation)
    : levels_(std::move(levels)), adj_(std::move(adjacency)), pres_(presentation) {
  if (pres_.preperiod < 0 || pres_.period < 1)
    structural_error("0-cell: preperiod must be >= 0 and period >= 1");
  if (!(pres_.pf_scalar > 0.0)) structural_error("0-cell: pf_scalar must be positive");
  const size_t expect = static_cast<size_t>(pres_.preperiod + pres_.period) + 1;
  if (levels_.size() != expect)
    structural_error("0-cell: expected " + std::to_string(expect) + " stored levels, got " +
                     std::to_string(levels_.size()));
  if (adj_.size() + 1 != levels_.size())
    structural_error("0-cell: expected one functor per stored level after level 0");
  for (size_t k = 1; k < levels_.size(); ++k) {
    const IMat& a = adj_[k - 1];
    if (a.rows() != levels_[k].size() || a.cols() != levels_[k - 1].size())
      structural_error("0-cell: functor " + std::to_string(k) + " has the wrong shape");
  }
  if (!levels_.back().same_objects(levels_[static_cast<size_t>(pres_.preperiod)]))
    structural_error("0-cell: level L+K must repeat the labels of level L");
}

std::pair<int, int> TracialBratteli::representative(int k) const {
  const int L = pres_.preperiod, K = pres_.period;
  if (k < 0) structural_error("0-cell: negative level");
  if (k <= L + K) return {k, 0};
  const int j = L + ((k - L - 1) % K) + 1;
  return {j, (k - j) / K};
}

RVec TracialBratteli::weights(int k) const {
  auto [j, n] = representative(k);
  return levels_[static_cast<size_t>(j)].weights * std::pow(pres_.pf_scalar, -n);
}

WeightedCategory TracialBratteli::level(int k) const {
  auto [j, n] = representative(k);
  return levels_[static_cast<size_t>(j)].scaled(std::pow(pres_.pf_scalar, -n));
}

GraphFunctor TracialBratteli::functor(int k) const {
  if (k < 1) structural_error("0-cell: functors start at level 1");
  auto [j, n] = representative(k);
  (void)n;
  return GraphFunctor(level(k - 1), level(k), adj_[static_cast<size_t>(j - 1)]);
}

TracialBratteli TracialBratteli::unfold(int preperiod, int period) const {
  if (preperiod < pres_.preperiod || period % pres_.period != 0)
    structural_error("0-cell: can only unfold to a longer preperiod and a multiple period");
  std::vector<WeightedCategory> lv;
  std::vector<IMat> ad;
  for (int k = 0; k <= preperiod + period; ++k) {
    lv.push_back(level(k));
    if (k >= 1) {
      auto [j, n] = representative(k);
      (void)n;
      ad.push_back(adj_[static_cast<size_t>(j - 1)]);
    }
  }
  const int reps = period / pres_.period;
  Presentation p{preperiod, period, std::pow(pres_.pf_scalar, reps)};
  return TracialBratteli(std::move(lv), std::move(ad), p);
}

bool TracialBratteli::structurally_equal(const TracialBratteli& o) const {
  if (pres_.preperiod != o.pres_.preperiod || pres_.period != o.pres_.period) return false;
  if (std::abs(pres_.pf_scalar - o.pres_.pf_scalar) > 1e-12 * pres_.pf_scalar) return false;
  for (size_t k = 0; k < levels_.size(); ++k) {
    if (!levels_[k].same_objects(o.levels_[k])) return false;
    if ((levels_[k].weights - o.levels_[k].weights).cwiseAbs().maxCoeff() >
        1e-12 * levels_[k].weights.cwiseAbs().maxCoeff())
      return false;
  }
  for (size_t k = 0; k < adj_.size(); ++k)
    if (adj_[k] != o.adj_[k]) return false;
  return true;
}

ZeroCellReport validate_zero_cell(const TracialBratteli& b, double tol) {
  ZeroCellReport rep;
  auto fail = [&rep](const std::string& e) {
    rep.ok = false;
    rep.errors.push_back(e);
  };
  const int L = b.presentation().preperiod, K = b.presentation().period;
  rep.normalization_residual = std::abs(b.stored_level(0).weights.sum() - 1.0);
  if (rep.normalization_residual > 1e-10)
    fail("level 0 weights sum to " + std::to_string(b.stored_level(0).weights.sum()) + ", not 1");
  for (int k = 1; k < b.stored_levels(); ++k) {
    const IMat& a = b.stored_adjacency(k);
    for (Eigen::Index r = 0; r < a.rows(); ++r)
      if (a.row(r).sum() == 0) fail("functor " + std::to_string(k) + ": target simple " +
                                    b.stored_level(k).labels[r] + " is isolated");
    for (Eigen::Index c = 0; c < a.cols(); ++c)
      if (a.col(c).sum() == 0) fail("functor " + std::to_string(k) + ": source simple " +
                                    b.stored_level(k - 1).labels[c] + " is isolated");
    RVec lhs = a.cast<double>().transpose() * b.stored_level(k).weights;
    const RVec& rhs = b.stored_level(k - 1).weights;
    double res = (lhs - rhs).cwiseAbs().maxCoeff() / std::max(1.0, rhs.cwiseAbs().maxCoeff());
    rep.trace_residuals.push_back(res);
    if (res > tol) fail("trace condition fails at level " + std::to_string(k) +
                        " (residual " + std::to_string(res) + ")");
  }
  const RVec& wl = b.stored_level(L).weights;
  const RVec& wlk = b.stored_level(L + K).weights;
  rep.periodic_residual =
      (wl / b.presentation().pf_scalar - wlk).cwiseAbs().maxCoeff() / wlk.cwiseAbs().maxCoeff();
  if (rep.periodic_residual > tol)
    fail("weights at level L+K are not the level-L weights divided by d (residual " +
         std::to_string(rep.periodic_residual) + ")");
  rep.worst = std::max(rep.normalization_residual, rep.periodic_residual);
  for (double r : rep.trace_residuals) rep.worst = std::max(rep.worst, r);
  return rep;
}

std::vector<std::vector<int>> strong_components(const IMat& a) {
  const int n = static_cast<int>(a.rows());
  // reach[i][j]: a path of positive length from i to j, edge i -> j when a(j, i) > 0.
  std::vector<std::vector<bool>> reach(n, std::vector<bool>(n, false));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) reach[i][j] = a(j, i) > 0;
  for (int m = 0; m < n; ++m)
    for (int i = 0; i < n; ++i)
      if (reach[i][m])
        for (int j = 0; j < n; ++j)
          if (reach[m][j]) reach[i][j] = true;
  std::vector<int> comp(n, -1);
  std::vector<std::vector<int>> out;
  for (int i = 0; i < n; ++i) {
    if (comp[i] >= 0) continue;
    std::vector<int> c{i};
    comp[i] = static_cast<int>(out.size());
    for (int j = i + 1; j < n; ++j)
      if (comp[j] < 0 && reach[i][j] && reach[j][i]) {
        comp[j] = comp[i];
        c.push_back(j);
      }
    out.push_back(c);
  }
  return out;
}

PfResult pf_solve(const IMat& adjacency, bool assume_irreducible) {
  const Eigen::Index n = adjacency.rows();
  if (n == 0 || adjacency.cols() != n) structural_error("pf_solve: matrix must be square and nonempty");
  if ((adjacency.array() < 0).any()) structural_error("pf_solve: negative entry");
  if (!assume_irreducible) {
    auto comps = strong_components(adjacency);
    if (comps.size() > 1 || (n == 1 && adjacency(0, 0) == 0)) {
      std::ostringstream os;
      os << "pf_solve: matrix is reducible; vertex class {";
      for (size_t i = 0; i < comps[0].size(); ++i) os << (i ? "," : "") << comps[0][i];
      os << "} is not strongly connected to the rest";
      throw Error(ErrorKind::Input, os.str());
    }
  }
  // Shifting by the identity makes the iteration primitive without moving the PF vector.
  RMat g = adjacency.cast<double>().transpose();
  RMat shifted = g + RMat::Identity(n, n);
  RVec mu = RVec::Ones(n) / static_cast<double>(n);
  const int max_iter = 100000;
  for (int it = 1; it <= max_iter; ++it) {
    RVec next = shifted * mu;
    next /= next.sum();
    mu = next;
    RVec gm = g * mu;
    double d = mu.dot(gm) / mu.dot(mu);
    double res = (gm - d * mu).cwiseAbs().maxCoeff();
    if (res < 1e-12) {
      if ((mu.array() <= 0).any())
        throw Error(ErrorKind::Input, "pf_solve: PF vector is not strictly positive");
      return {d, mu, it, res};
    }
  }
  throw Error(ErrorKind::Convergence, "pf_solve: power iteration did not converge");
}

AfTower af_tower(const TracialBratteli& b, int upto) {
  if (upto < 0) structural_error("af_tower: negative level");
  AfTower t;
  AfLevel l0;
  l0.dims.assign(static_cast<size_t>(b.level(0).size()), 1);
  l0.trace_weights = b.weights(0);
  t.levels.push_back(l0);
  for (int k = 1; k <= upto; ++k) {
    GraphFunctor g = b.functor(k);
    AfLevel lk;
    lk.dims.assign(static_cast<size_t>(g.target().size()), 0);
    const auto& prev = t.levels.back().dims;
    for (int w = 0; w < g.target().size(); ++w)
      for (int v = 0; v < g.source().size(); ++v)
        lk.dims[static_cast<size_t>(w)] += g.edges(w, v) * prev[static_cast<size_t>(v)];
    lk.trace_weights = b.weights(k);
    t.levels.push_back(lk);
    t.inclusions.push_back(g.adjacency());
  }
  return t;
}

MaterializedLevel materialize_level(const TracialBratteli& b, int k) {
  MaterializedLevel m{b.level(k), std::nullopt};
  if (k >= 1) m.functor = b.functor(k);
  return m;
}

std::vector<std::string> default_labels(int n, const std::string& prefix) {
  std::vector<std::string> out;
  for (int i = 0; i < n; ++i) out.push_back(prefix + std::to_string(i));
  return out;
}

TracialBratteli constant_tower(const IMat& gamma, std::vector<std::string> labels) {
  if (labels.empty()) labels = default_labels(static_cast<int>(gamma.rows()));
  PfResult pf = pf_solve(gamma);
  WeightedCategory l0(labels, pf.mu);
  WeightedCategory l1(labels, pf.mu / pf.d);
  return TracialBratteli({l0, l1}, {gamma}, Presentation{0, 1, pf.d});
}

}  // namespace conncalc
