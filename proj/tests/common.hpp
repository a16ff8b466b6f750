#pragma once

#include <memory>
#include <random>
#include <string>
#include <vector>

#include "conncalc/bimodule.hpp"
#include "conncalc/harmonic.hpp"

namespace testutil {

using namespace conncalc;

inline WeightedCategory cat(int n, const std::string& prefix = "v") {
  return WeightedCategory(default_labels(n, prefix), RVec::Ones(n));
}

inline WeightedCategory cat_w(const RVec& w, const std::string& prefix = "v") {
  return WeightedCategory(default_labels(static_cast<int>(w.size()), prefix), w);
}

inline IMat imat(int rows, int cols, std::initializer_list<long long> vals) {
  IMat m(rows, cols);
  auto it = vals.begin();
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = *it++;
  return m;
}

// Bi-faithful random adjacency with entries in [0, max_mult].
inline IMat random_adjacency(int rows, int cols, int max_mult, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> d(0, max_mult);
  for (;;) {
    IMat m(rows, cols);
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) m(r, c) = d(rng);
    bool ok = true;
    for (int r = 0; r < rows; ++r) ok = ok && m.row(r).sum() > 0;
    for (int c = 0; c < cols; ++c) ok = ok && m.col(c).sum() > 0;
    if (ok) return m;
  }
}

inline RVec random_weights(int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> d(0.2, 2.0);
  RVec w(n);
  for (int i = 0; i < n; ++i) w[i] = d(rng);
  return w;
}

inline CMat random_cmat(long long rows, long long cols, std::mt19937_64& rng) {
  std::normal_distribution<double> d(0.0, 1.0);
  CMat m(rows, cols);
  for (long long r = 0; r < rows; ++r)
    for (long long c = 0; c < cols; ++c) {
      const double re = d(rng);
      const double im = d(rng);
      m(r, c) = cplx(re, im);
    }
  return m;
}

inline NatTrans random_nt(const Chain& dom, const Chain& cod, std::mt19937_64& rng) {
  NatTrans z(dom, cod);
  return NatTrans::from_flat(dom, cod, random_cmat(z.flat_dim(), 1, rng).col(0));
}

// Strongly connected random graph: a cycle through every vertex plus noise.
inline IMat random_strong_graph(int n, int max_mult, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> d(0, max_mult);
  IMat g(n, n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) g(r, c) = d(rng);
  for (int v = 0; v < n; ++v)
    if (g((v + 1) % n, v) == 0) g((v + 1) % n, v) = 1;
  if (n == 1 && g(0, 0) == 0) g(0, 0) = 1;
  return g;
}

inline ZeroCellPtr tower_ptr(const IMat& g) {
  return std::make_shared<const TracialBratteli>(constant_tower(g));
}

// Random connection on the constant tower of a strongly connected graph with
// Λ drawn from the commuting solutions of ΓΛ = ΛΓ.  With pf set the graph is
// symmetric, so the PF hypotheses of the periodic flatness result hold.
inline ConnectionPtr random_self_connection(std::mt19937_64& rng, int max_simples = 4,
                                            int max_mult = 3, bool pf = false) {
  std::uniform_int_distribution<int> ns(1, max_simples);
  for (;;) {
    const int n = ns(rng);
    IMat g = random_strong_graph(n, std::min(max_mult, 2), rng);
    if (pf) g = (g + IMat(g.transpose())).eval();
    auto t = tower_ptr(g);
    std::vector<IMat> ls = search_lambdas(g, g, max_mult, 12, 200000);
    if (ls.empty()) continue;
    std::uniform_int_distribution<size_t> pick(0, ls.size() - 1);
    const IMat lam = ls[pick(rng)];
    long long big = (lam * g).maxCoeff();
    if (big > 9) continue;
    return std::make_shared<const UnitaryConnection>(build_random_connection(t, t, {lam}, rng()));
  }
}

inline ConnectionPtr vertex_ptr(const CMat& u, int nx, int ny) {
  return std::make_shared<const UnitaryConnection>(build_vertex_model(u, nx, ny));
}

// Periodic tower with preperiod L and period K built from random positive
// graphs; the weights solve the trace condition exactly by construction.
// With pf set, the one-period graph P is symmetric, so the level-L weights
// are a PF eigenvector of both P and P'.
inline ZeroCellPtr random_periodic_tower(std::mt19937_64& rng, int L, int K, int max_simples = 3,
                                         int max_mult = 2, bool pf = true) {
  std::uniform_int_distribution<int> ns(1, max_simples);
  std::uniform_int_distribution<int> mult(1, max_mult);
  auto random_positive = [&](int rows, int cols) {
    IMat a(rows, cols);
    for (Eigen::Index r = 0; r < a.rows(); ++r)
      for (Eigen::Index c = 0; c < a.cols(); ++c) a(r, c) = mult(rng);
    return a;
  };
  std::vector<int> sizes;
  for (int k = 0; k < L + K; ++k) sizes.push_back(ns(rng));
  sizes.push_back(sizes[static_cast<size_t>(L)]);
  if (pf && K != 2)
    for (int k = L; k <= L + K; ++k) sizes[static_cast<size_t>(k)] = sizes[static_cast<size_t>(L)];
  std::vector<IMat> adj;
  for (int k = 1; k <= L + K; ++k)
    adj.push_back(random_positive(sizes[static_cast<size_t>(k)], sizes[static_cast<size_t>(k - 1)]));
  if (pf) {
    if (K == 2) {
      adj[static_cast<size_t>(L + 1)] = adj[static_cast<size_t>(L)].transpose();
    } else {
      IMat sym = adj[static_cast<size_t>(L)];
      sym = (sym + IMat(sym.transpose())).eval();
      for (int k = L + 1; k <= L + K; ++k) adj[static_cast<size_t>(k - 1)] = sym;
    }
  }
  IMat period = IMat::Identity(sizes[static_cast<size_t>(L)], sizes[static_cast<size_t>(L)]);
  for (int k = L + 1; k <= L + K; ++k) period = adj[static_cast<size_t>(k - 1)] * period;
  PfResult pfr = pf_solve(period);
  std::vector<RVec> mu(static_cast<size_t>(L + K + 1));
  mu[static_cast<size_t>(L + K)] = pfr.mu / pfr.d;
  for (int k = L + K; k >= 1; --k)
    mu[static_cast<size_t>(k - 1)] = adj[static_cast<size_t>(k - 1)].cast<double>().transpose() *
                                     mu[static_cast<size_t>(k)];
  const double z = mu[0].sum();
  std::vector<WeightedCategory> levels;
  for (int k = 0; k <= L + K; ++k) {
    const int lab = k == L + K ? L : k;
    levels.emplace_back(default_labels(sizes[static_cast<size_t>(k)], "l" + std::to_string(lab) + "_"),
                        mu[static_cast<size_t>(k)] / z);
  }
  return std::make_shared<const TracialBratteli>(levels, adj, Presentation{L, K, pfr.d});
}

// Λ_k = identity with independent Haar blocks at every stored level.
inline ConnectionPtr random_identity_functor_connection(const ZeroCellPtr& t, std::mt19937_64& rng) {
  std::vector<IMat> lambdas;
  for (int k = 0; k < t->stored_levels(); ++k) {
    const int n = t->stored_level(k).size();
    lambdas.push_back(IMat::Identity(n, n));
  }
  return std::make_shared<const UnitaryConnection>(build_random_connection(t, t, lambdas, rng));
}

}  // namespace testutil
