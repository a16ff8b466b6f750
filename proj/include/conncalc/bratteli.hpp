#pragma once

#include <optional>
#include <string>
#include <vector>

#include "conncalc/semisimple.hpp"

namespace conncalc {

// Levels 0..L+K are stored; level L+K carries the labels of level L with
// weights divided by d, and later levels repeat the last period.
struct Presentation {
  int preperiod = 0;
  int period = 1;
  double pf_scalar = 1.0;
};

class TracialBratteli {
 public:
  TracialBratteli(std::vector<WeightedCategory> levels, std::vector<IMat> adjacency,
                  Presentation presentation);

  const Presentation& presentation() const { return pres_; }
  int stored_levels() const { return static_cast<int>(levels_.size()); }
  const WeightedCategory& stored_level(int k) const { return levels_.at(static_cast<size_t>(k)); }
  const IMat& stored_adjacency(int k) const { return adj_.at(static_cast<size_t>(k - 1)); }

  // Stored index representing level k and the number of periods it is shifted by.
  std::pair<int, int> representative(int k) const;

  WeightedCategory level(int k) const;
  RVec weights(int k) const;
  GraphFunctor functor(int k) const;  // level k-1 -> level k, k >= 1

  // Same tower re-presented with a longer preperiod and/or a multiple period.
  TracialBratteli unfold(int preperiod, int period) const;

  bool structurally_equal(const TracialBratteli& o) const;

 private:
  std::vector<WeightedCategory> levels_;
  std::vector<IMat> adj_;
  Presentation pres_;
};

struct ZeroCellReport {
  bool ok = true;
  std::vector<std::string> errors;
  std::vector<double> trace_residuals;  // per level k >= 1
  double normalization_residual = 0.0;
  double periodic_residual = 0.0;
  double worst = 0.0;
};

ZeroCellReport validate_zero_cell(const TracialBratteli& b, double tol = 1e-9);

struct PfResult {
  double d;
  RVec mu;
  int iterations;
  double residual;
};

// Solves adjacency' mu = d mu with mu > 0, sum(mu) = 1.
PfResult pf_solve(const IMat& adjacency, bool assume_irreducible = false);

// Strongly connected components of the support graph, in index order.
std::vector<std::vector<int>> strong_components(const IMat& adjacency);

struct AfLevel {
  std::vector<long long> dims;
  RVec trace_weights;
};

struct AfTower {
  std::vector<AfLevel> levels;
  std::vector<IMat> inclusions;  // inclusions[k-1] = adjacency of Γ_k
};

AfTower af_tower(const TracialBratteli& b, int upto);

struct MaterializedLevel {
  WeightedCategory category;
  std::optional<GraphFunctor> functor;  // Γ_k, absent at level 0
};

MaterializedLevel materialize_level(const TracialBratteli& b, int k);

// Constant tower Γ_k = Γ with PF weights mu^k = mu / d^k, L = 0, K = 1.
TracialBratteli constant_tower(const IMat& gamma, std::vector<std::string> labels = {});

std::vector<std::string> default_labels(int n, const std::string& prefix = "v");

}  // namespace conncalc
