#pragma once

#include <memory>
#include <random>
#include <string>
#include <vector>

#include "conncalc/bratteli.hpp"

namespace conncalc {

using ZeroCellPtr = std::shared_ptr<const TracialBratteli>;

// Per-level functors Λ_k and block unitaries W_k : Δ_kΛ_{k-1} -> Λ_kΓ_k.
// Stored for levels 0..L+K (functors) and 1..L+K (connections), with the
// presentation of both 0-cells.
class UnitaryConnection {
 public:
  // blocks[k-1][m * |N_k| + n] is the raw matrix at (m in M_{k-1}, n in N_k).
  UnitaryConnection(ZeroCellPtr source, ZeroCellPtr target, std::vector<GraphFunctor> lambdas,
                    std::vector<std::vector<CMat>> blocks);

  const TracialBratteli& source() const { return *source_; }
  const TracialBratteli& target() const { return *target_; }
  ZeroCellPtr source_ptr() const { return source_; }
  ZeroCellPtr target_ptr() const { return target_; }
  const Presentation& presentation() const { return source_->presentation(); }
  int stored_levels() const { return static_cast<int>(lambdas_.size()); }

  const GraphFunctor& stored_lambda(int k) const { return lambdas_.at(static_cast<size_t>(k)); }
  const std::vector<CMat>& stored_blocks(int k) const {
    return blocks_.at(static_cast<size_t>(k - 1));
  }

  GraphFunctor lambda(int k) const;
  const CMat& block(int k, int m, int n) const;
  Chain w_domain(int k) const;    // [Λ_{k-1}, Δ_k]
  Chain w_codomain(int k) const;  // [Γ_k, Λ_k]
  // Throws a structural error naming (k, m, n) when a block has the wrong shape.
  NatTrans w(int k) const;

  UnitaryConnection unfold(int preperiod, int period) const;

 private:
  ZeroCellPtr source_;
  ZeroCellPtr target_;
  std::vector<GraphFunctor> lambdas_;
  std::vector<std::vector<CMat>> blocks_;
};

using ConnectionPtr = std::shared_ptr<const UnitaryConnection>;

struct OneCellReport {
  bool ok = true;
  std::vector<std::string> errors;
  double unitarity_residual = 0.0;
  double eps = 0.0;
  double M = 0.0;
  int scanned_levels = 0;
};

OneCellReport validate_one_cell(const UnitaryConnection& c, double tol = 1e-9);

// Builds a connection from adjacency data; categories are taken from the 0-cells.
UnitaryConnection make_connection(ZeroCellPtr source, ZeroCellPtr target,
                                  const std::vector<IMat>& lambdas,
                                  std::vector<std::vector<CMat>> blocks);

// outer: Δ• -> Σ•, inner: Γ• -> Δ•; result Γ• -> Σ• with functors Ω_kΛ_k.
UnitaryConnection tensor_one_cells(const UnitaryConnection& outer, const UnitaryConnection& inner);

// U acts on l2(X) ⊗ l2(Y) with basis index x * |Y| + y.
UnitaryConnection build_vertex_model(const CMat& U, int nx, int ny, Presentation depth = {});
UnitaryConnection build_graph_identity(ZeroCellPtr g);

// Haar-random unitaries on every block of the given adjacency data.
UnitaryConnection build_random_connection(ZeroCellPtr source, ZeroCellPtr target,
                                          const std::vector<IMat>& lambdas, std::mt19937_64& rng);
UnitaryConnection build_random_connection(ZeroCellPtr source, ZeroCellPtr target,
                                          const std::vector<IMat>& lambdas, unsigned long long seed);

// Nonnegative integer matrices Λ with entries <= max_mult, no zero row or
// column, and Δ Λ = Λ Γ.  The search visits at most node_budget partial fills.
std::vector<IMat> search_lambdas(const IMat& gamma, const IMat& delta, int max_mult = 3,
                                 size_t max_solutions = 16, size_t node_budget = 2000000);

CMat haar_unitary(int n, std::mt19937_64& rng);

// Shape check (Δ_kΛ_{k-1})(n,m) == (Λ_kΓ_k)(n,m) for all stored k.
bool shapes_feasible(const TracialBratteli& source, const TracialBratteli& target,
                     const std::vector<IMat>& lambdas, std::string* why = nullptr);

}  // namespace conncalc
