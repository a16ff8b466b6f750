#pragma once

#include <optional>
#include <random>
#include <string>
#include <vector>

#include "conncalc/connection.hpp"

namespace conncalc {

// NT(Λ_k, Ω_k) for parallel 1-cells.  Entry (u, n, o, l) sits at
// offset(u, n) + o * cols + l; weights hold μ^k_u ν^k_n per entry.
struct NtSpace {
  struct Block {
    int u;
    int n;
    long long rows;  // Ω_k(n, u)
    long long cols;  // Λ_k(n, u)
    long long offset;
  };

  int level = 0;
  Chain dom;
  Chain cod;
  std::vector<Block> blocks;
  long long dim = 0;
  RVec weights;

  const Block& block(int u, int n) const {
    return blocks[static_cast<size_t>(u) * dom.target().size() + n];
  }
  CVec flatten(const NatTrans& eta) const;
  NatTrans unflatten(const CVec& x) const;
  cplx inner(const CVec& a, const CVec& b) const;  // <a, b>, linear in a
  NatTrans identity() const;
};

// Same 0-cells and presentation; throws otherwise.
void require_parallel(const UnitaryConnection& c1, const UnitaryConnection& c2);

NtSpace nt_space(const UnitaryConnection& c1, const UnitaryConnection& c2, int k);

// S_k : NT(Λ_k, Ω_k) -> NT(Λ_{k-1}, Ω_{k-1}) by conjugating the Γ_k-whiskered
// η with the connections and taking the weighted partial trace over Δ_k.
NatTrans loop_apply(const UnitaryConnection& c1, const UnitaryConnection& c2, int k,
                    const NatTrans& eta);

struct LoopOperator {
  int level = 0;
  CMat matrix;          // D_k -> D_{k-1}
  CMat adjoint_matrix;  // D_{k-1} -> D_k
  double adjoint_residual = 0.0;
  bool endomorphic = false;  // level k-1 and k present the same space
};

// Direct assembly of S_k and S*_k from the connection blocks.
LoopOperator loop_matrix(const UnitaryConnection& c1, const UnitaryConnection& c2, int k);

// Max block residual of W^Ω_{k+1} Δ_{k+1}(η_k) = (η_{k+1})_{Γ_{k+1}} W^Λ_{k+1}.
double exchange_check(const UnitaryConnection& c1, const UnitaryConnection& c2, int k,
                      const NatTrans& eta_k, const NatTrans& eta_k1);

// Loop scalar Σ_m Γ_k(u, m) μ^{k-1}_m / μ^k_u per u in M_k.
RVec gamma_loop(const TracialBratteli& b, int k);

struct ExchangeLoopResult {
  bool holds = false;
  double residual = 0.0;  // max |S*Sη - loop ⊙ η|
  std::optional<double> exchange_residual;
  bool agrees = true;  // both predicates give the same verdict
};

ExchangeLoopResult exchange_via_loop(const UnitaryConnection& c1, const UnitaryConnection& c2,
                                     int k, const NatTrans& eta, const LoopOperator& s,
                                     double threshold = 1e-8, bool cross_check = false);

struct UcpReport {
  double unital_residual = 0.0;
  double star_residual = 0.0;
  double schwarz_min_eig = 0.0;
  double cstar_ratio = 0.0;                  // max ||Sη|| / ||η|| over samples
  std::optional<double> spectral_radius;     // when S is an endomorphism
  double normalized_two_norm = 0.0;          // ||S|| for normalized trace norms
  bool two_norm_applicable = false;          // the loop scalar is constant
  bool ok = true;
  std::vector<std::string> failures;
};

UcpReport ucp_suite(const UnitaryConnection& c, int k, const LoopOperator& s, int samples = 16,
                    unsigned long long seed = 1);

CVec random_flat(const NtSpace& sp, std::mt19937_64& rng);

}  // namespace conncalc
