#pragma once

#include <optional>
#include <random>
#include <vector>

#include "conncalc/harmonic.hpp"

namespace conncalc {

// Finite-level path-space model of one 1-cell Λ• : Γ• -> Δ•.
// H_k = NT(D_k, X_k Λ_k) with X_k = [m0, Γ_1..Γ_k] and D_k = [n0, Δ_1..Δ_k],
// where m0 and n0 pick every level-0 simple once.
class BimoduleOracle {
 public:
  BimoduleOracle(ConnectionPtr c, int max_level);

  const UnitaryConnection& connection() const { return *c_; }
  int max_level() const { return max_level_; }
  const Chain& x_chain(int k) const { return x_.at(static_cast<size_t>(k)); }
  const Chain& d_chain(int k) const { return d_.at(static_cast<size_t>(k)); }
  Chain h_codomain(int k) const { return x_chain(k).then(c_->lambda(k)); }

  NatTrans zero(int k) const { return NatTrans(d_chain(k), h_codomain(k)); }
  long long dim(int k) const { return zero(k).flat_dim(); }
  std::vector<NatTrans> basis(int k) const;

  // H_k -> H_{k+1}: Δ_{k+1}-whisker, then W_{k+1} whiskered by X_k.
  NatTrans include(const NatTrans& xi, int k) const;
  NatTrans include_to(NatTrans xi, int from, int to) const;
  // H_{k+1} -> H_k: closes the top Δ strand with the tracial cup.
  NatTrans project(const NatTrans& zeta, int k) const;
  NatTrans project_to(NatTrans zeta, int from, int to) const;

  // Tr_{B_k}(b* a) with the level-k weights of the target 0-cell.
  cplx inner(const NatTrans& a, const NatTrans& b, int k) const;

  // Λ_k(a)∘ξ for a in End(X_k); ξ∘b for b in End(D_k).
  NatTrans left_act(const NatTrans& a, const NatTrans& xi, int k) const;
  NatTrans right_act(const NatTrans& xi, const NatTrans& b) const;

  // γ in hom(X_kΛ_k, X_kΩ_k) viewed at level k + 1 through the two connections.
  static NatTrans lift(const UnitaryConnection& lam, const UnitaryConnection& om,
                       const NatTrans& gamma, const Chain& prefix, int k);

 private:
  ConnectionPtr c_;
  int max_level_;
  std::vector<Chain> x_;
  std::vector<Chain> d_;
};

// incl^l(γ)∘ξ for γ at level k and ξ in H^Λ_{k+l}.
NatTrans phi_action(const BimoduleOracle& lam, const BimoduleOracle& om, const NatTrans& gamma,
                    int k, const NatTrans& xi, int l);

// max over a basis ξ of H_{k-1} of |q(η_{X_k} ι(ξ)) - (S_k η)_{X_{k-1}} ξ|.
double compression_identity_check(const BimoduleOracle& lam, const BimoduleOracle& om,
                                  const NatTrans& eta, int k);

struct PpBasis {
  std::vector<NatTrans> elements;
  double d_b = 0.0;
  double resolution_residual = 0.0;  // |Σ σσ* - 1|
};

PpBasis pp_basis(const BimoduleOracle& o);

struct FiniteLevelResult {
  CMat op;  // flat H^Λ_k -> flat H^Ω_k
  NatTrans preimage;
  double round_trip_residual = 0.0;  // preimage vs the input η, when given
  double central_defect = 0.0;       // distance of Σ T(ισ)(ισ)* from the whiskered preimage
};

FiniteLevelResult finite_level_two_cell(const BimoduleOracle& lam, const BimoduleOracle& om,
                                        const NatTrans& eta, int k);
FiniteLevelResult reconstruct_two_cell(const BimoduleOracle& lam, const BimoduleOracle& om,
                                       const CMat& op, int k);

// dim of {η in NT(Λ_k, Ω_k) : incl^j(η_{X_k}) is central for j <= l}, l = 1..steps.
struct OracleDimension {
  int level = 0;
  std::vector<long long> dims;
  int stabilized_at = 0;  // smallest l with the final dimension
  long long final_dim() const { return dims.empty() ? 0 : dims.back(); }
};

OracleDimension oracle_dimension(const BimoduleOracle& lam, const BimoduleOracle& om, int k,
                                 int steps);

// θ^k_v = μ^k_v / (Λ_k' ν^k)_v and its drift across one period.
struct ThetaReport {
  std::vector<RVec> theta;
  double period_drift = 0.0;
};

ThetaReport theta_candidates(const UnitaryConnection& c, int upto);

// Inclusion commutes with the A_k and B_k actions; max residual over samples.
double module_compat_residual(const BimoduleOracle& o, int k, std::mt19937_64& rng, int samples = 4);

}  // namespace conncalc
