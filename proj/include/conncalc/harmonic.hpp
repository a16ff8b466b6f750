#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "conncalc/twocell.hpp"

namespace conncalc {

struct HarmonicElement {
  cplx phase;    // |phase| = 1
  CVec vector;   // X v = phase v
  double residual;
};

// Peripheral eigenvectors of X.  The bounded X-harmonic sequences are spanned
// by k -> phase^{-k} v.  Vectors are orthonormal for the inner product with
// the given positive weights (all ones when empty).
struct HarmonicBasis {
  std::vector<HarmonicElement> elements;
  double spectral_radius = 0.0;
  size_t dim() const { return elements.size(); }
};

constexpr double kPeripheralTol = 1e-8;

HarmonicBasis bounded_harmonic_basis(const CMat& x, const RVec& weights = RVec(),
                                     double tol = 1e-9);

// Spectral projection onto each peripheral eigenspace of X.
struct PeripheralProjector {
  cplx phase;
  CMat projector;
};
std::vector<PeripheralProjector> peripheral_projectors(const CMat& x);

// Loop operators S_1..S_{L+K} of a parallel pair; later levels repeat the
// last period.
class LoopTower {
 public:
  LoopTower(ConnectionPtr c1, ConnectionPtr c2);

  const UnitaryConnection& domain() const { return *c1_; }
  const UnitaryConnection& codomain() const { return *c2_; }
  ConnectionPtr domain_ptr() const { return c1_; }
  ConnectionPtr codomain_ptr() const { return c2_; }
  int preperiod() const { return c1_->presentation().preperiod; }
  int period() const { return c1_->presentation().period; }

  const LoopOperator& op(int k) const;
  NtSpace space(int k) const { return nt_space(*c1_, *c2_, k); }
  const NtSpace& reference_space() const { return ref_; }
  // S_{to+1} ... S_{from} x.
  CVec apply_down(CVec x, int from, int to) const;
  // S_{L+1} ... S_{L+K} on the level-L space.
  const CMat& period_operator() const { return period_; }

 private:
  ConnectionPtr c1_;
  ConnectionPtr c2_;
  std::vector<LoopOperator> ops_;  // ops_[k-1] = S_k
  NtSpace ref_;
  CMat period_;
};

using LoopTowerPtr = std::shared_ptr<const LoopTower>;

struct TailComponent {
  cplx phase;
  CVec vector;  // eigenvector of the period operator at level L
};

// η^{(k)} for all k: the periodic tail Σ_j phase_j^{-n} v_j at level L + nK,
// pushed down by loop operators; levels below L are given by the same rule.
class TwoCellSeq {
 public:
  TwoCellSeq(LoopTowerPtr tower, std::vector<TailComponent> tail);

  const LoopTower& tower() const { return *tower_; }
  LoopTowerPtr tower_ptr() const { return tower_; }
  const std::vector<TailComponent>& tail() const { return tail_; }
  CVec at_flat(int k) const;
  NatTrans at(int k) const;
  // max_k ||S_{k+1} η^{(k+1)} - η^{(k)}|| for k < upto.
  double quasi_flat_residual(int upto) const;

 private:
  LoopTowerPtr tower_;
  std::vector<TailComponent> tail_;
  std::vector<CVec> prefix_;  // levels 0..L
};

struct FlatReport {
  bool flat = false;
  double worst = 0.0;           // max residual over the whole horizon
  std::optional<int> flat_from; // earliest level from which all residuals pass
  std::vector<double> residuals;
};

// Exchange residuals for consecutive pairs (k, k+1), k < horizon.  A
// sequence is reported flat when it passes from some level <= L + K on.
FlatReport is_flat(const TwoCellSeq& seq, int horizon = -1, double threshold = 1e-8);

// Empty when the hypotheses of the periodic flatness result hold; otherwise
// one message per failed condition.
std::vector<std::string> periodic_hypotheses(const UnitaryConnection& c1,
                                             const UnitaryConnection& c2, double tol = 1e-9);

// Unfolds both 1-cells to a common presentation.
std::pair<ConnectionPtr, ConnectionPtr> align_pair(ConnectionPtr c1, ConnectionPtr c2);

std::vector<TwoCellSeq> periodic_two_cells(ConnectionPtr c1, ConnectionPtr c2, double tol = 1e-9);
std::vector<TwoCellSeq> izumi_fixed_points(ConnectionPtr c);
TwoCellSeq identity_two_cell(ConnectionPtr c);

struct LimitReport {
  int iterations = 0;
  bool cesaro = false;
  double spectral_agreement = 0.0;  // iteration or Cesàro vs spectral projection
  double non_peripheral = 0.0;      // part of the limit outside the peripheral spectrum
};

// ξ∘η for η : Λ -> Ω and ξ : Ω -> Σ.
TwoCellSeq vertical_compose(const TwoCellSeq& xi, const TwoCellSeq& eta,
                            LimitReport* report = nullptr);
// κ : Ω¹ -> Ω² (outer), η : Λ¹ -> Λ² (inner); result on the fused 1-cells.
TwoCellSeq horizontal_compose(const TwoCellSeq& kappa, const TwoCellSeq& eta,
                              LimitReport* report = nullptr);

// Same connection data (0-cells, functors and blocks).
bool same_connection(const UnitaryConnection& a, const UnitaryConnection& b);

}  // namespace conncalc
