#pragma once

#include <Eigen/Dense>

#include <complex>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace conncalc {

using cplx = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using RMat = Eigen::MatrixXd;
using RVec = Eigen::VectorXd;
using IMat = Eigen::Matrix<long long, Eigen::Dynamic, Eigen::Dynamic>;

enum class ErrorKind { Structural, Input, Validation, Convergence };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] void structural_error(const std::string& what);

// Finite list of simple objects with strictly positive weights.
struct WeightedCategory {
  std::vector<std::string> labels;
  RVec weights;

  WeightedCategory() = default;
  WeightedCategory(std::vector<std::string> labels, RVec weights);

  int size() const { return static_cast<int>(labels.size()); }
  bool same_objects(const WeightedCategory& other) const {
    return labels == other.labels;
  }
  WeightedCategory scaled(double factor) const;

  // One simple object of weight 1; the source of object-valued functors.
  static WeightedCategory trivial();
};

struct PathTriple {
  int mid;
  long long first_edge;
  long long second_edge;
  bool operator==(const PathTriple&) const = default;
};

// Enumeration of the paths of a composite second∘first, per (source, target),
// ordered by (intermediate simple, first edge, second edge).
class PathBasis {
 public:
  PathBasis() = default;
  PathBasis(int n_source, int n_target)
      : n_target_(n_target),
        triples_(static_cast<size_t>(n_source) * n_target) {}

  const std::vector<PathTriple>& paths(int v, int w) const {
    return triples_[static_cast<size_t>(v) * n_target_ + w];
  }
  std::vector<PathTriple>& paths(int v, int w) {
    return triples_[static_cast<size_t>(v) * n_target_ + w];
  }
  long long index(int v, int w, const PathTriple& t) const;

 private:
  int n_target_ = 0;
  std::vector<std::vector<PathTriple>> triples_;
};

struct ComposedFunctor;

// A bi-faithful functor between weighted categories, stored as its adjacency
// matrix (|target| x |source|).  Composites remember their factors so that
// their edges expand into primitive paths.
class GraphFunctor {
 public:
  GraphFunctor(WeightedCategory source, WeightedCategory target, IMat adjacency);

  const WeightedCategory& source() const { return source_; }
  const WeightedCategory& target() const { return target_; }
  const IMat& adjacency() const { return adj_; }
  long long edges(int w, int v) const { return adj_(w, v); }

  bool is_composite() const { return static_cast<bool>(first_); }
  const GraphFunctor& first() const { return *first_; }
  const GraphFunctor& second() const { return *second_; }
  const PathBasis& basis() const { return *basis_; }

  // Primitive path (v, e1, v1, ..., w) represented by edge e from v to w.
  std::vector<int> expand_edge(int v, int w, long long e) const;
  // Primitive factors in application order.
  std::vector<const GraphFunctor*> primitives() const;

  // Same objects, adjacency and factorization tree.  Weights are ignored.
  bool same_as(const GraphFunctor& other) const;

  // Multiplies the weights of every category in the factorization tree.
  GraphFunctor rescaled(double factor) const;

 private:
  friend struct ComposedFunctor;
  friend ComposedFunctor compose_functors(const GraphFunctor&, const GraphFunctor&);

  WeightedCategory source_;
  WeightedCategory target_;
  IMat adj_;
  std::shared_ptr<const GraphFunctor> first_;
  std::shared_ptr<const GraphFunctor> second_;
  std::shared_ptr<const PathBasis> basis_;
};

struct ComposedFunctor {
  GraphFunctor functor;
  PathBasis basis;
};

ComposedFunctor compose_functors(const GraphFunctor& first, const GraphFunctor& second);
GraphFunctor adjoint_functor(const GraphFunctor& f);

// Path (v0, e1, v1, ..., er, vr) through a chain of functors.
using Path = std::vector<int>;

// A composable sequence of functors, applied left to right.  The empty chain
// is the identity functor of its base category.  Paths are enumerated in the
// order obtained by composing left to right with compose_functors.
class Chain {
 public:
  explicit Chain(WeightedCategory base);
  Chain(const GraphFunctor& f);  // NOLINT(google-explicit-constructor)
  explicit Chain(std::vector<GraphFunctor> fs);

  const WeightedCategory& source() const { return source_; }
  const WeightedCategory& target() const;
  const std::vector<GraphFunctor>& functors() const { return fs_; }
  size_t length() const { return fs_.size(); }

  Chain then(const GraphFunctor& f) const;
  Chain then(const Chain& c) const;
  Chain after(const GraphFunctor& f) const;  // f applied first

  IMat counts() const;
  // Paths from v grouped by endpoint, each group in canonical order.
  std::vector<std::vector<Path>> paths_from(int v) const;
  // Expands a chain path into a path over primitive functors.
  Path expand(const Path& p) const;
  std::vector<const GraphFunctor*> primitives() const;

  bool same_as(const Chain& other) const;

 private:
  WeightedCategory source_;
  std::vector<GraphFunctor> fs_;
};

// Natural transformation between parallel chains.  Block (v, w) maps
// hom(w, dom v) to hom(w, cod v) in the canonical path bases.
class NatTrans {
 public:
  NatTrans(Chain dom, Chain cod);

  static NatTrans identity(const Chain& c);

  const Chain& domain() const { return dom_; }
  const Chain& codomain() const { return cod_; }
  int n_source() const { return dom_.source().size(); }
  int n_target() const { return dom_.target().size(); }

  CMat& block(int v, int w) { return blocks_[static_cast<size_t>(v) * n_target() + w]; }
  const CMat& block(int v, int w) const {
    return blocks_[static_cast<size_t>(v) * n_target() + w];
  }

  // Blocks in (source, target) lexicographic order, each row-major.
  CVec flatten() const;
  static NatTrans from_flat(const Chain& dom, const Chain& cod, const CVec& x);
  long long flat_dim() const;

  // Same blocks over chains with identical path counts.
  NatTrans rebased(const Chain& dom, const Chain& cod) const;

  double max_abs() const;
  NatTrans& operator+=(const NatTrans& o);
  NatTrans& operator-=(const NatTrans& o);
  NatTrans& operator*=(cplx s);

 private:
  Chain dom_;
  Chain cod_;
  std::vector<CMat> blocks_;
};

NatTrans operator+(NatTrans a, const NatTrans& b);
NatTrans operator-(NatTrans a, const NatTrans& b);
NatTrans operator*(cplx s, NatTrans a);

double max_abs_diff(const NatTrans& a, const NatTrans& b);

// a∘b: b applied first.
NatTrans nt_vertical(const NatTrans& a, const NatTrans& b);
NatTrans nt_star(const NatTrans& a);
// F(η): F applied after the chains of η.
NatTrans whisker_left(const GraphFunctor& f, const NatTrans& eta);
NatTrans whisker_left(const Chain& f, const NatTrans& eta);
// η_F: F applied before the chains of η.
NatTrans whisker_right(const NatTrans& eta, const GraphFunctor& f);
NatTrans whisker_right(const NatTrans& eta, const Chain& f);
// inner: F1 -> G1 on C -> D, outer: F2 -> G2 on D -> E; result F2F1 -> G2G1.
NatTrans nt_tensor(const NatTrans& inner, const NatTrans& outer);
// Re-expresses eta over chains with the same primitive expansion.
NatTrans convert(const NatTrans& eta, const Chain& dom, const Chain& cod);

// Tracial solution of the conjugate equations for F, commensurate with the
// weights (mu_source, mu_target).
struct DualitySolution {
  GraphFunctor functor;
  RMat kappa;  // kappa(w, v) = mu_target(w) / mu_source(v)

  static DualitySolution tracial(const GraphFunctor& f, const RVec& mu_source,
                                 const RVec& mu_target);
  double kappa_ts(int w, int v) const { return kappa(w, v); }
  double kappa_st(int v, int w) const { return 1.0 / kappa(w, v); }
};

// rho': id_C -> F'F, codomain chain [F, F'].
NatTrans cup(const GraphFunctor& f, const DualitySolution& d);
NatTrans cap(const GraphFunctor& f, const DualitySolution& d);
// rho: id_D -> FF', codomain chain [F', F].
NatTrans cup_target(const GraphFunctor& f, const DualitySolution& d);
NatTrans cap_target(const GraphFunctor& f, const DualitySolution& d);
// Scalar loops rho'* rho' per source simple and rho* rho per target simple.
RVec loop_source(const DualitySolution& d);
RVec loop_target(const DualitySolution& d);
// Max residual of both zig-zag identities.
double zigzag_residual(const GraphFunctor& f, const DualitySolution& d);

cplx categorical_trace(const std::vector<long long>& multiplicities,
                       const std::vector<CMat>& alpha, const WeightedCategory& cat);
cplx nt_trace(const NatTrans& eta, const RVec& mu, const RVec& nu);
cplx nt_trace(const NatTrans& eta);
cplx nt_inner(const NatTrans& eta, const NatTrans& kappa, const RVec& mu, const RVec& nu);
cplx nt_inner(const NatTrans& eta, const NatTrans& kappa);

// Both partial-trace identities for eta in End(sigma∘lambda) with weights
// mu (source of lambda), nu (middle), pi (target of sigma).
struct TraceCompatResult {
  cplx via_lambda;
  cplx total;
  cplx via_sigma;
  double residual;
};
TraceCompatResult nt_trace_compat_check(const GraphFunctor& lambda,
                                        const GraphFunctor& sigma, const NatTrans& eta,
                                        const RVec& mu, const RVec& nu, const RVec& pi);

// Both sides of Tr_x(rho* F(alpha) rho) = Tr_{F'x}(alpha) for an object x
// given as a functor from the trivial category.  With x_in_target, x lives in
// the target of f, rho is cup_target and alpha is in End(F'x); otherwise x
// lives in the source, rho is cup and alpha is in End(Fx).
struct ObjectTraceResult {
  cplx lhs;
  cplx rhs;
  double residual;
};
ObjectTraceResult object_trace_compat(const GraphFunctor& x, const GraphFunctor& f,
                                      bool x_in_target, const NatTrans& alpha,
                                      const RVec& mu_source, const RVec& mu_target);

}  // namespace conncalc
