#include "conncalc/harmonic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

namespace conncalc {

namespace {

struct Cluster {
  cplx value;
  int size;
};

// Peripheral eigenvalues grouped within kPeripheralTol, sorted by phase angle.
std::vector<Cluster> peripheral_clusters(const CVec& ev) {
  std::vector<cplx> per;
  for (Eigen::Index i = 0; i < ev.size(); ++i)
    if (std::abs(ev[i]) > 1.0 - kPeripheralTol) per.push_back(ev[i]);
  auto angle = [](cplx z) {
    double a = std::arg(z);
    if (a < 0) a += 2 * std::numbers::pi;
    if (2 * std::numbers::pi - a < 1e-9) a = 0.0;
    return a;
  };
  std::sort(per.begin(), per.end(), [&](cplx a, cplx b) { return angle(a) < angle(b); });
  std::vector<Cluster> out;
  std::vector<bool> used(per.size(), false);
  for (size_t i = 0; i < per.size(); ++i) {
    if (used[i]) continue;
    cplx sum = per[i];
    int n = 1;
    used[i] = true;
    for (size_t j = i + 1; j < per.size(); ++j)
      if (!used[j] && std::abs(per[j] - per[i]) < kPeripheralTol) {
        used[j] = true;
        sum += per[j];
        ++n;
      }
    out.push_back({sum / static_cast<double>(n), n});
  }
  return out;
}

double null_threshold(const CMat& a) {
  return kPeripheralTol * std::max(1.0, a.cwiseAbs().rowwise().sum().maxCoeff());
}

CMat null_space(const CMat& a, double thresh) {
  Eigen::BDCSVD<CMat> svd(a, Eigen::ComputeFullV);
  const RVec& s = svd.singularValues();
  Eigen::Index rank = 0;
  while (rank < s.size() && s[rank] > thresh) ++rank;
  return svd.matrixV().rightCols(a.cols() - rank);
}

CVec fix_phase(CVec v) {
  const double m = v.cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (std::abs(v[i]) >= (1.0 - 1e-9) * m) {
      v *= std::conj(v[i]) / std::abs(v[i]);
      break;
    }
  return v;
}

}  // namespace

HarmonicBasis bounded_harmonic_basis(const CMat& x, const RVec& weights_in, double tol) {
  HarmonicBasis out;
  const Eigen::Index n = x.rows();
  if (x.cols() != n) structural_error("harmonic basis: matrix must be square");
  if (n == 0) return out;
  RVec w = weights_in.size() ? RVec(weights_in / weights_in.maxCoeff()) : RVec(RVec::Ones(n));
  if (w.size() != n) structural_error("harmonic basis: weight vector has the wrong length");

  Eigen::ComplexEigenSolver<CMat> es(x, false);
  out.spectral_radius = es.eigenvalues().cwiseAbs().maxCoeff();
  if (out.spectral_radius > 1.0 + tol) {
    std::ostringstream os;
    os << "harmonic basis: spectral radius " << out.spectral_radius << " exceeds 1";
    throw Error(ErrorKind::Validation, os.str());
  }
  const CMat id = CMat::Identity(n, n);
  auto winner = [&w](const CVec& a, const CVec& b) {
    return (b.conjugate().cwiseProduct(w.cast<cplx>()).cwiseProduct(a)).sum();
  };
  for (const Cluster& c : peripheral_clusters(es.eigenvalues())) {
    const CMat a = x - c.value * id;
    const double th = null_threshold(x);
    CMat ns = null_space(a, th);
    const Eigen::Index k1 = ns.cols();
    const Eigen::Index k2 = null_space(a * a, th).cols();
    if (k2 > k1 || k1 < c.size) {
      std::ostringstream os;
      os << "harmonic basis: peripheral Jordan block at eigenvalue " << c.value.real()
         << (c.value.imag() < 0 ? "-" : "+") << std::abs(c.value.imag()) << "i";
      throw Error(ErrorKind::Validation, os.str());
    }
    const cplx phase = c.value / std::abs(c.value);
    std::vector<HarmonicElement> cl;
    for (Eigen::Index j = 0; j < ns.cols(); ++j) {
      CVec v = ns.col(j);
      for (const auto& e : cl) v -= winner(v, e.vector) * e.vector;
      const double nv = std::sqrt(std::max(0.0, winner(v, v).real()));
      if (nv < 1e-12) continue;
      v /= nv;
      cl.push_back({phase, v, 0.0});
    }
    for (auto& e : cl) {
      if (cl.size() == 1) e.vector = fix_phase(e.vector);
      e.residual = (x * e.vector - phase * e.vector).norm() / std::max(1.0, e.vector.norm());
      if (e.residual >= 1e-9) {
        std::ostringstream os;
        os << "harmonic basis: eigenvector residual " << e.residual << " at phase " << std::arg(phase);
        throw Error(ErrorKind::Convergence, os.str());
      }
    }
    std::stable_sort(cl.begin(), cl.end(),
                     [](const HarmonicElement& a, const HarmonicElement& b) { return a.residual < b.residual; });
    out.elements.insert(out.elements.end(), cl.begin(), cl.end());
  }
  return out;
}

std::vector<PeripheralProjector> peripheral_projectors(const CMat& x) {
  std::vector<PeripheralProjector> out;
  const Eigen::Index n = x.rows();
  if (n == 0) return out;
  Eigen::ComplexEigenSolver<CMat> es(x, false);
  const CMat id = CMat::Identity(n, n);
  const double th = null_threshold(x);
  for (const Cluster& c : peripheral_clusters(es.eigenvalues())) {
    CMat v = null_space(x - c.value * id, th);
    CMat w = null_space(x.adjoint() - std::conj(c.value) * id, th);
    if (v.cols() != w.cols())
      throw Error(ErrorKind::Convergence, "peripheral projector: left and right eigenspaces differ in dimension");
    CMat g = w.adjoint() * v;
    out.push_back({c.value / std::abs(c.value), v * g.inverse() * w.adjoint()});
  }
  return out;
}

LoopTower::LoopTower(ConnectionPtr c1, ConnectionPtr c2)
    : c1_(std::move(c1)),
      c2_(std::move(c2)),
      ref_(nt_space(*c1_, *c2_, c1_->presentation().preperiod)) {
  const int L = preperiod(), K = period();
  if (c2_->presentation().preperiod != L || c2_->presentation().period != K)
    structural_error("loop tower: 1-cells have different presentations");
  for (int k = 1; k <= L + K; ++k) ops_.push_back(loop_matrix(*c1_, *c2_, k));
  period_ = CMat::Identity(ref_.dim, ref_.dim);
  for (int k = L + 1; k <= L + K; ++k) period_ = period_ * ops_[static_cast<size_t>(k - 1)].matrix;
}

const LoopOperator& LoopTower::op(int k) const {
  if (k < 1) structural_error("loop tower: level must be >= 1");
  const int j = c1_->source().representative(k).first;
  return ops_[static_cast<size_t>(j - 1)];
}

CVec LoopTower::apply_down(CVec x, int from, int to) const {
  for (int k = from; k > to; --k) x = op(k).matrix * x;
  return x;
}

TwoCellSeq::TwoCellSeq(LoopTowerPtr tower, std::vector<TailComponent> tail)
    : tower_(std::move(tower)), tail_(std::move(tail)) {
  const int L = tower_->preperiod();
  CVec top = CVec::Zero(tower_->reference_space().dim);
  for (const auto& t : tail_) {
    if (t.vector.size() != top.size()) structural_error("2-cell: tail vector has the wrong length");
    top += t.vector;
  }
  prefix_.assign(static_cast<size_t>(L + 1), CVec());
  prefix_[static_cast<size_t>(L)] = top;
  for (int k = L - 1; k >= 0; --k)
    prefix_[static_cast<size_t>(k)] = tower_->op(k + 1).matrix * prefix_[static_cast<size_t>(k + 1)];
}

CVec TwoCellSeq::at_flat(int k) const {
  const int L = tower_->preperiod(), K = tower_->period();
  if (k < 0) structural_error("2-cell: negative level");
  if (k <= L) return prefix_[static_cast<size_t>(k)];
  const int n = (k - L + K - 1) / K;
  CVec x = CVec::Zero(tower_->reference_space().dim);
  for (const auto& t : tail_) x += std::pow(t.phase, -n) * t.vector;
  return tower_->apply_down(x, L + n * K, k);
}

NatTrans TwoCellSeq::at(int k) const { return tower_->space(k).unflatten(at_flat(k)); }

double TwoCellSeq::quasi_flat_residual(int upto) const {
  double r = 0.0;
  CVec hi = at_flat(upto);
  for (int k = upto - 1; k >= 0; --k) {
    CVec lo = at_flat(k);
    CVec pushed = tower_->op(k + 1).matrix * hi;
    if (lo.size()) r = std::max(r, (pushed - lo).cwiseAbs().maxCoeff());
    hi = lo;
  }
  return r;
}

FlatReport is_flat(const TwoCellSeq& seq, int horizon, double threshold) {
  const LoopTower& t = seq.tower();
  const int L = t.preperiod(), K = t.period();
  if (horizon < 0) horizon = L + 3 * K;
  FlatReport rep;
  NatTrans prev = seq.at(0);
  for (int k = 0; k < horizon; ++k) {
    NatTrans next = seq.at(k + 1);
    rep.residuals.push_back(exchange_check(t.domain(), t.codomain(), k, prev, next));
    prev = next;
  }
  for (double r : rep.residuals) rep.worst = std::max(rep.worst, r);
  int from = horizon;
  while (from > 0 && rep.residuals[static_cast<size_t>(from - 1)] < threshold) --from;
  if (from < horizon) rep.flat_from = from;
  rep.flat = rep.flat_from && *rep.flat_from <= L + K && horizon > L + K;
  return rep;
}

std::pair<ConnectionPtr, ConnectionPtr> align_pair(ConnectionPtr c1, ConnectionPtr c2) {
  const Presentation& p1 = c1->presentation();
  const Presentation& p2 = c2->presentation();
  if (p1.preperiod == p2.preperiod && p1.period == p2.period) return {c1, c2};
  const int L = std::max(p1.preperiod, p2.preperiod);
  const int K = std::lcm(p1.period, p2.period);
  return {std::make_shared<const UnitaryConnection>(c1->unfold(L, K)),
          std::make_shared<const UnitaryConnection>(c2->unfold(L, K))};
}

std::vector<std::string> periodic_hypotheses(const UnitaryConnection& c1,
                                             const UnitaryConnection& c2, double tol) {
  std::vector<std::string> out;
  if (!c1.source().structurally_equal(c2.source()) || !c1.target().structurally_equal(c2.target())) {
    out.push_back("the 1-cells are not parallel");
    return out;
  }
  for (const auto* b : {&c1.source(), &c1.target()}) {
    const std::string which = b == &c1.source() ? "source" : "target";
    ZeroCellReport z = validate_zero_cell(*b, tol);
    for (const auto& e : z.errors) out.push_back(which + " 0-cell: " + e);
    const int L = b->presentation().preperiod, K = b->presentation().period;
    IMat g = IMat::Identity(b->stored_level(L).size(), b->stored_level(L).size());
    for (int k = L + 1; k <= L + K; ++k) g = b->stored_adjacency(k) * g;
    const RVec& mu = b->stored_level(L).weights;
    const double d = b->presentation().pf_scalar;
    const double r = (g.cast<double>() * mu - d * mu).cwiseAbs().maxCoeff() / (d * mu.maxCoeff());
    if (r > tol) {
      std::ostringstream os;
      os << which << " 0-cell: level-L weights are not a Perron-Frobenius eigenvector of the "
         << "one-period graph (residual " << r << ")";
      out.push_back(os.str());
    }
  }
  const double ds = c1.source().presentation().pf_scalar, dt = c1.target().presentation().pf_scalar;
  if (std::abs(ds - dt) > tol * std::max(ds, dt)) {
    std::ostringstream os;
    os << "source and target 0-cells have different PF scalars (" << ds << " vs " << dt << ")";
    out.push_back(os.str());
  }
  for (const auto* c : {&c1, &c2}) {
    OneCellReport r = validate_one_cell(*c, tol);
    for (const auto& e : r.errors) out.push_back((c == &c1 ? "domain" : "codomain") + std::string(" 1-cell: ") + e);
  }
  return out;
}

std::vector<TwoCellSeq> periodic_two_cells(ConnectionPtr c1_in, ConnectionPtr c2_in, double tol) {
  require_parallel(*c1_in, *c2_in);
  auto [c1, c2] = align_pair(c1_in, c2_in);
  std::vector<std::string> failed = periodic_hypotheses(*c1, *c2, tol);
  if (!failed.empty()) {
    std::string msg = "periodic 2-cells: hypotheses not met: ";
    for (size_t i = 0; i < failed.size(); ++i) msg += (i ? "; " : "") + failed[i];
    throw Error(ErrorKind::Validation, msg);
  }
  auto tower = std::make_shared<const LoopTower>(c1, c2);
  HarmonicBasis hb = bounded_harmonic_basis(tower->period_operator(), tower->reference_space().weights);
  std::vector<TwoCellSeq> out;
  for (const auto& e : hb.elements) out.emplace_back(tower, std::vector<TailComponent>{{e.phase, e.vector}});
  return out;
}

std::vector<TwoCellSeq> izumi_fixed_points(ConnectionPtr c) {
  std::vector<TwoCellSeq> out;
  for (auto& s : periodic_two_cells(c, c))
    if (std::abs(s.tail().front().phase - 1.0) < kPeripheralTol) out.push_back(s);
  return out;
}

TwoCellSeq identity_two_cell(ConnectionPtr c) {
  auto tower = std::make_shared<const LoopTower>(c, c);
  const NtSpace& sp = tower->reference_space();
  return TwoCellSeq(tower, {{cplx(1.0), sp.flatten(sp.identity())}});
}

bool same_connection(const UnitaryConnection& a, const UnitaryConnection& b) {
  if (&a == &b) return true;
  if (!a.source().structurally_equal(b.source()) || !a.target().structurally_equal(b.target()))
    return false;
  if (a.stored_levels() != b.stored_levels()) return false;
  for (int k = 0; k < a.stored_levels(); ++k)
    if (!a.stored_lambda(k).same_as(b.stored_lambda(k))) return false;
  for (int k = 1; k < a.stored_levels(); ++k) {
    const auto& x = a.stored_blocks(k);
    const auto& y = b.stored_blocks(k);
    for (size_t i = 0; i < x.size(); ++i) {
      if (x[i].rows() != y[i].rows() || x[i].cols() != y[i].cols()) return false;
      if (x[i].size() && (x[i] - y[i]).cwiseAbs().maxCoeff() > 1e-13) return false;
    }
  }
  return true;
}

namespace {

struct Term {
  cplx phase;
  CVec vector;
};

// lim_n Σ_t phase_t^{-n} P^n c_t and its peripheral decomposition.
std::vector<TailComponent> tail_limit(const CMat& p, const std::vector<Term>& terms,
                                      LimitReport* report) {
  const Eigen::Index dim = p.rows();
  LimitReport rep;
  std::vector<PeripheralProjector> projs = peripheral_projectors(p);
  CVec spectral = CVec::Zero(dim);
  for (const auto& t : terms)
    for (const auto& pr : projs)
      if (std::abs(pr.phase - t.phase) < kPeripheralTol) spectral += pr.projector * t.vector;

  const int max_iter = 10000;
  std::vector<CVec> y;
  CVec prev = CVec::Zero(dim);
  for (const auto& t : terms) {
    y.push_back(t.vector);
    prev += t.vector;
  }
  CVec result;
  CVec cesaro = CVec::Zero(dim), cesaro_half;
  std::vector<double> trace;
  for (int n = 1; n <= max_iter; ++n) {
    CVec cur = CVec::Zero(dim);
    for (size_t i = 0; i < y.size(); ++i) {
      y[i] = p * y[i];
      cur += std::pow(terms[i].phase, -n) * y[i];
    }
    const double diff = dim ? (cur - prev).cwiseAbs().maxCoeff() : 0.0;
    if (n % 1000 == 0) trace.push_back(diff);
    cesaro += cur;
    if (n == max_iter / 2) cesaro_half = cesaro / static_cast<double>(n);
    if (diff < 1e-10) {
      result = cur;
      rep.iterations = n;
      break;
    }
    prev = cur;
  }
  if (result.size() != dim || (dim > 0 && rep.iterations == 0)) {
    CVec avg = cesaro / static_cast<double>(max_iter);
    double drift = dim ? (avg - cesaro_half).cwiseAbs().maxCoeff() : 0.0;
    if (drift > 1e-7) {
      std::ostringstream os;
      os << "2-cell composition: limit did not converge; residual trace:";
      for (double d : trace) os << " " << d;
      os << "; Cesàro drift " << drift;
      throw Error(ErrorKind::Convergence, os.str());
    }
    result = avg;
    rep.cesaro = true;
    rep.iterations = max_iter;
  }
  rep.spectral_agreement = dim ? (result - spectral).cwiseAbs().maxCoeff() : 0.0;

  std::vector<TailComponent> out;
  CVec rest = result;
  const double scale = std::max(1.0, dim ? result.cwiseAbs().maxCoeff() : 0.0);
  for (const auto& pr : projs) {
    CVec v = pr.projector * result;
    rest -= v;
    if (dim && v.cwiseAbs().maxCoeff() > 1e-12 * scale) out.push_back({pr.phase, v});
  }
  rep.non_peripheral = dim ? rest.cwiseAbs().maxCoeff() : 0.0;
  if (report) *report = rep;
  return out;
}

}  // namespace

TwoCellSeq vertical_compose(const TwoCellSeq& xi, const TwoCellSeq& eta, LimitReport* report) {
  const LoopTower& te = eta.tower();
  const LoopTower& tx = xi.tower();
  if (!same_connection(te.codomain(), tx.domain()))
    structural_error("vertical composition: codomain of η is not the domain of ξ");
  if (te.preperiod() != tx.preperiod() || te.period() != tx.period())
    structural_error("vertical composition: 2-cells have different presentations");
  auto tower = std::make_shared<const LoopTower>(te.domain_ptr(), tx.codomain_ptr());
  const NtSpace& se = te.reference_space();
  const NtSpace& sx = tx.reference_space();
  const NtSpace& sr = tower->reference_space();
  std::vector<Term> terms;
  for (const auto& a : xi.tail())
    for (const auto& b : eta.tail()) {
      NatTrans prod = nt_vertical(sx.unflatten(a.vector), se.unflatten(b.vector));
      terms.push_back({a.phase * b.phase, sr.flatten(prod.rebased(sr.dom, sr.cod))});
    }
  return TwoCellSeq(tower, tail_limit(tower->period_operator(), terms, report));
}

TwoCellSeq horizontal_compose(const TwoCellSeq& kappa, const TwoCellSeq& eta, LimitReport* report) {
  const LoopTower& tk = kappa.tower();
  const LoopTower& te = eta.tower();
  if (!tk.domain().source().structurally_equal(te.domain().target()))
    structural_error("horizontal composition: middle 0-cells differ");
  if (te.preperiod() != tk.preperiod() || te.period() != tk.period())
    structural_error("horizontal composition: 2-cells have different presentations");
  auto f1 = std::make_shared<const UnitaryConnection>(tensor_one_cells(tk.domain(), te.domain()));
  auto f2 = std::make_shared<const UnitaryConnection>(tensor_one_cells(tk.codomain(), te.codomain()));
  auto tower = std::make_shared<const LoopTower>(f1, f2);
  const int L = tower->preperiod();
  const NtSpace& sr = tower->reference_space();
  const NtSpace& sk = tk.reference_space();
  const NtSpace& se = te.reference_space();
  const GraphFunctor om2 = tk.codomain().lambda(L);
  const GraphFunctor lam1 = te.domain().lambda(L);
  std::vector<Term> terms;
  for (const auto& a : kappa.tail())
    for (const auto& b : eta.tail()) {
      NatTrans h = nt_vertical(whisker_left(om2, se.unflatten(b.vector)),
                               whisker_right(sk.unflatten(a.vector), lam1));
      terms.push_back({a.phase * b.phase, sr.flatten(convert(h, sr.dom, sr.cod))});
    }
  return TwoCellSeq(tower, tail_limit(tower->period_operator(), terms, report));
}

}  // namespace conncalc
