#include "conncalc/bimodule.hpp"

#include <algorithm>
#include <cmath>

namespace conncalc {

namespace {

GraphFunctor all_ones(const WeightedCategory& level0) {
  return GraphFunctor(WeightedCategory::trivial(), level0, IMat::Ones(level0.size(), 1));
}

CVec gaussian(long long n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  CVec x(n);
  for (long long i = 0; i < n; ++i) {
    double re = normal(rng);
    double im = normal(rng);
    x[i] = cplx(re, im);
  }
  return x;
}

// Splits γ in hom([X, Λ], [X, Ω]) into the average over X-paths (an element
// of NT(Λ, Ω)) and the distance of γ from that average whiskered by X.
struct CentralPart {
  NatTrans eta;
  double defect;
  CVec defect_flat;
};

CentralPart central_part(const NatTrans& gamma, const Chain& x, const GraphFunctor& lam,
                         const GraphFunctor& om) {
  const IMat a = x.counts();  // |M| x 1
  NatTrans eta{Chain(lam), Chain(om)};
  const int nu = lam.source().size(), nn = lam.target().size();
  for (int n = 0; n < nn; ++n) {
    const CMat& g = gamma.block(0, n);
    long long ro = 0, co = 0;
    for (int u = 0; u < nu; ++u) {
      const long long r = om.edges(n, u), c = lam.edges(n, u);
      CMat sum = CMat::Zero(r, c);
      for (long long p = 0; p < a(u, 0); ++p) sum += g.block(ro + p * r, co + p * c, r, c);
      if (a(u, 0) > 0) eta.block(u, n) = sum / static_cast<double>(a(u, 0));
      ro += a(u, 0) * r;
      co += a(u, 0) * c;
    }
  }
  NatTrans back = whisker_right(eta, x).rebased(gamma.domain(), gamma.codomain());
  NatTrans diff = gamma - back;
  return {eta, diff.max_abs(), diff.flatten()};
}

}  // namespace

BimoduleOracle::BimoduleOracle(ConnectionPtr c, int max_level) : c_(std::move(c)), max_level_(max_level) {
  if (max_level_ < 0) structural_error("bimodule: negative level");
  x_.emplace_back(all_ones(c_->source().level(0)));
  d_.emplace_back(all_ones(c_->target().level(0)));
  for (int k = 1; k <= max_level_ + 1; ++k) {
    x_.push_back(x_.back().then(c_->source().functor(k)));
    d_.push_back(d_.back().then(c_->target().functor(k)));
  }
}

std::vector<NatTrans> BimoduleOracle::basis(int k) const {
  NatTrans z = zero(k);
  std::vector<NatTrans> out;
  const long long n = z.flat_dim();
  for (long long i = 0; i < n; ++i) {
    CVec e = CVec::Zero(n);
    e[i] = 1.0;
    out.push_back(NatTrans::from_flat(z.domain(), z.codomain(), e));
  }
  return out;
}

NatTrans BimoduleOracle::include(const NatTrans& xi, int k) const {
  if (k + 1 > max_level_ + 1) structural_error("bimodule: level beyond the oracle's range");
  NatTrans w = whisker_right(c_->w(k + 1), x_chain(k));
  NatTrans dx = whisker_left(c_->target().functor(k + 1), xi);
  return nt_vertical(w, dx).rebased(d_chain(k + 1), h_codomain(k + 1));
}

NatTrans BimoduleOracle::include_to(NatTrans xi, int from, int to) const {
  for (int k = from; k < to; ++k) xi = include(xi, k);
  return xi;
}

NatTrans BimoduleOracle::project(const NatTrans& zeta, int k) const {
  const GraphFunctor delta = c_->target().functor(k + 1);
  NatTrans wstar = whisker_right(nt_star(c_->w(k + 1)), x_chain(k));
  NatTrans y = nt_vertical(wstar, zeta.rebased(d_chain(k + 1), wstar.domain()));
  DualitySolution sol =
      DualitySolution::tracial(delta, c_->target().weights(k), c_->target().weights(k + 1));
  NatTrans rho = cup(delta, sol);
  NatTrans a = whisker_right(rho, d_chain(k));
  NatTrans b = whisker_left(adjoint_functor(delta), y);
  NatTrans c = whisker_right(nt_star(rho), h_codomain(k));
  return nt_vertical(c, nt_vertical(b.rebased(a.codomain(), c.domain()), a))
      .rebased(d_chain(k), h_codomain(k));
}

NatTrans BimoduleOracle::project_to(NatTrans zeta, int from, int to) const {
  for (int k = from - 1; k >= to; --k) zeta = project(zeta, k);
  return zeta;
}

cplx BimoduleOracle::inner(const NatTrans& a, const NatTrans& b, int k) const {
  return nt_inner(a, b, RVec::Ones(1), c_->target().weights(k));
}

NatTrans BimoduleOracle::left_act(const NatTrans& a, const NatTrans& xi, int k) const {
  NatTrans la = whisker_left(c_->lambda(k), a);
  return nt_vertical(la.rebased(xi.codomain(), xi.codomain()), xi);
}

NatTrans BimoduleOracle::right_act(const NatTrans& xi, const NatTrans& b) const {
  return nt_vertical(xi, b.rebased(xi.domain(), xi.domain()));
}

NatTrans BimoduleOracle::lift(const UnitaryConnection& lam, const UnitaryConnection& om,
                              const NatTrans& gamma, const Chain& prefix, int k) {
  NatTrans wo = whisker_right(om.w(k + 1), prefix);
  NatTrans wl = whisker_right(lam.w(k + 1), prefix);
  NatTrans dg = whisker_left(lam.target().functor(k + 1), gamma);
  return nt_vertical(wo, nt_vertical(dg.rebased(wl.domain(), wo.domain()), nt_star(wl)));
}

NatTrans phi_action(const BimoduleOracle& lam, const BimoduleOracle& om, const NatTrans& gamma,
                    int k, const NatTrans& xi, int l) {
  NatTrans g = gamma;
  for (int j = 0; j < l; ++j)
    g = BimoduleOracle::lift(lam.connection(), om.connection(), g, lam.x_chain(k + j), k + j);
  g = g.rebased(lam.h_codomain(k + l), om.h_codomain(k + l));
  return nt_vertical(g, xi);
}

double compression_identity_check(const BimoduleOracle& lam, const BimoduleOracle& om,
                                  const NatTrans& eta, int k) {
  const UnitaryConnection& c1 = lam.connection();
  const UnitaryConnection& c2 = om.connection();
  LoopOperator s = loop_matrix(c1, c2, k);
  NtSpace hi = nt_space(c1, c2, k), lo = nt_space(c1, c2, k - 1);
  NatTrans seta = lo.unflatten(s.matrix * hi.flatten(eta));
  NatTrans ex = whisker_right(eta, lam.x_chain(k)).rebased(lam.h_codomain(k), om.h_codomain(k));
  NatTrans sx =
      whisker_right(seta, lam.x_chain(k - 1)).rebased(lam.h_codomain(k - 1), om.h_codomain(k - 1));
  double r = 0.0;
  for (const NatTrans& xi : lam.basis(k - 1)) {
    NatTrans lhs = om.project(nt_vertical(ex, lam.include(xi, k - 1)), k - 1);
    NatTrans rhs = nt_vertical(sx, xi);
    r = std::max(r, max_abs_diff(lhs, rhs));
  }
  return r;
}

PpBasis pp_basis(const BimoduleOracle& o) {
  PpBasis out;
  NatTrans z = o.zero(0);
  for (int n = 0; n < z.n_target(); ++n)
    for (long long i = 0; i < z.block(0, n).rows(); ++i) {
      NatTrans s = z;
      s.block(0, n)(i, 0) = 1.0;
      out.elements.push_back(s);
    }
  NatTrans sum(o.h_codomain(0), o.h_codomain(0));
  for (const NatTrans& s : out.elements) {
    sum += nt_vertical(s, nt_star(s));
    out.d_b += o.inner(s, s, 0).real();
  }
  out.resolution_residual = max_abs_diff(sum, NatTrans::identity(o.h_codomain(0)));
  return out;
}

FiniteLevelResult reconstruct_two_cell(const BimoduleOracle& lam, const BimoduleOracle& om,
                                       const CMat& op, int k) {
  NatTrans zeta(lam.h_codomain(k), om.h_codomain(k));
  NatTrans gz = om.zero(k);
  for (const NatTrans& s : pp_basis(lam).elements) {
    NatTrans is = lam.include_to(s, 0, k);
    NatTrans t = NatTrans::from_flat(gz.domain(), gz.codomain(), op * is.flatten());
    zeta += nt_vertical(t, nt_star(is));
  }
  CentralPart cp = central_part(zeta, lam.x_chain(k), lam.connection().lambda(k),
                                om.connection().lambda(k));
  FiniteLevelResult r{op, cp.eta, 0.0, cp.defect};
  return r;
}

FiniteLevelResult finite_level_two_cell(const BimoduleOracle& lam, const BimoduleOracle& om,
                                        const NatTrans& eta, int k) {
  NatTrans ex = whisker_right(eta, lam.x_chain(k)).rebased(lam.h_codomain(k), om.h_codomain(k));
  const long long dh = lam.dim(k), dg = om.dim(k);
  CMat op(dg, dh);
  std::vector<NatTrans> b = lam.basis(k);
  for (long long i = 0; i < dh; ++i) op.col(i) = nt_vertical(ex, b[static_cast<size_t>(i)]).flatten();
  FiniteLevelResult r = reconstruct_two_cell(lam, om, op, k);
  r.round_trip_residual = max_abs_diff(r.preimage, eta.rebased(r.preimage.domain(), r.preimage.codomain()));
  return r;
}

OracleDimension oracle_dimension(const BimoduleOracle& lam, const BimoduleOracle& om, int k,
                                 int steps) {
  const UnitaryConnection& c1 = lam.connection();
  const UnitaryConnection& c2 = om.connection();
  if (k + steps > lam.max_level() || k + steps > om.max_level())
    structural_error("oracle dimension: levels beyond the oracle's range");
  NtSpace sp = nt_space(c1, c2, k);
  OracleDimension out;
  out.level = k;
  // Column i stacks the centrality defects of basis element i at each step.
  std::vector<std::vector<CVec>> defects(static_cast<size_t>(steps));
  for (long long i = 0; i < sp.dim; ++i) {
    CVec e = CVec::Zero(sp.dim);
    e[i] = 1.0;
    NatTrans g = whisker_right(sp.unflatten(e), lam.x_chain(k))
                     .rebased(lam.h_codomain(k), om.h_codomain(k));
    for (int j = 1; j <= steps; ++j) {
      g = BimoduleOracle::lift(c1, c2, g, lam.x_chain(k + j - 1), k + j - 1)
              .rebased(lam.h_codomain(k + j), om.h_codomain(k + j));
      CentralPart cp = central_part(g, lam.x_chain(k + j), c1.lambda(k + j), c2.lambda(k + j));
      defects[static_cast<size_t>(j - 1)].push_back(cp.defect_flat);
    }
  }
  long long rows = 0;
  for (int l = 1; l <= steps; ++l) {
    rows += defects[static_cast<size_t>(l - 1)].empty() ? 0 : defects[static_cast<size_t>(l - 1)][0].size();
    CMat m = CMat::Zero(rows, sp.dim);
    long long r0 = 0;
    for (int j = 0; j < l; ++j) {
      const auto& dj = defects[static_cast<size_t>(j)];
      const long long h = dj.empty() ? 0 : dj[0].size();
      for (long long i = 0; i < sp.dim; ++i) m.block(r0, i, h, 1) = dj[static_cast<size_t>(i)];
      r0 += h;
    }
    long long rank = 0;
    if (m.size() > 0) {
      Eigen::BDCSVD<CMat> svd(m);
      const RVec& s = svd.singularValues();
      const double th = 1e-9 * std::max(1.0, s.size() ? s[0] : 0.0);
      for (Eigen::Index q = 0; q < s.size(); ++q)
        if (s[q] > th) ++rank;
    }
    out.dims.push_back(sp.dim - rank);
  }
  out.stabilized_at = steps;
  while (out.stabilized_at > 1 &&
         out.dims[static_cast<size_t>(out.stabilized_at - 2)] == out.final_dim())
    --out.stabilized_at;
  return out;
}

ThetaReport theta_candidates(const UnitaryConnection& c, int upto) {
  ThetaReport rep;
  for (int k = 0; k <= upto; ++k) {
    RVec lv = c.lambda(k).adjacency().cast<double>().transpose() * c.target().weights(k);
    rep.theta.push_back(c.source().weights(k).cwiseQuotient(lv));
  }
  const int L = c.presentation().preperiod, K = c.presentation().period;
  for (int k = L; k + K <= upto; ++k) {
    const RVec& a = rep.theta[static_cast<size_t>(k)];
    const RVec& b = rep.theta[static_cast<size_t>(k + K)];
    rep.period_drift = std::max(rep.period_drift, (a - b).cwiseAbs().maxCoeff() / a.cwiseAbs().maxCoeff());
  }
  return rep;
}

double module_compat_residual(const BimoduleOracle& o, int k, std::mt19937_64& rng, int samples) {
  const Chain& x = o.x_chain(k);
  const Chain& d = o.d_chain(k);
  const GraphFunctor gam = o.connection().source().functor(k + 1);
  const GraphFunctor del = o.connection().target().functor(k + 1);
  double r = 0.0;
  for (int t = 0; t < samples; ++t) {
    NatTrans xi = NatTrans::from_flat(d, o.h_codomain(k), gaussian(o.dim(k), rng));
    NatTrans a0(x, x);
    NatTrans a = NatTrans::from_flat(x, x, gaussian(a0.flat_dim(), rng));
    NatTrans b0(d, d);
    NatTrans b = NatTrans::from_flat(d, d, gaussian(b0.flat_dim(), rng));
    NatTrans lhs = o.include(o.left_act(a, o.right_act(xi, b), k), k);
    NatTrans ga = whisker_left(gam, a).rebased(o.x_chain(k + 1), o.x_chain(k + 1));
    NatTrans db = whisker_left(del, b).rebased(o.d_chain(k + 1), o.d_chain(k + 1));
    NatTrans rhs = o.left_act(ga, o.right_act(o.include(xi, k), db), k + 1);
    r = std::max(r, max_abs_diff(lhs, rhs));
  }
  return r;
}

}  // namespace conncalc
