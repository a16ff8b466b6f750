// Acceptance criteria 1-10.  One PASS/FAIL line each; exits nonzero when any
// criterion fails.

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>

#include "common.hpp"
#include "conncalc/io.hpp"
#include "oracles.hpp"

using namespace conncalc;
using namespace testutil;

namespace {

struct Outcome {
  bool ok = true;
  std::ostringstream detail;
  void require(bool cond, const std::string& what) {
    if (!cond) {
      if (ok) detail << "failed: ";
      detail << what << "; ";
      ok = false;
    }
  }
};

std::string sci(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2e", x);
  return buf;
}

// Per-entry weights μ^k_u ν^k_n of NT(Λ_k, Ω_k), from the tower weights.
RVec entry_weights(const UnitaryConnection& c, const NtSpace& sp, int k) {
  RVec w(sp.dim);
  const RVec mu = c.source().weights(k), nu = c.target().weights(k);
  for (const auto& b : sp.blocks) w.segment(b.offset, b.rows * b.cols).setConstant(mu[b.u] * nu[b.n]);
  return w;
}

// A second connection on the same towers with a random commuting Λ.
ConnectionPtr sibling(const ConnectionPtr& a, std::mt19937_64& rng, bool same_lambda) {
  IMat lam = a->stored_lambda(0).adjacency();
  if (!same_lambda) {
    const IMat g = a->source().functor(1).adjacency();
    std::vector<IMat> ls = search_lambdas(g, g, 3, 12, 200000);
    std::vector<IMat> small;
    for (const IMat& l : ls)
      if ((l * g).maxCoeff() <= 9) small.push_back(l);
    if (!small.empty()) lam = small[std::uniform_int_distribution<size_t>(0, small.size() - 1)(rng)];
  }
  return std::make_shared<const UnitaryConnection>(
      build_random_connection(a->source_ptr(), a->target_ptr(), {lam}, rng()));
}

// Criterion 1: UCP properties of S on random connections.
void ucp(Outcome& o) {
  std::mt19937_64 rng(1001);
  double unital = 0.0, star = 0.0, schwarz = 0.0, radius = 0.0;
  for (int t = 0; t < 200; ++t) {
    ConnectionPtr c = random_self_connection(rng, 4, 3);
    for (int k = 1; k <= 2; ++k) {
      LoopOperator s = loop_matrix(*c, *c, k);
      UcpReport r = ucp_suite(*c, k, s, 8, rng());
      unital = std::max(unital, r.unital_residual);
      star = std::max(star, r.star_residual);
      schwarz = std::min(schwarz, r.schwarz_min_eig);
      o.require(r.spectral_radius.has_value(), "spectral radius unavailable");
      if (r.spectral_radius) radius = std::max(radius, *r.spectral_radius);
    }
  }
  o.require(unital < 1e-10, "unital residual " + sci(unital));
  o.require(star < 1e-12, "star residual " + sci(star));
  o.require(schwarz >= -1e-9, "Schwarz defect " + sci(schwarz));
  o.require(radius <= 1.0 + 1e-9, "spectral radius " + sci(radius));
  o.detail << "200 connections, levels 1-2: unital " << sci(unital) << ", star " << sci(star)
           << ", min Schwarz eigenvalue " << sci(schwarz) << ", max radius " << sci(radius);
}

// Criterion 2: <Sη, κ> = <η, S*κ> over full bases with independently built weights.
void adjoint(Outcome& o) {
  std::mt19937_64 rng(1002);
  double worst = 0.0;
  int pairs = 0;
  auto check = [&](const ConnectionPtr& a, const ConnectionPtr& b) {
    for (int k = 1; k <= 2; ++k) {
      LoopOperator s = loop_matrix(*a, *b, k);
      NtSpace hi = nt_space(*a, *b, k), lo = nt_space(*a, *b, k - 1);
      const RVec wh = entry_weights(*a, hi, k), wl = entry_weights(*a, lo, k - 1);
      // Entry (j, i): <S e_i, f_j>_lo - <e_i, S* f_j>_hi.
      CMat r = wl.cast<cplx>().asDiagonal() * s.matrix -
               (wh.cast<cplx>().asDiagonal() * s.adjoint_matrix).adjoint();
      if (r.size()) worst = std::max(worst, r.cwiseAbs().maxCoeff());
    }
    ++pairs;
  };
  for (int t = 0; t < 60; ++t) {
    ConnectionPtr a = random_self_connection(rng, 4, 3);
    check(a, a);
    check(a, sibling(a, rng, t % 2 == 0));
  }
  for (int nx = 1; nx <= 3; ++nx)
    for (int ny = 1; ny <= 3; ++ny) {
      auto a = vertex_ptr(haar_unitary(nx * ny, rng), nx, ny);
      check(a, vertex_ptr(haar_unitary(nx * ny, rng), nx, ny));
    }
  o.require(worst < 1e-10, "adjoint residual " + sci(worst));
  o.detail << pairs << " pairs, levels 1-2: max residual " << sci(worst);
}

// Criterion 3: the exchange relation and S*Sη = loop·η agree on every sample.
void exchange(Outcome& o) {
  std::mt19937_64 rng(1003);
  long long samples = 0, holds = 0, fails = 0, disagreements = 0;
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int t = 0; t < 20; ++t) {
    ConnectionPtr c = t % 2 ? random_self_connection(rng, 3, 2, true)
                            : vertex_ptr(haar_unitary(4 + 2 * (t % 4 == 0), rng), 2 + (t % 4 == 0), 2);
    const int k = 1 + t % 2;
    LoopOperator s = loop_matrix(*c, *c, k);
    NtSpace sp = nt_space(*c, *c, k);
    std::vector<CVec> flat;
    for (const auto& seq : periodic_two_cells(c, c)) flat.push_back(seq.at_flat(k));
    for (int r = 0; r < 200; ++r) {
      CVec x = CVec::Zero(sp.dim);
      if (r % 2 == 0) {
        for (const CVec& f : flat) x += cplx(normal(rng), normal(rng)) * f;
      } else {
        x = random_flat(sp, rng);
      }
      ExchangeLoopResult e = exchange_via_loop(*c, *c, k, sp.unflatten(x), s, 1e-8, true);
      ++samples;
      if (!e.agrees) ++disagreements;
      (e.holds ? holds : fails) += 1;
    }
  }
  o.require(disagreements == 0, std::to_string(disagreements) + " disagreements");
  o.require(holds > 0 && fails > 0, "both verdicts must occur");
  o.detail << "20 instances x 200 samples: " << holds << " hold, " << fails << " fail, "
           << disagreements << " disagreements of " << samples;
}

// Criterion 4: vertex-model S against the closed form.
void vertex(Outcome& o) {
  std::mt19937_64 rng(1004);
  double worst = 0.0, ident = 0.0;
  for (int t = 0; t < 20; ++t) {
    const int nx = 1 + t % 3, ny = 1 + (t / 3) % 3;
    CMat u = haar_unitary(nx * ny, rng);
    UnitaryConnection c = build_vertex_model(u, nx, ny);
    for (int k = 1; k <= 2; ++k) {
      LoopOperator s = loop_matrix(c, c, k);
      worst = std::max(worst, (s.matrix - oracle::vertex_s(u, nx, ny)).cwiseAbs().maxCoeff());
      worst = std::max(worst, (s.adjoint_matrix - double(nx * nx) * oracle::vertex_s_star(u, nx, ny))
                                  .cwiseAbs()
                                  .maxCoeff());
    }
  }
  for (int nx = 1; nx <= 3; ++nx)
    for (int ny = 1; ny <= 3; ++ny) {
      UnitaryConnection c = build_vertex_model(CMat::Identity(nx * ny, nx * ny), nx, ny);
      LoopOperator s = loop_matrix(c, c, 1);
      ident = std::max(ident, (s.matrix - CMat::Identity(ny * ny, ny * ny)).cwiseAbs().maxCoeff());
    }
  o.require(worst < 1e-12, "closed-form gap " + sci(worst));
  o.require(ident < 1e-14, "identity gap " + sci(ident));
  o.detail << "20 unitaries with |X|,|Y| <= 3: gap " << sci(worst) << "; U = I gap " << sci(ident);
}

// Criterion 5: every periodic 2-cell of a PF instance is flat.
void flatness(Outcome& o) {
  std::mt19937_64 rng(1005);
  long long cells = 0, nonflat = 0, unfolded = 0, inhabited = 0;
  double worst = 0.0;
  for (int t = 0; t < 50; ++t) {
    ConnectionPtr a, b;
    if (t % 5 == 4) {
      // A period-one tower unfolded to period two, with independent W per level.
      ZeroCellPtr base = random_periodic_tower(rng, t % 2, 1);
      const Presentation& p = base->presentation();
      auto tower = std::make_shared<const TracialBratteli>(base->unfold(p.preperiod, 2));
      a = random_identity_functor_connection(tower, rng);
      b = t % 2 ? a : random_identity_functor_connection(tower, rng);
      ++unfolded;
    } else if (t % 5 == 3) {
      a = random_self_connection(rng, 3, 2, true);
      b = t % 2 ? a : sibling(a, rng, true);
    } else {
      ZeroCellPtr tower = random_periodic_tower(rng, t % 3, 1 + t % 2);
      a = random_identity_functor_connection(tower, rng);
      b = t % 3 == 1 ? random_identity_functor_connection(tower, rng) : a;
    }
    std::vector<std::string> hyp = periodic_hypotheses(*a, *b);
    o.require(hyp.empty(), "instance " + std::to_string(t) + " violates the hypotheses");
    if (!hyp.empty()) continue;
    auto found = periodic_two_cells(a, b);
    if (!found.empty()) ++inhabited;
    for (const auto& s : found) {
      FlatReport r = is_flat(s, -1, 1e-8);
      ++cells;
      if (!r.flat) ++nonflat;
      if (r.flat_from) {
        for (size_t i = static_cast<size_t>(*r.flat_from); i < r.residuals.size(); ++i)
          worst = std::max(worst, r.residuals[i]);
      }
    }
  }
  o.require(nonflat == 0, std::to_string(nonflat) + " non-flat cells");
  // Pairs of equal 1-cells always carry the identity, so most instances are non-vacuous.
  o.require(inhabited >= 30, "only " + std::to_string(inhabited) + " instances with cells");
  o.detail << "50 instances (" << unfolded << " unfolded to period 2, " << inhabited
           << " with cells): " << cells << " cells, all flat, worst tail residual " << sci(worst);
}

// Criterion 6: bounded harmonic sequences of the three small fixtures.
void harmonic(Outcome& o) {
  CMat half = CMat::Constant(1, 1, 0.5), one = CMat::Constant(1, 1, 1.0), flip(2, 2);
  flip << 0, 1, 1, 0;
  const std::vector<std::pair<CMat, size_t>> cases{{half, 0}, {one, 1}, {flip, 2}};
  double worst = 0.0;
  std::string dims;
  for (const auto& [x, expected] : cases) {
    HarmonicBasis b = bounded_harmonic_basis(x);
    o.require(b.dim() == expected, "dimension " + std::to_string(b.dim()) + " != " + std::to_string(expected));
    dims += std::to_string(b.dim()) + " ";
    for (const auto& e : b.elements)
      for (int k = 0; k <= 20; ++k) {
        CVec xk = std::pow(e.phase, -k) * e.vector;
        CVec xk1 = std::pow(e.phase, -(k + 1)) * e.vector;
        worst = std::max(worst, (x * xk1 - xk).cwiseAbs().maxCoeff());
      }
  }
  o.require(worst < 1e-10, "recursion residual " + sci(worst));
  o.detail << "dimensions " << dims << "; recursion residual for k <= 20 " << sci(worst);
}

// Criterion 7: the undirected-graph fixture has a one-dimensional flat part.
void graph_identity(Outcome& o) {
  Project p = load_project(std::string(CONNCALC_FIXTURES) + "/undirected_graph.json");
  ConnectionPtr c = p.one_cell("id").cell;
  auto cells = periodic_two_cells(c, c);
  size_t flat = 0;
  for (const auto& s : cells)
    if (is_flat(s).flat) ++flat;
  o.require(cells.size() == 1 && flat == 1, "flat dimension " + std::to_string(flat));
  o.detail << "undirected_graph.json: " << cells.size() << " periodic cells, " << flat << " flat";
}

// Criterion 8: path-space oracle identities.
void oracle_suite(Outcome& o) {
  std::mt19937_64 rng(1008);
  double comp = 0.0, round = 0.0, pp = 0.0;
  int instances = 0;
  for (int t = 0; t < 24; ++t) {
    ConnectionPtr a, b;
    switch (t % 4) {
      case 0:
        a = vertex_ptr(haar_unitary(4, rng), 2, 2);
        b = vertex_ptr(haar_unitary(4, rng), 2, 2);
        break;
      case 1:
        a = vertex_ptr(haar_unitary(6, rng), 3, 2);
        b = a;
        break;
      case 2:
        a = random_self_connection(rng, 3, 2);
        b = sibling(a, rng, true);
        break;
      default: {
        ZeroCellPtr tower = random_periodic_tower(rng, 1, 1 + t % 2);
        a = random_identity_functor_connection(tower, rng);
        b = random_identity_functor_connection(tower, rng);
      }
    }
    BimoduleOracle oa(a, 4), ob(b, 4);
    pp = std::max({pp, pp_basis(oa).resolution_residual, pp_basis(ob).resolution_residual});
    for (int k = 1; k <= 3; ++k) {
      if (oa.dim(k) > 600 || ob.dim(k) > 600) break;
      NtSpace sp = nt_space(*a, *b, k);
      for (int r = 0; r < 2; ++r) {
        NatTrans eta = sp.unflatten(random_flat(sp, rng));
        comp = std::max(comp, compression_identity_check(oa, ob, eta, k));
        round = std::max(round, finite_level_two_cell(oa, ob, eta, k).round_trip_residual);
      }
    }
    ++instances;
  }
  o.require(comp < 1e-9, "compression residual " + sci(comp));
  o.require(round < 1e-11, "round trip residual " + sci(round));
  o.require(pp < 1e-12, "Pimsner-Popa residual " + sci(pp));
  o.detail << instances << " pairs: compression " << sci(comp) << ", round trip " << sci(round)
           << ", sum of sigma sigma* " << sci(pp);
}

// Criterion 9: fusion bounds and the interchange law.
void fusion(Outcome& o) {
  std::mt19937_64 rng(1009);
  double eps_gap = 0.0, m_gap = 0.0;
  for (int t = 0; t < 50; ++t) {
    ConnectionPtr a, b;
    if (t % 5 == 4) {
      const int nx = 1 + t % 3, ny = 1 + (t / 5) % 2;
      a = vertex_ptr(haar_unitary(nx * ny, rng), nx, ny);
      b = vertex_ptr(haar_unitary(nx * ny, rng), nx, ny);
    } else {
      a = random_self_connection(rng, 3, 2);
      b = sibling(a, rng, t % 2 == 0);
    }
    UnitaryConnection f = tensor_one_cells(*a, *b);
    OneCellReport ra = validate_one_cell(*a), rb = validate_one_cell(*b), rf = validate_one_cell(f);
    o.require(rf.ok, "fused cell " + std::to_string(t) + " invalid");
    eps_gap = std::min(eps_gap, rf.eps - ra.eps * rb.eps);
    m_gap = std::max(m_gap, rf.M - ra.M * rb.M);
  }
  o.require(eps_gap >= -1e-9, "eps bound violated by " + sci(-eps_gap));
  o.require(m_gap <= 1e-9, "M bound violated by " + sci(m_gap));

  double inter = 0.0;
  int quads = 0;
  for (int t = 0; quads < 20 && t < 60; ++t) {
    CMat u1 = haar_unitary(4, rng), u2 = haar_unitary(4, rng);
    // Separately built 1-cells with equal data.
    auto a = vertex_ptr(u1, 2, 2), b = vertex_ptr(u1, 2, 2);
    auto c = vertex_ptr(u2, 2, 2), d = vertex_ptr(u2, 2, 2);
    auto ab = periodic_two_cells(a, b), bb = periodic_two_cells(b, b);
    auto cd = periodic_two_cells(c, d), dd = periodic_two_cells(d, d);
    if (ab.empty() || bb.empty() || cd.empty() || dd.empty()) continue;
    auto pick = [&](const std::vector<TwoCellSeq>& v) -> const TwoCellSeq& {
      return v[std::uniform_int_distribution<size_t>(0, v.size() - 1)(rng)];
    };
    const TwoCellSeq &eta = pick(ab), &xi = pick(bb), &kap = pick(cd), &zet = pick(dd);
    TwoCellSeq lhs = vertical_compose(horizontal_compose(zet, xi), horizontal_compose(kap, eta));
    TwoCellSeq rhs = horizontal_compose(vertical_compose(zet, kap), vertical_compose(xi, eta));
    for (int k = 0; k <= 3; ++k) inter = std::max(inter, (lhs.at_flat(k) - rhs.at_flat(k)).cwiseAbs().maxCoeff());
    ++quads;
  }
  o.require(quads == 20, "only " + std::to_string(quads) + " quadruples");
  o.require(inter < 1e-8, "interchange residual " + sci(inter));
  o.detail << "50 pairs: min eps margin " << sci(eps_gap) << ", max M excess " << sci(m_gap) << "; "
           << quads << " quadruples: interchange residual " << sci(inter);
}

// Criterion 10: trace compatibility across AF inclusions and for composites.
void traces(Outcome& o) {
  std::mt19937_64 rng(1010);
  double af = 0.0, nt = 0.0;
  for (int inst = 0; inst < 20; ++inst) {
    ZeroCellPtr b = random_periodic_tower(rng, inst % 3, 1 + inst % 2, 3, 2);
    AfTower tower = af_tower(*b, 8);
    std::vector<CMat> a;
    for (long long d : tower.levels[0].dims) a.push_back(random_cmat(d, d, rng));
    for (int k = 0; k < 8; ++k) {
      const auto& next = tower.levels[static_cast<size_t>(k + 1)].dims;
      if (*std::max_element(next.begin(), next.end()) > 400) break;
      std::vector<CMat> up = oracle::af_embed(a, tower.inclusions[static_cast<size_t>(k)], next);
      o.require(!up.empty(), "AF dimensions inconsistent with the inclusion");
      if (up.empty()) break;
      const cplx lo = oracle::weighted_trace(a, tower.levels[static_cast<size_t>(k)].trace_weights);
      const cplx hi = oracle::weighted_trace(up, tower.levels[static_cast<size_t>(k + 1)].trace_weights);
      af = std::max(af, std::abs(lo - hi) / std::max(1.0, std::abs(lo)));
      a = up;
    }
  }
  for (int t = 0; t < 50; ++t) {
    RVec mu = random_weights(2, rng), nu = random_weights(3, rng), pi = random_weights(2, rng);
    GraphFunctor lam(cat_w(mu), cat_w(nu, "w"), random_adjacency(3, 2, 3, rng));
    GraphFunctor sig(cat_w(nu, "w"), cat_w(pi, "x"), random_adjacency(2, 3, 3, rng));
    Chain comp = Chain(lam).then(sig);
    NatTrans eta = random_nt(comp, comp, rng);
    TraceCompatResult r = nt_trace_compat_check(lam, sig, eta, mu, nu, pi);
    const cplx direct = oracle::nt_trace(eta, mu, pi);
    const double scale = std::max(1.0, std::abs(direct));
    nt = std::max({nt, r.residual / scale, std::abs(r.total - direct) / scale,
                   std::abs(r.via_lambda - direct) / scale, std::abs(r.via_sigma - direct) / scale});
  }
  o.require(af < 1e-10, "AF trace residual " + sci(af));
  o.require(nt < 1e-10, "composite trace residual " + sci(nt));
  o.detail << "20 towers up to level 8: AF residual " << sci(af) << "; 50 composites: trace residual "
           << sci(nt);
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria{
      {"UCP suite", ucp},
      {"adjoint identity", adjoint},
      {"exchange biconditional", exchange},
      {"vertex-model closed form", vertex},
      {"periodic flatness", flatness},
      {"harmonic characterization", harmonic},
      {"graph-identity flat part", graph_identity},
      {"oracle certification", oracle_suite},
      {"fusion bounds and interchange", fusion},
      {"trace stack", traces},
  };
  int failed = 0;
  for (size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      criteria[i].second(o);
    } catch (const std::exception& e) {
      o.ok = false;
      o.detail << "exception: " << e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!o.ok) ++failed;
    std::cout << (o.ok ? "PASS" : "FAIL") << " " << (i + 1) << " " << criteria[i].first << ": "
              << o.detail.str() << " (" << sci(secs) << " s)" << std::endl;
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
