#include "conncalc/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "conncalc/bimodule.hpp"
#include "conncalc/harmonic.hpp"
#include "conncalc/io.hpp"

namespace conncalc {

namespace {

constexpr double kVerdict = 1e-8;

struct Context {
  double tol = 1e-9;
  std::ostream* out;
  std::ostream* err;
};

Json report_header(const Context& ctx, const std::string& command) {
  Json j;
  j["schema"] = kReportSchema;
  j["tool_version"] = CONNCALC_VERSION;
  j["command"] = command;
  j["tolerances"] = {{"validation", ctx.tol}, {"verdict", kVerdict}, {"peripheral", kPeripheralTol}};
  return j;
}

Json cplx_json(cplx z) { return Json::array({z.real(), z.imag()}); }

std::pair<std::string, std::string> split_pair(const std::string& s, const std::string& flag) {
  auto comma = s.find(',');
  if (comma == std::string::npos || comma == 0 || comma + 1 == s.size())
    throw Error(ErrorKind::Input, flag + " expects NAME,NAME");
  return {s.substr(0, comma), s.substr(comma + 1)};
}

Json zero_report(const TracialBratteli& b, double tol) {
  ZeroCellReport r = validate_zero_cell(b, tol);
  return {{"ok", r.ok},
          {"errors", r.errors},
          {"trace_residuals", r.trace_residuals},
          {"normalization_residual", r.normalization_residual},
          {"periodic_residual", r.periodic_residual}};
}

Json one_report(const UnitaryConnection& c, double tol) {
  OneCellReport r = validate_one_cell(c, tol);
  return {{"ok", r.ok},
          {"errors", r.errors},
          {"unitarity_residual", r.unitarity_residual},
          {"eps", r.eps},
          {"M", r.M},
          {"scanned_levels", r.scanned_levels}};
}

int cmd_validate(const Context& ctx, const Project& p, const std::string& cell) {
  Json rep = report_header(ctx, "validate");
  rep["zero_cells"] = Json::object();
  rep["one_cells"] = Json::object();
  bool ok = true;
  bool found = cell.empty();
  for (const auto& [name, e] : p.one_cells) {
    if (!cell.empty() && name != cell) continue;
    found = true;
    Json r = one_report(*e.cell, ctx.tol);
    ok = ok && r["ok"].get<bool>();
    rep["one_cells"][name] = r;
    for (const std::string& z : {e.source, e.target})
      if (!rep["zero_cells"].contains(z)) {
        Json zr = zero_report(*p.zero_cells.at(z), ctx.tol);
        ok = ok && zr["ok"].get<bool>();
        rep["zero_cells"][z] = zr;
      }
  }
  for (const auto& [name, z] : p.zero_cells) {
    if (!cell.empty() && name != cell) continue;
    found = true;
    if (rep["zero_cells"].contains(name)) continue;
    Json zr = zero_report(*z, ctx.tol);
    ok = ok && zr["ok"].get<bool>();
    rep["zero_cells"][name] = zr;
  }
  if (!found) throw Error(ErrorKind::Input, "no cell named '" + cell + "'");
  rep["ok"] = ok;
  *ctx.out << canonical_dump(rep);
  return ok ? 0 : 1;
}

std::vector<cplx> sorted_spectrum(const CMat& m) {
  Eigen::ComplexEigenSolver<CMat> es(m, false);
  std::vector<cplx> ev(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
  auto angle = [](cplx z) {
    double a = std::arg(z);
    if (a < 0) a += 2 * std::numbers::pi;
    if (2 * std::numbers::pi - a < 1e-9) a = 0.0;
    return a;
  };
  std::sort(ev.begin(), ev.end(), [&](cplx a, cplx b) {
    const double ma = std::abs(a), mb = std::abs(b);
    if (std::abs(ma - mb) > 1e-12) return ma > mb;
    return angle(a) < angle(b);
  });
  return ev;
}

int cmd_loop_matrix(const Context& ctx, const Project& p, const std::string& pair, int level,
                    const std::string& out_path) {
  auto [a, b] = split_pair(pair, "--pair");
  const auto& ca = p.one_cell(a);
  const auto& cb = p.one_cell(b);
  if (level < 1) throw Error(ErrorKind::Input, "--level must be >= 1");
  LoopOperator s = loop_matrix(*ca.cell, *cb.cell, level);
  Json rep = report_header(ctx, "loop-matrix");
  rep["pair"] = {a, b};
  rep["level"] = level;
  rep["rows"] = s.matrix.rows();
  rep["cols"] = s.matrix.cols();
  rep["adjoint_residual"] = s.adjoint_residual;
  rep["endomorphic"] = s.endomorphic;
  if (s.matrix.rows() == s.matrix.cols() && s.matrix.size() > 0) {
    Json spec = Json::array();
    double radius = 0.0;
    for (cplx z : sorted_spectrum(s.matrix)) {
      spec.push_back(cplx_json(z));
      radius = std::max(radius, std::abs(z));
    }
    rep["spectrum"] = spec;
    rep["spectral_radius"] = radius;
    rep["spectral_radius_ok"] = radius <= 1.0 + 1e-9;
  }
  Json full = rep;
  full["S"] = matrix_to_json(s.matrix);
  full["S_adjoint"] = matrix_to_json(s.adjoint_matrix);
  if (!out_path.empty()) {
    write_atomic(out_path, canonical_dump(full));
    export_binary(out_path + ".S.bin", s.matrix);
    export_binary(out_path + ".Sadj.bin", s.adjoint_matrix);
    rep["files"] = {out_path, out_path + ".S.bin", out_path + ".Sadj.bin"};
    *ctx.out << canonical_dump(rep);
  } else {
    *ctx.out << canonical_dump(full);
  }
  return s.adjoint_residual < 1e-10 ? 0 : 1;
}

Json tail_json(const TwoCellSeq& s) {
  Json tail = Json::array();
  for (const auto& t : s.tail()) tail.push_back({{"phase", cplx_json(t.phase)}, {"vector", vector_to_json(t.vector)}});
  return tail;
}

Json cell_json(const TwoCellSeq& s) {
  FlatReport f = is_flat(s, -1, kVerdict);
  const int L = s.tower().preperiod(), K = s.tower().period();
  Json j;
  j["phase"] = cplx_json(s.tail().empty() ? cplx(0.0) : s.tail().front().phase);
  j["flat"] = f.flat;
  j["flat_from"] = f.flat_from ? Json(*f.flat_from) : Json(nullptr);
  j["worst_exchange_residual"] = f.worst;
  j["quasi_flat_residual"] = s.quasi_flat_residual(L + 3 * K);
  j["tail"] = tail_json(s);
  return j;
}

int cmd_flat_part(const Context& ctx, const Project& p, const std::string& pair) {
  auto [a, b] = split_pair(pair, "--pair");
  std::vector<TwoCellSeq> cells = periodic_two_cells(p.one_cell(a).cell, p.one_cell(b).cell, ctx.tol);
  Json rep = report_header(ctx, "flat-part");
  rep["pair"] = {a, b};
  rep["dimension"] = cells.size();
  Json arr = Json::array();
  size_t flat = 0;
  for (const auto& c : cells) {
    Json cj = cell_json(c);
    if (cj["flat"].get<bool>()) ++flat;
    arr.push_back(cj);
  }
  rep["cells"] = arr;
  rep["flat_dimension"] = flat;
  if (!cells.empty()) {
    rep["reference_level"] = cells.front().tower().preperiod();
    rep["period"] = cells.front().tower().period();
  }
  *ctx.out << canonical_dump(rep);
  return flat == cells.size() ? 0 : 1;
}

std::vector<TwoCellSeq> cells_of(const Project& p, const std::string& pair, const std::string& flag,
                                 double tol) {
  auto [a, b] = split_pair(pair, flag);
  return periodic_two_cells(p.one_cell(a).cell, p.one_cell(b).cell, tol);
}

const TwoCellSeq& pick(const std::vector<TwoCellSeq>& cells, int i, const std::string& flag) {
  if (i < 0 || static_cast<size_t>(i) >= cells.size())
    throw Error(ErrorKind::Input, flag + " is out of range (the 2-cell space has dimension " +
                                      std::to_string(cells.size()) + ")");
  return cells[static_cast<size_t>(i)];
}

int cmd_compose(const Context& ctx, const Project& p, bool vertical, const std::string& first,
                const std::string& second, int i, int j) {
  LimitReport lr;
  Json rep = report_header(ctx, "compose");
  std::optional<TwoCellSeq> result;
  if (vertical) {
    auto c1 = cells_of(p, first, "--first", ctx.tol);
    auto c2 = cells_of(p, second, "--second", ctx.tol);
    if (split_pair(first, "--first").second != split_pair(second, "--second").first)
      throw Error(ErrorKind::Input, "vertical composition needs --first A,B and --second B,C");
    result = vertical_compose(pick(c2, j, "--j"), pick(c1, i, "--i"), &lr);
    rep["mode"] = "vertical";
    rep["first"] = first;
    rep["second"] = second;
  } else {
    auto inner = cells_of(p, first, "--inner", ctx.tol);
    auto outer = cells_of(p, second, "--outer", ctx.tol);
    result = horizontal_compose(pick(outer, j, "--j"), pick(inner, i, "--i"), &lr);
    rep["mode"] = "horizontal";
    rep["inner"] = first;
    rep["outer"] = second;
  }
  rep["i"] = i;
  rep["j"] = j;
  rep["limit"] = {{"iterations", lr.iterations},
                  {"cesaro", lr.cesaro},
                  {"spectral_agreement", lr.spectral_agreement},
                  {"non_peripheral", lr.non_peripheral}};
  Json cj = cell_json(*result);
  cj.erase("phase");
  rep["result"] = cj;
  *ctx.out << canonical_dump(rep);
  const bool ok = lr.spectral_agreement < 1e-7 && cj["quasi_flat_residual"].get<double>() < 1e-9;
  return ok ? 0 : 1;
}

int cmd_fuse(const Context& ctx, Project p, const std::string& outer, const std::string& inner,
             const std::string& name, const std::string& out_path) {
  const auto& eo = p.one_cell(outer);
  const auto& ei = p.one_cell(inner);
  if (p.one_cells.count(name)) throw Error(ErrorKind::Input, "1-cell '" + name + "' already exists");
  auto fused = std::make_shared<const UnitaryConnection>(tensor_one_cells(*eo.cell, *ei.cell));
  OneCellEntry e{ei.source, eo.target, fused};
  if (!fused->source().structurally_equal(*p.zero_cells.at(e.source))) {
    e.source = name + "_source";
    p.zero_cells[e.source] = fused->source_ptr();
  }
  if (!fused->target().structurally_equal(*p.zero_cells.at(e.target))) {
    e.target = name + "_target";
    p.zero_cells[e.target] = fused->target_ptr();
  }
  OneCellReport ro = validate_one_cell(*eo.cell, ctx.tol);
  OneCellReport ri = validate_one_cell(*ei.cell, ctx.tol);
  OneCellReport rf = validate_one_cell(*fused, ctx.tol);
  p.one_cells[name] = e;
  Json rep = report_header(ctx, "fuse");
  rep["name"] = name;
  rep["outer"] = outer;
  rep["inner"] = inner;
  rep["fused"] = one_report(*fused, ctx.tol);
  rep["bounds"] = {{"eps", rf.eps},
                   {"M", rf.M},
                   {"eps_outer", ro.eps},
                   {"M_outer", ro.M},
                   {"eps_inner", ri.eps},
                   {"M_inner", ri.M},
                   {"eps_ok", rf.eps >= ro.eps * ri.eps - 1e-9},
                   {"M_ok", rf.M <= ro.M * ri.M + 1e-9}};
  if (!out_path.empty()) {
    write_atomic(out_path, serialize_project(p));
    rep["written"] = out_path;
  }
  *ctx.out << canonical_dump(rep);
  const bool ok = rf.ok && rep["bounds"]["eps_ok"].get<bool>() && rep["bounds"]["M_ok"].get<bool>();
  return ok ? 0 : 1;
}

// Largest level whose H-space stays below the budget, capped at `cap`.
int affordable_level(const BimoduleOracle& o, int cap, long long budget) {
  int k = 0;
  while (k + 1 <= cap && k + 1 <= o.max_level() && o.dim(k + 1) <= budget) ++k;
  return k;
}

int cmd_oracle(const Context& ctx, const Project& p, const std::string& suite, unsigned long long seed) {
  if (suite != "full" && suite != "quick") throw Error(ErrorKind::Input, "--suite must be full or quick");
  const bool full = suite == "full";
  Json rep = report_header(ctx, "oracle");
  rep["suite"] = suite;
  rep["seed"] = seed;
  std::mt19937_64 rng(seed);
  bool ok = true;
  Json cells = Json::object();
  for (const auto& [name, e] : p.one_cells) {
    const Presentation& pr = e.cell->presentation();
    const int top = pr.preperiod + 2 * pr.period + 1;
    BimoduleOracle o(e.cell, top);
    const int kmax = std::max(1, affordable_level(o, full ? 3 : 2, 600));
    Json cj;
    PpBasis pp = pp_basis(o);
    cj["pp_basis"] = {{"size", pp.elements.size()}, {"d_B", pp.d_b}, {"resolution_residual", pp.resolution_residual}};
    ok = ok && pp.resolution_residual < 1e-12;
    double iso = 0.0, pincl = 0.0, compat = 0.0;
    for (int k = 0; k < kmax; ++k) {
      NatTrans z = o.zero(k);
      CVec x(z.flat_dim());
      std::normal_distribution<double> normal(0.0, 1.0);
      for (Eigen::Index i = 0; i < x.size(); ++i) {
        double re = normal(rng);
        double im = normal(rng);
        x[i] = cplx(re, im);
      }
      NatTrans xi = NatTrans::from_flat(z.domain(), z.codomain(), x);
      NatTrans ix = o.include(xi, k);
      const double n2 = o.inner(xi, xi, k).real();
      iso = std::max(iso, std::abs(o.inner(ix, ix, k + 1).real() - n2) / std::max(1e-300, n2));
      pincl = std::max(pincl, max_abs_diff(o.project(ix, k), xi));
      compat = std::max(compat, module_compat_residual(o, k, rng, 2));
    }
    cj["inclusion_isometry_residual"] = iso;
    cj["projection_of_inclusion_residual"] = pincl;
    cj["module_compat_residual"] = compat;
    ok = ok && iso < 1e-11 && pincl < 1e-11 && compat < 1e-11;
    cells[name] = cj;
  }
  rep["one_cells"] = cells;

  Json pairs = Json::array();
  for (const auto& [a, ea] : p.one_cells)
    for (const auto& [b, eb] : p.one_cells) {
      if (!ea.cell->source().structurally_equal(eb.cell->source()) ||
          !ea.cell->target().structurally_equal(eb.cell->target()))
        continue;
      const Presentation& pr = ea.cell->presentation();
      const int top = pr.preperiod + 2 * pr.period + 1;
      BimoduleOracle oa(ea.cell, top), ob(eb.cell, top);
      const int kmax = std::max(1, std::min(affordable_level(oa, full ? 3 : 2, 600),
                                            affordable_level(ob, full ? 3 : 2, 600)));
      double comp = 0.0, round = 0.0;
      for (int k = 1; k <= kmax; ++k) {
        NtSpace sp = nt_space(*ea.cell, *eb.cell, k);
        for (int t = 0; t < (full ? 3 : 1); ++t) {
          NatTrans eta = sp.unflatten(random_flat(sp, rng));
          comp = std::max(comp, compression_identity_check(oa, ob, eta, k));
          round = std::max(round, finite_level_two_cell(oa, ob, eta, k).round_trip_residual);
        }
      }
      Json pj{{"pair", {a, b}},
              {"levels", kmax},
              {"compression_residual", comp},
              {"round_trip_residual", round}};
      ok = ok && comp < 1e-9 && round < 1e-11;
      std::vector<std::string> hyp = periodic_hypotheses(*ea.cell, *eb.cell, ctx.tol);
      if (hyp.empty()) {
        const size_t periph = periodic_two_cells(ea.cell, eb.cell, ctx.tol).size();
        int steps = pr.period + 1;
        while (steps > 1 && (oa.dim(pr.preperiod + steps) > 4000 || ob.dim(pr.preperiod + steps) > 4000)) --steps;
        OracleDimension od = oracle_dimension(oa, ob, pr.preperiod, steps);
        pj["dimension"] = {{"harmonic", periph},
                           {"oracle", od.final_dim()},
                           {"oracle_by_step", od.dims},
                           {"stabilized_at", od.stabilized_at},
                           {"level", od.level},
                           {"agree", od.final_dim() == static_cast<long long>(periph)}};
        ok = ok && od.final_dim() == static_cast<long long>(periph);
      } else {
        pj["dimension"] = {{"skipped", hyp}};
      }
      pairs.push_back(pj);
    }
  rep["pairs"] = pairs;
  Json theta = Json::object();
  for (const auto& [name, e] : p.one_cells) {
    const Presentation& pr = e.cell->presentation();
    ThetaReport t = theta_candidates(*e.cell, pr.preperiod + 2 * pr.period);
    theta[name] = {{"period_drift", t.period_drift}};
  }
  rep["theta_candidates"] = theta;
  rep["ok"] = ok;
  *ctx.out << canonical_dump(rep);
  return ok ? 0 : 1;
}

int cmd_gen(const Context& ctx, const std::vector<int>& vertex, unsigned long long seed,
            const std::string& graph_fixture, const std::string& zero_name,
            const std::string& out_path) {
  Project p;
  if (!vertex.empty()) {
    if (vertex.size() != 2 || vertex[0] < 1 || vertex[1] < 1)
      throw Error(ErrorKind::Input, "--vertex-model expects two positive sizes");
    std::mt19937_64 rng(seed);
    CMat u = haar_unitary(vertex[0] * vertex[1], rng);
    auto c = std::make_shared<const UnitaryConnection>(build_vertex_model(u, vertex[0], vertex[1]));
    p.zero_cells["H"] = c->source_ptr();
    p.one_cells["V"] = {"H", "H", c};
    p.options = {{"seed", seed}};
  } else if (!graph_fixture.empty()) {
    Project src = load_project(graph_fixture);
    if (src.zero_cells.empty()) throw Error(ErrorKind::Input, "fixture has no 0-cells");
    std::string zn = zero_name.empty() ? src.zero_cells.begin()->first : zero_name;
    auto it = src.zero_cells.find(zn);
    if (it == src.zero_cells.end()) throw Error(ErrorKind::Input, "unknown 0-cell '" + zn + "'");
    auto c = std::make_shared<const UnitaryConnection>(build_graph_identity(it->second));
    p.zero_cells[zn] = it->second;
    p.one_cells["id"] = {zn, zn, c};
  } else {
    throw Error(ErrorKind::Input, "gen needs --vertex-model X Y or --graph-identity FIXTURE");
  }
  const std::string text = serialize_project(p);
  if (!out_path.empty()) {
    write_atomic(out_path, text);
    Json rep = report_header(ctx, "gen");
    rep["written"] = out_path;
    *ctx.out << canonical_dump(rep);
  } else {
    *ctx.out << text;
  }
  return 0;
}

int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::Validation:
      return 1;
    case ErrorKind::Convergence:
      return 3;
    default:
      return 2;
  }
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  Context ctx{1e-9, &out, &err};
  if (const char* env = std::getenv("CONNCALC_TOL")) {
    char* end = nullptr;
    double t = std::strtod(env, &end);
    if (end == env || *end != '\0' || !(t > 0)) {
      err << "conncalc: error: CONNCALC_TOL must be a positive number\n";
      return 2;
    }
    ctx.tol = t;
  }

  CLI::App app{"Finite computations with tracial Bratteli diagrams, unitary connections and their 2-cells",
               "conncalc"};
  app.set_version_flag("--version", std::string(CONNCALC_VERSION));
  app.require_subcommand(1);

  std::string file, cell, pair, out_path, outer, inner, name, first, second, suite = "full",
                                                                           graph, zero;
  int level = 1, ci = 0, cj = 0;
  unsigned long long seed = 1;
  std::vector<int> vertex;
  bool vertical = false, horizontal = false;

  auto* v = app.add_subcommand("validate", "Validate every cell in a project file");
  v->add_option("file", file, "Project file")->required();
  v->add_option("--cell", cell, "Only this cell");

  auto* lm = app.add_subcommand("loop-matrix", "Loop operator S_k and its adjoint");
  lm->add_option("file", file, "Project file")->required();
  lm->add_option("--pair", pair, "Domain and codomain 1-cells, A,B")->required();
  lm->add_option("--level", level, "Level k >= 1")->required();
  lm->add_option("--out", out_path, "Write the matrices here (JSON plus binary)");

  auto* fp = app.add_subcommand("flat-part", "2-cell basis of a periodic pair and its flatness");
  fp->add_option("file", file, "Project file")->required();
  fp->add_option("--pair", pair, "Domain and codomain 1-cells, A,B")->required();

  auto* fu = app.add_subcommand("fuse", "Tensor product of two 1-cells");
  fu->add_option("file", file, "Project file")->required();
  fu->add_option("--outer", outer, "Outer 1-cell")->required();
  fu->add_option("--inner", inner, "Inner 1-cell")->required();
  fu->add_option("--name", name, "Name of the fused 1-cell")->required();
  fu->add_option("--out", out_path, "Write the extended project here");

  auto* co = app.add_subcommand("compose", "Compose two periodic 2-cells");
  co->add_option("file", file, "Project file")->required();
  auto* fv = co->add_flag("--vertical", vertical, "Vertical composition");
  auto* fh = co->add_flag("--horizontal", horizontal, "Horizontal composition");
  fv->excludes(fh);
  co->add_option("--first", first, "Pair A,B of the first 2-cell (vertical)");
  co->add_option("--second", second, "Pair B,C of the second 2-cell (vertical)");
  co->add_option("--inner", inner, "Pair of the inner 2-cell (horizontal)");
  co->add_option("--outer", outer, "Pair of the outer 2-cell (horizontal)");
  co->add_option("--i", ci, "Basis index of the first (or inner) 2-cell");
  co->add_option("--j", cj, "Basis index of the second (or outer) 2-cell");

  auto* orc = app.add_subcommand("oracle", "Cross-check against the path-space bimodule model");
  orc->add_option("file", file, "Project file")->required();
  orc->add_option("--suite", suite, "full or quick");
  orc->add_option("--seed", seed, "Seed for random test elements");

  auto* gen = app.add_subcommand("gen", "Generate example project files");
  gen->add_option("--vertex-model", vertex, "|X| |Y|")->expected(2);
  gen->add_option("--seed", seed, "Seed for the Haar unitary");
  gen->add_option("--graph-identity", graph, "Project file holding a constant graph tower");
  gen->add_option("--zero", zero, "0-cell to use with --graph-identity");
  gen->add_option("--out", out_path, "Write the project here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*gen) return cmd_gen(ctx, vertex, seed, graph, zero, out_path);
    Project p = load_project(file);
    if (*v) return cmd_validate(ctx, p, cell);
    if (*lm) return cmd_loop_matrix(ctx, p, pair, level, out_path);
    if (*fp) return cmd_flat_part(ctx, p, pair);
    if (*fu) return cmd_fuse(ctx, p, outer, inner, name, out_path);
    if (*co) {
      if (vertical == horizontal) throw Error(ErrorKind::Input, "compose needs --vertical or --horizontal");
      if (vertical && (first.empty() || second.empty()))
        throw Error(ErrorKind::Input, "--vertical needs --first and --second");
      if (horizontal && (inner.empty() || outer.empty()))
        throw Error(ErrorKind::Input, "--horizontal needs --inner and --outer");
      return vertical ? cmd_compose(ctx, p, true, first, second, ci, cj)
                      : cmd_compose(ctx, p, false, inner, outer, ci, cj);
    }
    if (*orc) return cmd_oracle(ctx, p, suite, seed);
  } catch (const Error& e) {
    err << "conncalc: error: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    err << "conncalc: error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}

}  // namespace conncalc
