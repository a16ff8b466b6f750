#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "common.hpp"
#include "conncalc/io.hpp"

using namespace conncalc;
using namespace testutil;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

// Runs the CLI with stderr discarded; env is a prefix of assignments.
Run run(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + " '" + std::string(CONNCALC_CLI_PATH) + "' " + args + " 2>/dev/null";
  Run r;
  FILE* p = popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  char buf[4096];
  size_t n;
  while ((n = fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string fixture(const std::string& name) { return std::string(CONNCALC_FIXTURES) + "/" + name; }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct TempDir {
  fs::path path;
  TempDir() {
    std::random_device rd;
    path = fs::temp_directory_path() / ("conncalc_cli_" + std::to_string(rd()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& f) const { return (path / f).string(); }
};

}  // namespace

TEST_CASE("validate exit codes") {
  CHECK(run("validate " + fixture("vertex_model.json")).code == 0);
  CHECK(run("validate " + fixture("undirected_graph.json")).code == 0);
  Run bad = run("validate " + fixture("corrupted_unitary.json"));
  CHECK(bad.code == 1);
  Json j = Json::parse(bad.out);
  CHECK(j["schema"] == kReportSchema);
  CHECK(run("validate " + fixture("malformed.json")).code == 2);
  CHECK(run("validate /nonexistent/project.json").code == 2);
  CHECK(run("validate " + fixture("vertex_model.json") + " --cell nope").code == 2);
  CHECK(run("no-such-command").code == 2);
}

TEST_CASE("loop matrix of the identity vertex model") {
  Run r = run("loop-matrix " + fixture("vertex_identity.json") + " --pair I,I --level 1");
  REQUIRE(r.code == 0);
  Json j = Json::parse(r.out);
  CHECK(j["rows"] == 4);
  CHECK(j["cols"] == 4);
  CHECK(j["adjoint_residual"].get<double>() < 1e-12);
  CMat s = matrix_from_json(j["S"], "S");
  CHECK((s - CMat::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-14);
  for (const auto& ev : j["spectrum"]) {
    CHECK(std::abs(ev[0].get<double>() - 1.0) < 1e-12);
    CHECK(std::abs(ev[1].get<double>()) < 1e-12);
  }
}

TEST_CASE("flat part of the standard fixtures") {
  Run u = run("flat-part " + fixture("undirected_graph.json") + " --pair id,id");
  REQUIRE(u.code == 0);
  CHECK(Json::parse(u.out)["flat_dimension"] == 1);
  Run v = run("flat-part " + fixture("vertex_identity.json") + " --pair I,I");
  REQUIRE(v.code == 0);
  CHECK(Json::parse(v.out)["flat_dimension"] == 4);
  Run b = run("flat-part " + fixture("bipartite_graph.json") + " --pair id,id");
  REQUIRE(b.code == 0);
  CHECK(Json::parse(b.out)["flat_dimension"] == 2);
}

TEST_CASE("non-parallel pairs are rejected") {
  TempDir tmp;
  Project a = load_project(fixture("vertex_model.json"));
  Project b = load_project(fixture("random_seed.json"));
  for (const auto& [n, z] : b.zero_cells) a.zero_cells[n] = z;
  for (const auto& [n, e] : b.one_cells) a.one_cells[n] = e;
  const std::string path = tmp / "mixed.json";
  write_atomic(path, serialize_project(a));
  CHECK(run("validate " + path).code == 0);
  CHECK(run("loop-matrix " + path + " --pair V,A --level 1").code == 2);
  CHECK(run("flat-part " + path + " --pair V,A").code == 2);
  CHECK(run("compose " + path + " --vertical --first V,A --second A,B").code == 2);
}

TEST_CASE("serialization of the canonical fixtures is byte-identical") {
  for (const char* f : {"vertex_model.json", "corrupted_unitary.json", "vertex_identity.json",
                        "undirected_graph.json", "bipartite_graph.json", "random_seed.json"}) {
    const std::string text = slurp(fixture(f));
    CHECK(serialize_project(parse_project(text)) == text);
  }
}

TEST_CASE("binary export and import round trip") {
  TempDir tmp;
  std::mt19937_64 rng(1);
  CMat m = random_cmat(5, 3, rng);
  export_binary(tmp / "m.bin", m);
  CHECK((import_binary(tmp / "m.bin") - m).cwiseAbs().maxCoeff() == 0.0);

  const std::string out = tmp / "lm.json";
  Run r = run("loop-matrix " + fixture("vertex_model.json") + " --pair V,V --level 2 --out " + out);
  REQUIRE(r.code == 0);
  Json j = Json::parse(slurp(out));
  CMat s = matrix_from_json(j["S"], "S");
  CMat sa = matrix_from_json(j["S_adjoint"], "S_adjoint");
  CHECK((import_binary(out + ".S.bin") - s).cwiseAbs().maxCoeff() == 0.0);
  CHECK((import_binary(out + ".Sadj.bin") - sa).cwiseAbs().maxCoeff() == 0.0);
  CHECK(Json::parse(r.out)["files"].size() == 3);
}

TEST_CASE("generation is deterministic in the seed") {
  Run a = run("gen --vertex-model 2 3 --seed 5");
  Run b = run("gen --vertex-model 2 3 --seed 5");
  Run c = run("gen --vertex-model 2 3 --seed 6");
  REQUIRE(a.code == 0);
  CHECK(a.out == b.out);
  CHECK(a.out != c.out);
  Project p = parse_project(a.out);
  CHECK(validate_one_cell(*p.one_cells.begin()->second.cell).ok);

  TempDir tmp;
  Run g = run("gen --graph-identity " + fixture("undirected_graph.json") + " --zero G --out " + (tmp / "g.json"));
  REQUIRE(g.code == 0);
  CHECK(run("validate " + (tmp / "g.json")).code == 0);
}

TEST_CASE("fuse then validate") {
  TempDir tmp;
  const std::string path = tmp / "p.json";
  Run f = run("fuse " + fixture("vertex_model.json") + " --outer V --inner V --name VV --out " + path);
  REQUIRE(f.code == 0);
  Json j = Json::parse(f.out);
  CHECK(j["bounds"]["eps_ok"] == true);
  CHECK(j["bounds"]["M_ok"] == true);
  Project p = load_project(path);
  CHECK(p.one_cells.count("VV") == 1);
  CHECK(run("validate " + path).code == 0);
  CHECK(run("validate " + path + " --cell VV").code == 0);
}

TEST_CASE("oracle suite passes on the fixtures") {
  for (const char* f : {"vertex_model.json", "vertex_identity.json", "undirected_graph.json"}) {
    Run r = run("oracle " + fixture(f) + " --suite quick");
    CHECK(r.code == 0);
    CHECK(Json::parse(r.out)["ok"] == true);
  }
}

TEST_CASE("environment tolerance and version") {
  CHECK(run("validate " + fixture("vertex_model.json"), "CONNCALC_TOL=abc").code == 2);
  CHECK(run("validate " + fixture("vertex_model.json"), "CONNCALC_TOL=-1").code == 2);
  CHECK(run("validate " + fixture("vertex_model.json"), "CONNCALC_TOL=1e-6").code == 0);
  Run v = run("--version");
  CHECK(v.code == 0);
  CHECK(v.out.find("0.1.0") != std::string::npos);
}
