// Regenerates the bundled fixtures: make_fixtures OUTDIR
#include <iostream>
#include <memory>

#include "conncalc/io.hpp"

using namespace conncalc;

namespace {

void write(const std::string& dir, const std::string& name, const Project& p) {
  write_atomic(dir + "/" + name, serialize_project(p));
}

Project graph_identity(const IMat& g, const std::string& zero) {
  auto tower = std::make_shared<const TracialBratteli>(constant_tower(g));
  Project p;
  p.zero_cells[zero] = tower;
  p.one_cells["id"] = {zero, zero, std::make_shared<const UnitaryConnection>(build_graph_identity(tower))};
  return p;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: make_fixtures OUTDIR\n";
    return 2;
  }
  const std::string dir = argv[1];

  {
    std::mt19937_64 rng(7);
    CMat u = haar_unitary(4, rng);
    auto c = std::make_shared<const UnitaryConnection>(build_vertex_model(u, 2, 2));
    Project p;
    p.zero_cells["H"] = c->source_ptr();
    p.one_cells["V"] = {"H", "H", c};
    p.options = {{"seed", 7}};
    write(dir, "vertex_model.json", p);

    // One entry moved off the unitary group.
    std::vector<std::vector<CMat>> blocks;
    std::vector<IMat> lambdas;
    for (int k = 0; k < c->stored_levels(); ++k) lambdas.push_back(c->stored_lambda(k).adjacency());
    for (int k = 1; k < c->stored_levels(); ++k) blocks.push_back(c->stored_blocks(k));
    blocks[0][0](0, 0) += cplx(0.25, 0.0);
    auto bad = std::make_shared<const UnitaryConnection>(
        make_connection(c->source_ptr(), c->target_ptr(), lambdas, blocks));
    p.one_cells["V"] = {"H", "H", bad};
    p.options = {{"corrupted", "blocks[0][0][0][0] shifted by 0.25"}};
    write(dir, "corrupted_unitary.json", p);

    auto id = std::make_shared<const UnitaryConnection>(build_vertex_model(CMat::Identity(4, 4), 2, 2));
    Project q;
    q.zero_cells["H"] = id->source_ptr();
    q.one_cells["I"] = {"H", "H", id};
    write(dir, "vertex_identity.json", q);
  }

  {
    IMat g(3, 3);
    g << 1, 1, 0, 1, 0, 1, 0, 1, 1;
    write(dir, "undirected_graph.json", graph_identity(g, "G"));
    IMat b(2, 2);
    b << 0, 1, 1, 0;
    write(dir, "bipartite_graph.json", graph_identity(b, "B"));
  }

  {
    IMat g(2, 2);
    g << 1, 1, 1, 1;
    auto tower = std::make_shared<const TracialBratteli>(constant_tower(g));
    std::vector<IMat> cands = search_lambdas(g, g, 2);
    Project p;
    p.zero_cells["T"] = tower;
    for (size_t i = 0; i < 2 && i < cands.size(); ++i) {
      const size_t pick = cands.size() - 1 - i;
      p.one_cells[std::string(1, static_cast<char>('A' + i))] = {
          "T", "T",
          std::make_shared<const UnitaryConnection>(
              build_random_connection(tower, tower, {cands[pick]}, 11 + i))};
    }
    p.options = {{"seed", 11}};
    write(dir, "random_seed.json", p);
  }
  return 0;
}
