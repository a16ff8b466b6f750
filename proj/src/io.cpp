#include "conncalc/io.hpp"

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace conncalc {

namespace {

[[noreturn]] void input_error(const std::string& what) { throw Error(ErrorKind::Input, what); }

const Json& field(const Json& j, const char* key, const std::string& where) {
  if (!j.is_object()) input_error(where + ": expected an object");
  auto it = j.find(key);
  if (it == j.end()) input_error(where + ": missing field '" + key + "'");
  return *it;
}

long long get_int(const Json& j, const std::string& where) {
  if (!j.is_number_integer()) input_error(where + ": expected an integer");
  return j.get<long long>();
}

double get_double(const Json& j, const std::string& where) {
  if (!j.is_number()) input_error(where + ": expected a number");
  return j.get<double>();
}

const Json& get_array(const Json& j, const std::string& where) {
  if (!j.is_array()) input_error(where + ": expected an array");
  return j;
}

template <class T>
void put_le(std::ostream& os, T v) {
  if constexpr (std::endian::native == std::endian::big) {
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    for (size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
    os.write(reinterpret_cast<const char*>(b), sizeof(T));
  } else {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
  }
}

template <class T>
T get_le(std::istream& is) {
  unsigned char b[sizeof(T)];
  is.read(reinterpret_cast<char*>(b), sizeof(T));
  if (!is) input_error("binary matrix: truncated file");
  if constexpr (std::endian::native == std::endian::big)
    for (size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
  T v;
  std::memcpy(&v, b, sizeof(T));
  return v;
}

}  // namespace

const OneCellEntry& Project::one_cell(const std::string& name) const {
  auto it = one_cells.find(name);
  if (it == one_cells.end()) input_error("unknown 1-cell '" + name + "'");
  return it->second;
}

Json matrix_to_json(const CMat& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back({m(r, c).real(), m(r, c).imag()});
    rows.push_back(row);
  }
  return rows;
}

CMat matrix_from_json(const Json& j, const std::string& where) {
  get_array(j, where);
  const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
  const Eigen::Index cols = rows ? static_cast<Eigen::Index>(get_array(j[0], where + "[0]").size()) : 0;
  CMat m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const std::string wr = where + "[" + std::to_string(r) + "]";
    const Json& row = get_array(j[static_cast<size_t>(r)], wr);
    if (static_cast<Eigen::Index>(row.size()) != cols) input_error(wr + ": ragged matrix");
    for (Eigen::Index c = 0; c < cols; ++c) {
      const Json& e = row[static_cast<size_t>(c)];
      const std::string we = wr + "[" + std::to_string(c) + "]";
      if (!e.is_array() || e.size() != 2) input_error(we + ": expected a [re, im] pair");
      m(r, c) = cplx(get_double(e[0], we), get_double(e[1], we));
    }
  }
  return m;
}

Json int_matrix_to_json(const IMat& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

IMat int_matrix_from_json(const Json& j, const std::string& where) {
  get_array(j, where);
  const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
  const Eigen::Index cols = rows ? static_cast<Eigen::Index>(get_array(j[0], where + "[0]").size()) : 0;
  IMat m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const std::string wr = where + "[" + std::to_string(r) + "]";
    const Json& row = get_array(j[static_cast<size_t>(r)], wr);
    if (static_cast<Eigen::Index>(row.size()) != cols) input_error(wr + ": ragged matrix");
    for (Eigen::Index c = 0; c < cols; ++c) {
      m(r, c) = get_int(row[static_cast<size_t>(c)], wr);
      if (m(r, c) < 0) input_error(wr + ": negative multiplicity");
    }
  }
  return m;
}

Json vector_to_json(const CVec& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back({v[i].real(), v[i].imag()});
  return out;
}

Json zero_cell_to_json(const TracialBratteli& b) {
  Json j;
  j["presentation"] = {{"preperiod", b.presentation().preperiod},
                       {"period", b.presentation().period},
                       {"pf_scalar", b.presentation().pf_scalar}};
  Json levels = Json::array();
  for (int k = 0; k < b.stored_levels(); ++k) {
    const WeightedCategory& c = b.stored_level(k);
    Json w = Json::array();
    for (Eigen::Index i = 0; i < c.weights.size(); ++i) w.push_back(c.weights[i]);
    levels.push_back({{"labels", c.labels}, {"weights", w}});
  }
  j["levels"] = levels;
  Json adj = Json::array();
  for (int k = 1; k < b.stored_levels(); ++k) adj.push_back(int_matrix_to_json(b.stored_adjacency(k)));
  j["adjacency"] = adj;
  return j;
}

ZeroCellPtr zero_cell_from_json(const Json& j, const std::string& name) {
  const std::string where = "zero_cells." + name;
  const Json& p = field(j, "presentation", where);
  Presentation pres{static_cast<int>(get_int(field(p, "preperiod", where + ".presentation"), where)),
                    static_cast<int>(get_int(field(p, "period", where + ".presentation"), where)),
                    get_double(field(p, "pf_scalar", where + ".presentation"), where)};
  std::vector<WeightedCategory> levels;
  const Json& lv = get_array(field(j, "levels", where), where + ".levels");
  for (size_t k = 0; k < lv.size(); ++k) {
    const std::string wl = where + ".levels[" + std::to_string(k) + "]";
    const Json& labels = get_array(field(lv[k], "labels", wl), wl + ".labels");
    const Json& weights = get_array(field(lv[k], "weights", wl), wl + ".weights");
    if (labels.size() != weights.size()) input_error(wl + ": labels and weights differ in length");
    std::vector<std::string> ls;
    RVec w(static_cast<Eigen::Index>(weights.size()));
    for (size_t i = 0; i < labels.size(); ++i) {
      if (!labels[i].is_string()) input_error(wl + ".labels: expected strings");
      ls.push_back(labels[i].get<std::string>());
      w[static_cast<Eigen::Index>(i)] = get_double(weights[i], wl + ".weights");
    }
    levels.emplace_back(ls, w);
  }
  std::vector<IMat> adj;
  const Json& aj = get_array(field(j, "adjacency", where), where + ".adjacency");
  for (size_t k = 0; k < aj.size(); ++k)
    adj.push_back(int_matrix_from_json(aj[k], where + ".adjacency[" + std::to_string(k) + "]"));
  return std::make_shared<const TracialBratteli>(levels, adj, pres);
}

Json one_cell_to_json(const OneCellEntry& e) {
  Json j;
  j["source"] = e.source;
  j["target"] = e.target;
  Json lambdas = Json::array();
  for (int k = 0; k < e.cell->stored_levels(); ++k)
    lambdas.push_back(int_matrix_to_json(e.cell->stored_lambda(k).adjacency()));
  j["lambdas"] = lambdas;
  Json blocks = Json::array();
  for (int k = 1; k < e.cell->stored_levels(); ++k) {
    Json level = Json::array();
    for (const CMat& b : e.cell->stored_blocks(k)) level.push_back(matrix_to_json(b));
    blocks.push_back(level);
  }
  j["blocks"] = blocks;
  return j;
}

Project parse_project(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    input_error(std::string("malformed JSON: ") + e.what());
  }
  try {
    Project p;
    const Json& schema = field(j, "schema", "project");
    if (!schema.is_string() || schema.get<std::string>() != kSchema)
      input_error(std::string("project: schema must be \"") + kSchema + "\"");
    for (const auto& [name, zj] : field(j, "zero_cells", "project").items())
      p.zero_cells[name] = zero_cell_from_json(zj, name);
    for (const auto& [name, cj] : field(j, "one_cells", "project").items()) {
      const std::string where = "one_cells." + name;
      OneCellEntry e;
      const Json& s = field(cj, "source", where);
      const Json& t = field(cj, "target", where);
      if (!s.is_string() || !t.is_string()) input_error(where + ": source and target must be names");
      e.source = s.get<std::string>();
      e.target = t.get<std::string>();
      auto si = p.zero_cells.find(e.source), ti = p.zero_cells.find(e.target);
      if (si == p.zero_cells.end()) input_error(where + ": unknown 0-cell '" + e.source + "'");
      if (ti == p.zero_cells.end()) input_error(where + ": unknown 0-cell '" + e.target + "'");
      std::vector<IMat> lambdas;
      const Json& lj = get_array(field(cj, "lambdas", where), where + ".lambdas");
      for (size_t k = 0; k < lj.size(); ++k)
        lambdas.push_back(int_matrix_from_json(lj[k], where + ".lambdas[" + std::to_string(k) + "]"));
      std::vector<std::vector<CMat>> blocks;
      const Json& bj = get_array(field(cj, "blocks", where), where + ".blocks");
      for (size_t k = 0; k < bj.size(); ++k) {
        const std::string wl = where + ".blocks[" + std::to_string(k) + "]";
        std::vector<CMat> level;
        const Json& lv = get_array(bj[k], wl);
        for (size_t i = 0; i < lv.size(); ++i)
          level.push_back(matrix_from_json(lv[i], wl + "[" + std::to_string(i) + "]"));
        blocks.push_back(std::move(level));
      }
      if (lambdas.size() != static_cast<size_t>(si->second->stored_levels()))
        input_error(where + ": expected one functor per stored level");
      for (size_t k = 0; k < lambdas.size(); ++k) {
        const int kk = static_cast<int>(k);
        if (lambdas[k].rows() != ti->second->stored_level(kk).size() ||
            lambdas[k].cols() != si->second->stored_level(kk).size())
          input_error(where + ".lambdas[" + std::to_string(k) + "]: wrong shape");
      }
      e.cell = std::make_shared<const UnitaryConnection>(
          make_connection(si->second, ti->second, lambdas, std::move(blocks)));
      p.one_cells[name] = e;
    }
    if (j.contains("options")) p.options = j["options"];
    return p;
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Structural) input_error(e.what());
    throw;
  } catch (const Json::exception& e) {
    input_error(std::string("schema error: ") + e.what());
  }
}

Project load_project(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) input_error("cannot read '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_project(ss.str());
}

std::string canonical_dump(const Json& j) { return j.dump(2) + "\n"; }

Json project_to_json(const Project& p) {
  Json j;
  j["schema"] = kSchema;
  j["zero_cells"] = Json::object();
  for (const auto& [name, z] : p.zero_cells) j["zero_cells"][name] = zero_cell_to_json(*z);
  j["one_cells"] = Json::object();
  for (const auto& [name, e] : p.one_cells) j["one_cells"][name] = one_cell_to_json(e);
  j["options"] = p.options;
  return j;
}

std::string serialize_project(const Project& p) { return canonical_dump(project_to_json(p)); }

void write_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) input_error("cannot write '" + tmp.string() + "'");
    out << content;
    out.flush();
    if (!out) input_error("write failed for '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) input_error("cannot rename '" + tmp.string() + "' to '" + path + "': " + ec.message());
}

void export_binary(const std::string& path, const CMat& m) {
  std::ostringstream os(std::ios::binary);
  os.write("CCLM", 4);
  put_le<std::uint32_t>(os, 1);
  put_le<std::uint64_t>(os, static_cast<std::uint64_t>(m.rows()));
  put_le<std::uint64_t>(os, static_cast<std::uint64_t>(m.cols()));
  put_le<std::uint32_t>(os, 1);
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      put_le<double>(os, m(r, c).real());
      put_le<double>(os, m(r, c).imag());
    }
  write_atomic(path, os.str());
}

CMat import_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) input_error("cannot read '" + path + "'");
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "CCLM", 4) != 0) input_error("binary matrix: bad magic");
  if (get_le<std::uint32_t>(in) != 1) input_error("binary matrix: unsupported version");
  const auto rows = get_le<std::uint64_t>(in);
  const auto cols = get_le<std::uint64_t>(in);
  const bool complex_flag = get_le<std::uint32_t>(in) != 0;
  CMat m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      double re = get_le<double>(in);
      double im = complex_flag ? get_le<double>(in) : 0.0;
      m(r, c) = cplx(re, im);
    }
  return m;
}

}  // namespace conncalc
