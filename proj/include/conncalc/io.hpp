#pragma once

#include <map>
#include <string>

#include "conncalc/connection.hpp"
#include "json.hpp"

namespace conncalc {

using Json = nlohmann::json;

inline constexpr const char* kSchema = "conncalc/1";
inline constexpr const char* kReportSchema = "conncalc-report/1";

struct OneCellEntry {
  std::string source;
  std::string target;
  ConnectionPtr cell;
};

struct Project {
  std::map<std::string, ZeroCellPtr> zero_cells;
  std::map<std::string, OneCellEntry> one_cells;
  Json options = Json::object();

  const OneCellEntry& one_cell(const std::string& name) const;
};

// Complex matrices are arrays of rows of [re, im] pairs.
Json matrix_to_json(const CMat& m);
CMat matrix_from_json(const Json& j, const std::string& where);
Json int_matrix_to_json(const IMat& m);
IMat int_matrix_from_json(const Json& j, const std::string& where);
Json vector_to_json(const CVec& v);

Json zero_cell_to_json(const TracialBratteli& b);
ZeroCellPtr zero_cell_from_json(const Json& j, const std::string& name);
Json one_cell_to_json(const OneCellEntry& e);

// Input errors carry ErrorKind::Input and name the offending field.
Project parse_project(const std::string& text);
Project load_project(const std::string& path);
// Sorted keys, two-space indent, trailing newline.
std::string canonical_dump(const Json& j);
Json project_to_json(const Project& p);
std::string serialize_project(const Project& p);

// Writes through a temporary file in the same directory, then renames.
void write_atomic(const std::string& path, const std::string& content);

// "CCLM", uint32 version 1, uint64 rows, uint64 cols, uint32 complex flag,
// then row-major little-endian doubles (re, im when complex).
void export_binary(const std::string& path, const CMat& m);
CMat import_binary(const std::string& path);

}  // namespace conncalc
