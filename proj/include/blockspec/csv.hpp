#pragma once

// Minimal CSV reading and atomic file output shared by every module.

#include <string>
#include <vector>

namespace blockspec {

/// Shortest round-trippable decimal form of a double.
std::string format_double(double x);

/// Whole-string decimal parse; accepts subnormals, nan and inf.
double parse_double(const std::string& s);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const;
  std::vector<double> numeric_column(const std::string& name) const;
};

/// Splits on commas; no quoting support (none of our outputs need it).
std::vector<std::string> split_csv_line(const std::string& line);

CsvTable read_csv(const std::string& path, bool has_header = true);

/// Writes `content` to a sibling temp file, then renames it over `path`.
void write_file_atomic(const std::string& path, const std::string& content);

std::string read_file(const std::string& path);

}  // namespace blockspec
