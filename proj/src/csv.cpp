#include "blockspec/csv.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <system_error>

namespace blockspec {

double parse_double(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  if (b < e && s[b] == '+') ++b;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data() + b, s.data() + e, v);
  // out-of-range here means underflow to a subnormal or zero, which is fine
  if (b == e || ptr != s.data() + e || (ec != std::errc() && ec != std::errc::result_out_of_range))
    throw std::runtime_error("not a number: '" + s + "'");
  if (ec == std::errc::result_out_of_range && std::abs(std::strtod(std::string(s, b, e - b).c_str(), nullptr)) > 1.0)
    throw std::runtime_error("number out of range: '" + s + "'");
  return v;
}

std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

std::size_t CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  throw std::invalid_argument("csv: no column named '" + name + "'");
}

std::vector<double> CsvTable::numeric_column(const std::string& name) const {
  const auto c = column(name);
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) {
    if (c >= r.size()) throw std::runtime_error("csv: short row");
    out.push_back(parse_double(r[c]));
  }
  return out;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

CsvTable read_csv(const std::string& path, bool has_header) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  CsvTable t;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    auto fields = split_csv_line(line);
    if (first && has_header) {
      t.header = std::move(fields);
    } else {
      t.rows.push_back(std::move(fields));
    }
    first = false;
  }
  return t;
}

void write_file_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
    if (!out) throw std::runtime_error("write failed: " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) throw std::runtime_error("rename failed for " + path + ": " + ec.message());
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace blockspec
