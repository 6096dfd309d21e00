#include "blockspec/config.hpp"

#include <charconv>
#include <sstream>
#include <stdexcept>

#include "blockspec/csv.hpp"

namespace blockspec {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_number(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size())
    throw std::invalid_argument("config: '" + key + "' expects a number, got '" + v + "'");
  return out;
}

std::int64_t to_integer(const std::string& key, const std::string& v) {
  std::int64_t out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size())
    throw std::invalid_argument("config: '" + key + "' expects an integer, got '" + v + "'");
  return out;
}

}  // namespace

Config Config::parse(const std::string& text, const std::string& source) {
  Config c;
  c.source_ = source;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument(source + ":" + std::to_string(lineno) + ": expected key = value");
    const auto key = trim(t.substr(0, eq));
    const auto value = trim(t.substr(eq + 1));
    if (key.empty()) throw std::invalid_argument(source + ":" + std::to_string(lineno) + ": empty key");
    if (!c.values_.emplace(key, value).second)
      throw std::invalid_argument(source + ":" + std::to_string(lineno) + ": duplicate key '" + key + "'");
  }
  return c;
}

Config Config::load(const std::string& path) { return parse(read_file(path), path); }

std::string Config::text(const std::string& key, const std::string& fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

std::string Config::text(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw std::invalid_argument("config: missing required key '" + key + "'");
  return it->second;
}

double Config::number(const std::string& key, double fallback) const {
  return has(key) ? to_number(key, text(key)) : fallback;
}

std::int64_t Config::integer(const std::string& key, std::int64_t fallback) const {
  return has(key) ? to_integer(key, text(key)) : fallback;
}

std::size_t Config::count(const std::string& key, std::size_t fallback) const {
  if (!has(key)) return fallback;
  const auto v = to_integer(key, text(key));
  if (v < 0) throw std::invalid_argument("config: '" + key + "' must be >= 0");
  return static_cast<std::size_t>(v);
}

bool Config::flag(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const auto v = text(key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw std::invalid_argument("config: '" + key + "' expects true or false, got '" + v + "'");
}

std::vector<std::string> Config::list(const std::string& key, const std::vector<std::string>& fallback) const {
  if (!has(key)) return fallback;
  std::vector<std::string> out;
  for (const auto& f : split_csv_line(text(key))) {
    const auto t = trim(f);
    if (!t.empty()) out.push_back(t);
  }
  return out;
}

std::vector<double> Config::numbers(const std::string& key, const std::vector<double>& fallback) const {
  if (!has(key)) return fallback;
  std::vector<double> out;
  for (const auto& f : list(key)) out.push_back(to_number(key, f));
  return out;
}

std::vector<std::size_t> Config::counts(const std::string& key, const std::vector<std::size_t>& fallback) const {
  if (!has(key)) return fallback;
  std::vector<std::size_t> out;
  for (const auto& f : list(key)) {
    const auto v = to_integer(key, f);
    if (v < 0) throw std::invalid_argument("config: '" + key + "' entries must be >= 0");
    out.push_back(static_cast<std::size_t>(v));
  }
  return out;
}

void Config::require_known(const std::set<std::string>& allowed) const {
  for (const auto& [k, v] : values_)
    if (!allowed.count(k)) throw std::invalid_argument(source_ + ": unknown key '" + k + "'");
}

std::string Config::dump() const {
  std::string out;
  for (const auto& [k, v] : values_) out += k + " = " + v + "\n";
  return out;
}

}  // namespace blockspec
