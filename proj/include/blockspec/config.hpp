#pragma once

// Flat `key = value` configuration files. Blank lines and lines starting with
// '#' are ignored; keys are unique; lists are comma separated.

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace blockspec {

class Config {
 public:
  static Config parse(const std::string& text, const std::string& source = "<config>");
  static Config load(const std::string& path);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  void set(const std::string& key, const std::string& value) { values_[key] = value; }

  std::string text(const std::string& key, const std::string& fallback) const;
  std::string text(const std::string& key) const;  // required
  double number(const std::string& key, double fallback) const;
  std::int64_t integer(const std::string& key, std::int64_t fallback) const;
  std::size_t count(const std::string& key, std::size_t fallback) const;  // integer >= 0
  bool flag(const std::string& key, bool fallback) const;
  std::vector<std::string> list(const std::string& key, const std::vector<std::string>& fallback = {}) const;
  std::vector<double> numbers(const std::string& key, const std::vector<double>& fallback = {}) const;
  std::vector<std::size_t> counts(const std::string& key, const std::vector<std::size_t>& fallback = {}) const;

  /// Throws on any key outside `allowed`, so typos fail loudly.
  void require_known(const std::set<std::string>& allowed) const;

  /// Sorted key=value lines; parse(dump()) reproduces the config.
  std::string dump() const;
  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::string source_;
  std::map<std::string, std::string> values_;
};

}  // namespace blockspec
