// mistfuse - header-only toolkit for random-object LiDAR perturbation
// SPDX-License-Identifier: MIT
//
// Flat `key = value` config files ('#' starts a comment).

#ifndef MISTFUSE_CLOUDCORE_KEYVALUE_HPP
#define MISTFUSE_CLOUDCORE_KEYVALUE_HPP

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "mistfuse/cloudcore/io.hpp"

namespace mistfuse {

class KeyValues {
 public:
  static KeyValues parse(std::istream& in, const std::string& name = "<stream>") {
    KeyValues kv;
    kv.name_ = name;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      const std::string t = trim(line);
      if (t.empty()) continue;
      const auto eq = t.find('=');
      if (eq == std::string::npos) {
        throw FormatError(name + ":" + std::to_string(lineno) + ": expected key = value");
      }
      std::string key = trim(t.substr(0, eq));
      std::string value = unquote(trim(t.substr(eq + 1)));
      if (key.empty()) throw FormatError(name + ":" + std::to_string(lineno) + ": empty key");
      kv.values_[key] = value;
    }
    return kv;
  }

  static KeyValues read(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw PathError("cannot open " + path.string());
    return parse(in, path.string());
  }

  bool has(const std::string& key) const { return values_.count(key) != 0; }

  std::string get(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw FormatError(name_ + ": missing key '" + key + "'");
    return it->second;
  }

  std::string get_or(const std::string& key, const std::string& fallback) const {
    return has(key) ? get(key) : fallback;
  }

  double get_double(const std::string& key) const { return to_double(key, get(key)); }
  double get_double_or(const std::string& key, double fallback) const {
    return has(key) ? get_double(key) : fallback;
  }

  std::uint64_t get_u64_or(const std::string& key, std::uint64_t fallback) const {
    if (!has(key)) return fallback;
    const std::string v = get(key);
    std::uint64_t out = 0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size()) {
      throw FormatError(name_ + ": '" + key + "' is not an unsigned integer");
    }
    return out;
  }

  /// Comma-separated list; empty entries are skipped.
  std::vector<std::string> get_list(const std::string& key) const {
    std::vector<std::string> out;
    std::stringstream ss(get(key));
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      if (!item.empty()) out.push_back(item);
    }
    return out;
  }

  std::vector<double> get_double_list(const std::string& key) const {
    std::vector<double> out;
    for (const auto& s : get_list(key)) out.push_back(to_double(key, s));
    return out;
  }

  const std::map<std::string, std::string>& values() const { return values_; }
  void set(const std::string& key, const std::string& value) { values_[key] = value; }

 private:
  static std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
  }

  static std::string unquote(const std::string& s) {
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') return s.substr(1, s.size() - 2);
    return s;
  }

  double to_double(const std::string& key, const std::string& v) const {
    std::size_t used = 0;
    double d = 0.0;
    try {
      d = std::stod(v, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != v.size() || v.empty()) throw FormatError(name_ + ": '" + key + "' is not a number: '" + v + "'");
    return d;
  }

  std::string name_;
  std::map<std::string, std::string> values_;
};

}  // namespace mistfuse

#endif  // MISTFUSE_CLOUDCORE_KEYVALUE_HPP
