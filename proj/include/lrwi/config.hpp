#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "lrwi/errors.hpp"
#include "lrwi/grid_io.hpp"
#include "lrwi/hash.hpp"

namespace lrwi {

// Flat run configuration: one `section.key = value` per line, `#` comments,
// order-independent. Typed getters mark keys as consumed so that
// ensure_fully_consumed() can reject misspelled or unknown keys.
class Config {
 public:
  static Config from_string(const std::string& text,
                            const std::string& origin = "<string>") {
    Config cfg;
    cfg.origin_ = origin;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto hash_pos = line.find('#');
      if (hash_pos != std::string::npos) line.erase(hash_pos);
      const std::string trimmed = trim(line);
      if (trimmed.empty()) continue;
      const auto eq = trimmed.find('=');
      if (eq == std::string::npos)
        throw ConfigError(cfg.where(lineno) + "expected 'key = value', got '" +
                          trimmed + "'");
      const std::string key = trim(trimmed.substr(0, eq));
      const std::string value = trim(trimmed.substr(eq + 1));
      if (key.empty() || key.find_first_of(" \t") != std::string::npos)
        throw ConfigError(cfg.where(lineno) + "bad key '" + key + "'");
      if (value.empty())
        throw ConfigError(cfg.where(lineno) + "empty value for '" + key + "'");
      if (!cfg.kv_.emplace(key, value).second)
        throw ConfigError(cfg.where(lineno) + "duplicate key '" + key + "'");
    }
    return cfg;
  }

  static Config from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
      throw IoError("cannot open config file " + path.string());
    std::ostringstream text;
    text << in.rdbuf();
    return from_string(text.str(), path.string());
  }

  bool has(const std::string& key) const { return kv_.count(key) != 0; }

  std::string get_string(const std::string& key) const {
    const auto it = kv_.find(key);
    if (it == kv_.end())
      throw ConfigError(origin_ + ": missing required key '" + key + "'");
    consumed_.insert(key);
    return it->second;
  }

  std::string get_string(const std::string& key,
                         const std::string& dflt) const {
    return has(key) ? get_string(key) : dflt;
  }

  int get_int(const std::string& key) const {
    return detail::parse_int(get_string(key), key.c_str());
  }
  int get_int(const std::string& key, int dflt) const {
    return has(key) ? get_int(key) : dflt;
  }

  double get_double(const std::string& key) const {
    return detail::parse_double(get_string(key), key.c_str());
  }
  double get_double(const std::string& key, double dflt) const {
    return has(key) ? get_double(key) : dflt;
  }

  bool get_bool(const std::string& key) const {
    const std::string v = get_string(key);
    if (v == "true" || v == "on" || v == "1") return true;
    if (v == "false" || v == "off" || v == "0") return false;
    throw ConfigError(origin_ + ": key '" + key + "' wants a boolean, got '" +
                      v + "'");
  }
  bool get_bool(const std::string& key, bool dflt) const {
    return has(key) ? get_bool(key) : dflt;
  }

  // Comma-separated values, or the generators
  //   linspace:<start>:<stop>:<count>   (inclusive endpoints)
  //   logspace:<e0>:<e1>:<count>        (10^linspace of the exponents)
  std::vector<double> get_list(const std::string& key) const {
    return parse_list(get_string(key), key);
  }
  std::vector<double> get_list(const std::string& key,
                               const std::vector<double>& dflt) const {
    return has(key) ? get_list(key) : dflt;
  }

  // Semicolon-separated groups of lists, e.g. "2,2.5,3; 5,6,7".
  std::vector<std::vector<double>> get_bands(const std::string& key) const {
    const std::string raw = get_string(key);
    std::vector<std::vector<double>> bands;
    std::size_t start = 0;
    while (start <= raw.size()) {
      const auto semi = raw.find(';', start);
      const std::string part =
          trim(raw.substr(start, semi == std::string::npos ? std::string::npos
                                                           : semi - start));
      if (part.empty())
        throw ConfigError(origin_ + ": key '" + key + "' has an empty band");
      bands.push_back(parse_list(part, key));
      if (semi == std::string::npos) break;
      start = semi + 1;
    }
    return bands;
  }

  void ensure_fully_consumed() const {
    std::string unknown;
    for (const auto& [k, v] : kv_)
      if (!consumed_.count(k)) unknown += (unknown.empty() ? "" : ", ") + k;
    if (!unknown.empty())
      throw ConfigError(origin_ + ": unknown config keys: " + unknown);
  }

  // Content hash over sorted key=value pairs; independent of comments,
  // whitespace and line order.
  std::uint64_t hash() const {
    std::uint64_t h = kFnvOffset;
    for (const auto& [k, v] : kv_) {
      h = fnv1a(k, h);
      h = fnv1a("=", h);
      h = fnv1a(v, h);
      h = fnv1a("\n", h);
    }
    return h;
  }

  const std::map<std::string, std::string>& entries() const { return kv_; }

 private:
  static std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
  }

  std::string where(int lineno) const {
    return origin_ + ":" + std::to_string(lineno) + ": ";
  }

  std::vector<double> parse_list(const std::string& raw,
                                 const std::string& key) const {
    std::vector<double> out;
    if (raw.rfind("linspace:", 0) == 0 || raw.rfind("logspace:", 0) == 0) {
      const bool log10_grid = raw[1] == 'o';
      std::vector<std::string> parts;
      std::size_t start = raw.find(':') + 1;
      while (true) {
        const auto colon = raw.find(':', start);
        parts.push_back(raw.substr(start, colon == std::string::npos
                                              ? std::string::npos
                                              : colon - start));
        if (colon == std::string::npos) break;
        start = colon + 1;
      }
      if (parts.size() != 3)
        throw ConfigError(origin_ + ": key '" + key +
                          "' wants <gen>:<start>:<stop>:<count>");
      const double a = detail::parse_double(parts[0], key.c_str());
      const double b = detail::parse_double(parts[1], key.c_str());
      const int n = detail::parse_int(parts[2], key.c_str());
      if (n < 1)
        throw ConfigError(origin_ + ": key '" + key + "' wants count >= 1");
      for (int i = 0; i < n; ++i) {
        const double t =
            n == 1 ? a : a + (b - a) * static_cast<double>(i) / (n - 1);
        out.push_back(log10_grid ? std::pow(10.0, t) : t);
      }
      return out;
    }
    std::size_t start = 0;
    while (start <= raw.size()) {
      const auto comma = raw.find(',', start);
      const std::string part =
          trim(raw.substr(start, comma == std::string::npos
                                     ? std::string::npos
                                     : comma - start));
      if (part.empty())
        throw ConfigError(origin_ + ": key '" + key +
                          "' has an empty list entry");
      out.push_back(detail::parse_double(part, key.c_str()));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    return out;
  }

  std::string origin_;
  std::map<std::string, std::string> kv_;
  mutable std::set<std::string> consumed_;
};

}  // namespace lrwi
