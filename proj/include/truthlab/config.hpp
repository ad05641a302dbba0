#pragma once

// Flat TOML-style config files. Supported grammar, documented in README:
//   [section]            (optional; prefixes keys as "section.key")
//   key = value          (value: integer, float, true/false, or "string")
//   # comment            (full-line or trailing)
// Keys are looked up by their dotted name. The canonical serialization
// (sorted keys, shortest round-trip float format) feeds the config hash that
// every output file embeds.

#include <cctype>
#include <charconv>
#include <cstdint>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>

#include "truthlab/rng.hpp"

namespace truthlab::config {

struct ConfigError : std::runtime_error {
  std::string field;
  ConfigError(std::string f, const std::string& message)
      : std::runtime_error(f.empty() ? message : f + ": " + message), field(std::move(f)) {}
};

using Value = std::variant<long long, double, bool, std::string>;

inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::string format_value(const Value& v) {
  switch (v.index()) {
    case 0: return std::to_string(std::get<long long>(v));
    case 1: return format_double(std::get<double>(v));
    case 2: return std::get<bool>(v) ? "true" : "false";
    default: {
      std::string out = "\"";
      for (char c : std::get<std::string>(v)) {
        if (c == '"' || c == '\\') out.push_back('\\');
        out.push_back(c);
      }
      out.push_back('"');
      return out;
    }
  }
}

class Config {
 public:
  void set(const std::string& key, Value v) { values_[key] = std::move(v); }
  bool has(const std::string& key) const { return values_.count(key) > 0; }

  long long get_int(const std::string& key, long long fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    return as_int(key, it->second);
  }
  long long require_int(const std::string& key) const { return as_int(key, require(key)); }

  double get_double(const std::string& key, double fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    return as_double(key, it->second);
  }
  double require_double(const std::string& key) const { return as_double(key, require(key)); }

  bool get_bool(const std::string& key, bool fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    if (it->second.index() != 2) throw ConfigError(key, "expected a boolean");
    return std::get<bool>(it->second);
  }

  std::string get_string(const std::string& key, const std::string& fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    if (it->second.index() != 3) throw ConfigError(key, "expected a string");
    return std::get<std::string>(it->second);
  }
  std::string require_string(const std::string& key) const {
    const Value& v = require(key);
    if (v.index() != 3) throw ConfigError(key, "expected a string");
    return std::get<std::string>(v);
  }

  // Sorted "key = value" lines; the identity the hash is computed over.
  std::string canonical() const {
    std::string out;
    for (const auto& [key, value] : values_) {
      out += key;
      out += " = ";
      out += format_value(value);
      out += '\n';
    }
    return out;
  }

  std::string hash_hex() const {
    std::uint64_t h = rng::fnv1a64(canonical());
    char buf[17];
    static const char* digits = "0123456789abcdef";
    for (int i = 15; i >= 0; --i) {
      buf[i] = digits[h & 0xF];
      h >>= 4;
    }
    buf[16] = '\0';
    return std::string(buf);
  }

  const std::map<std::string, Value>& entries() const { return values_; }

 private:
  const Value& require(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError(key, "missing required key");
    return it->second;
  }
  static long long as_int(const std::string& key, const Value& v) {
    if (v.index() != 0) throw ConfigError(key, "expected an integer");
    return std::get<long long>(v);
  }
  static double as_double(const std::string& key, const Value& v) {
    if (v.index() == 0) return static_cast<double>(std::get<long long>(v));
    if (v.index() != 1) throw ConfigError(key, "expected a number");
    return std::get<double>(v);
  }

  std::map<std::string, Value> values_;
};

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

inline Value parse_scalar(const std::string& key, const std::string& raw) {
  if (raw.empty()) throw ConfigError(key, "empty value");
  if (raw.front() == '"') {
    std::string out;
    std::size_t i = 1;
    bool closed = false;
    while (i < raw.size()) {
      char c = raw[i];
      if (c == '\\') {
        if (i + 1 >= raw.size()) throw ConfigError(key, "bad escape in string");
        char e = raw[i + 1];
        if (e != '"' && e != '\\') throw ConfigError(key, "bad escape in string");
        out.push_back(e);
        i += 2;
      } else if (c == '"') {
        closed = true;
        ++i;
        break;
      } else {
        out.push_back(c);
        ++i;
      }
    }
    if (!closed || i != raw.size()) throw ConfigError(key, "unterminated or malformed string");
    return out;
  }
  if (raw == "true") return true;
  if (raw == "false") return false;
  {
    long long iv = 0;
    auto res = std::from_chars(raw.data(), raw.data() + raw.size(), iv);
    if (res.ec == std::errc{} && res.ptr == raw.data() + raw.size()) return iv;
  }
  {
    double dv = 0.0;
    auto res = std::from_chars(raw.data(), raw.data() + raw.size(), dv);
    if (res.ec == std::errc{} && res.ptr == raw.data() + raw.size()) return dv;
  }
  throw ConfigError(key, "cannot parse value '" + raw + "'");
}

// Strips a trailing comment, respecting string quoting.
inline std::string strip_comment(const std::string& line) {
  bool in_string = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (c == '\\' && in_string) {
      ++i;
      continue;
    }
    if (c == '"') in_string = !in_string;
    if (c == '#' && !in_string) return line.substr(0, i);
  }
  return line;
}

}  // namespace detail

inline Config parse_config(std::istream& in) {
  Config cfg;
  std::string section;
  std::string line;
  long long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string body = detail::trim(detail::strip_comment(line));
    if (body.empty()) continue;
    if (body.front() == '[') {
      if (body.back() != ']') throw ConfigError("", "line " + std::to_string(lineno) + ": bad section header");
      section = detail::trim(body.substr(1, body.size() - 2));
      if (section.empty()) throw ConfigError("", "line " + std::to_string(lineno) + ": empty section name");
      continue;
    }
    std::size_t eq = body.find('=');
    if (eq == std::string::npos)
      throw ConfigError("", "line " + std::to_string(lineno) + ": expected key = value");
    std::string key = detail::trim(body.substr(0, eq));
    std::string raw = detail::trim(body.substr(eq + 1));
    if (key.empty()) throw ConfigError("", "line " + std::to_string(lineno) + ": empty key");
    std::string full = section.empty() ? key : section + "." + key;
    cfg.set(full, detail::parse_scalar(full, raw));
  }
  return cfg;
}

inline Config parse_config_string(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

}  // namespace truthlab::config
