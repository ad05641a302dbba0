#pragma once

// Output plumbing shared by the command-line tool: RFC-4180 CSV emission
// with provenance columns, matrix dumps with mandatory JSON sidecars, and
// provenance-stamped JSON files. Every file carries {config_hash, seed,
// version}; tabular CSVs carry them as leading constant columns, matrices
// via the sidecar.

#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "truthlab/config.hpp"
#include "truthlab/linalg.hpp"
#include "truthlab/version.hpp"

namespace truthlab::io {

using nlohmann::json;

struct OutputMeta {
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string version = kArtifactVersion;
};

inline std::string csv_escape(const std::string& cell) {
  bool needs_quote = cell.find_first_of(",\"\r\n") != std::string::npos;
  if (!needs_quote) return cell;
  std::string out = "\"";
  for (char c : cell) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

class CsvWriter {
 public:
  CsvWriter(const std::string& path, const OutputMeta& meta) : out_(path, std::ios::trunc), meta_(meta) {
    if (!out_) throw std::runtime_error("CsvWriter: cannot open " + path);
  }

  void header(const std::vector<std::string>& columns) {
    out_ << "config_hash,seed,version";
    for (const std::string& c : columns) out_ << ',' << csv_escape(c);
    out_ << '\n';
  }

  void row(const std::vector<std::string>& cells) {
    out_ << meta_.config_hash << ',' << meta_.seed << ',' << meta_.version;
    for (const std::string& c : cells) out_ << ',' << csv_escape(c);
    out_ << '\n';
  }

  bool good() const { return static_cast<bool>(out_); }

 private:
  std::ofstream out_;
  OutputMeta meta_;
};

inline std::string fmt(double v) { return config::format_double(v); }
inline std::string fmt(long long v) { return std::to_string(v); }
inline std::string fmt(int v) { return std::to_string(v); }

inline json meta_json(const OutputMeta& meta) {
  return json{{"config_hash", meta.config_hash}, {"seed", meta.seed}, {"version", meta.version}};
}

// Numeric grid CSV; provenance and shape live in the mandatory sidecar
// <path>.meta.json.
inline void write_matrix_csv(const std::string& path, const la::Mat& m, const OutputMeta& meta,
                             json sidecar_extra = json::object()) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("write_matrix_csv: cannot open " + path);
  for (int i = 0; i < m.rows; ++i) {
    for (int j = 0; j < m.cols; ++j) {
      if (j) out << ',';
      out << fmt(m(i, j));
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("write_matrix_csv: write failed for " + path);
  json side = meta_json(meta);
  side["rows"] = m.rows;
  side["cols"] = m.cols;
  for (auto& [k, v] : sidecar_extra.items()) side[k] = v;
  std::ofstream sout(path + ".meta.json", std::ios::trunc);
  if (!sout) throw std::runtime_error("write_matrix_csv: cannot open sidecar for " + path);
  sout << side.dump(2) << '\n';
}

inline void write_json_file(const std::string& path, json payload, const OutputMeta& meta) {
  payload["config_hash"] = meta.config_hash;
  payload["seed"] = meta.seed;
  payload["version"] = meta.version;
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("write_json_file: cannot open " + path);
  out << payload.dump(2) << '\n';
}

inline json error_json(const std::string& field, const std::string& message) {
  return json{{"error", json{{"field", field}, {"message", message}}}};
}

}  // namespace truthlab::io
