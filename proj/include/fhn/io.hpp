// Copyright fhn-waves contributors
// SPDX-License-Identifier: Apache-2.0
//
// Run-directory persistence: field CSV with a JSON sidecar, certificate JSON,
// and a manifest of produced artifacts with content hashes.

#pragma once

#include "fhn/field.hpp"
#include "fhn/model.hpp"

#include <json.hpp>

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace fhn {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// 17 significant digits, enough to round-trip a double.
inline std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t h) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline std::string params_hash(const ModelParams& m) {
  return hex64(fnv1a64("beta=" + fmt17(m.beta) + ";d=" + fmt17(m.d) + ";tau=" + fmt17(m.tau)));
}

inline std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot read " + p.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline void write_text(const fs::path& p, const std::string& text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw IoError("cannot write " + p.string());
  out << text;
  if (!out) throw IoError("write failed for " + p.string());
}

inline void write_json(const fs::path& p, const json& j) { write_text(p, j.dump(2) + "\n"); }
inline json read_json(const fs::path& p) {
  try {
    return json::parse(read_text(p));
  } catch (const json::parse_error& e) {
    throw IoError(p.string() + ": " + e.what());
  }
}

// ------------------------------------------------------------------ CSV

// Columns are written as named; the first is x.
inline std::string csv_text(const std::vector<std::string>& header,
                            const std::vector<std::span<const double>>& cols) {
  if (header.size() != cols.size() || cols.empty()) throw IoError("csv: header and columns differ");
  const std::size_t n = cols[0].size();
  for (const auto& c : cols)
    if (c.size() != n) throw IoError("csv: ragged columns");
  std::string out;
  for (std::size_t k = 0; k < header.size(); ++k) out += (k ? "," : "") + header[k];
  out += "\n";
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < cols.size(); ++k) {
      if (k) out += ",";
      out += fmt17(cols[k][i]);
    }
    out += "\n";
  }
  return out;
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> cols;
  const std::vector<double>& col(const std::string& name) const {
    for (std::size_t k = 0; k < header.size(); ++k)
      if (header[k] == name) return cols[k];
    throw IoError("csv: no column " + name);
  }
};

inline CsvTable parse_csv(const std::string& text) {
  CsvTable t;
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw IoError("csv: empty");
  {
    std::istringstream hs(line);
    std::string cell;
    while (std::getline(hs, cell, ',')) t.header.push_back(cell);
  }
  t.cols.resize(t.header.size());
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string cell;
    std::size_t k = 0;
    while (std::getline(ls, cell, ',')) {
      if (k >= t.cols.size()) throw IoError("csv: too many cells on row " + std::to_string(row));
      char* end = nullptr;
      const double x = std::strtod(cell.c_str(), &end);
      if (end == cell.c_str()) throw IoError("csv: bad number on row " + std::to_string(row));
      t.cols[k++].push_back(x);
    }
    if (k != t.cols.size()) throw IoError("csv: short row " + std::to_string(row));
  }
  return t;
}

// ------------------------------------------------------------------ fields

inline json grid_json(const Grid& g) {
  return {{"x_min", g.x_min()}, {"x_max", g.x_max()}, {"n", g.size()}, {"h", g.h()}};
}

inline Grid grid_from_json(const json& j) {
  return Grid(j.at("x_min").get<double>(), j.at("x_max").get<double>(), j.at("n").get<std::size_t>());
}

// Standing wave (u, v) with the phase variables p = d u', q = -v'.
struct StoredWave {
  Field u, v;
};

inline json field_sidecar(const ModelParams& m, const Field& u, const std::string& kind) {
  return {{"kind", kind},
          {"grid", grid_json(u.grid)},
          {"tails", {{"left", to_string(u.left)}, {"right", to_string(u.right)}}},
          {"params", {{"beta", m.beta}, {"d", m.d}, {"tau", m.tau}}},
          {"params_hash", params_hash(m)}};
}

// Writes stem.csv and stem.json; returns both file names.
inline std::vector<std::string> write_wave(const fs::path& dir, const std::string& stem, const ModelParams& m,
                                           const Field& u, const Field& v) {
  require_same_grid(u.grid, v.grid);
  const auto du = derivative(u.values, u.grid.h()), dv = derivative(v.values, v.grid.h());
  std::vector<double> x = u.grid.nodes(), p(du.size()), q(dv.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] = m.d * du[i];
    q[i] = -dv[i];
  }
  write_text(dir / (stem + ".csv"), csv_text({"x", "u", "v", "p", "q"}, {x, u.values, v.values, p, q}));
  write_json(dir / (stem + ".json"), field_sidecar(m, u, "wave"));
  return {stem + ".csv", stem + ".json"};
}

inline std::vector<std::string> write_profile(const fs::path& dir, const std::string& stem, const ModelParams& m,
                                              const Field& u) {
  const auto x = u.grid.nodes();
  write_text(dir / (stem + ".csv"), csv_text({"x", "u"}, {x, u.values}));
  write_json(dir / (stem + ".json"), field_sidecar(m, u, "profile"));
  return {stem + ".csv", stem + ".json"};
}

inline StoredWave read_wave(const fs::path& dir, const std::string& stem, const ModelParams& m) {
  const json side = read_json(dir / (stem + ".json"));
  if (side.at("params_hash").get<std::string>() != params_hash(m))
    throw IoError(stem + ": stored parameters differ from the run parameters");
  const Grid g = grid_from_json(side.at("grid"));
  const Tail l = tail_from_string(side.at("tails").at("left").get<std::string>());
  const Tail r = tail_from_string(side.at("tails").at("right").get<std::string>());
  const CsvTable t = parse_csv(read_text(dir / (stem + ".csv")));
  const auto& x = t.col("x");
  if (x.size() != g.size()) throw IoError(stem + ": row count does not match the grid");
  for (std::size_t i = 0; i < x.size(); ++i)
    if (std::abs(x[i] - g.x(i)) > 1e-9 * (1.0 + std::abs(x[i]))) throw IoError(stem + ": x column off the grid");
  return {Field(g, t.col("u"), l, r), Field(g, t.col("v"), l, r)};
}

// ------------------------------------------------------------------ manifest

// manifest.json: {"files": {name: {"fnv1a64": hash, "role": role}}, "seeds": {...}}
class Manifest {
 public:
  explicit Manifest(fs::path dir) : dir_(std::move(dir)) {
    const auto p = dir_ / "manifest.json";
    if (fs::exists(p)) j_ = read_json(p);
    if (!j_.contains("files")) j_["files"] = json::object();
    if (!j_.contains("seeds")) j_["seeds"] = json::object();
  }
  void add(const std::string& name, const std::string& role) {
    j_["files"][name] = {{"fnv1a64", hex64(fnv1a64(read_text(dir_ / name)))}, {"role", role}};
  }
  void seed(const std::string& key, std::uint64_t s) { j_["seeds"][key] = s; }
  bool has(const std::string& name) const { return j_["files"].contains(name); }
  const json& data() const { return j_; }
  void save() const { write_json(dir_ / "manifest.json", j_); }
  // Names whose content no longer matches the recorded hash.
  std::vector<std::string> stale() const {
    std::vector<std::string> bad;
    for (const auto& [name, rec] : j_["files"].items()) {
      const auto p = dir_ / name;
      if (!fs::exists(p) || hex64(fnv1a64(read_text(p))) != rec.at("fnv1a64").get<std::string>())
        bad.push_back(name);
    }
    return bad;
  }

 private:
  fs::path dir_;
  json j_;
};

}  // namespace fhn
