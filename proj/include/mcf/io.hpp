#pragma once

// Output artifacts: per-node snapshot tables (CSV, 17 significant digits)
// and newline-delimited JSON timeseries of diagnostics records.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mcf/diagnostics.hpp"
#include "mcf/errors.hpp"
#include "mcf/geometry.hpp"
#include "mcf/mesh.hpp"

namespace mcf {

struct IoError : Error {
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Snapshots

struct SnapshotTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;  // node_id stored as a double

  int column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return static_cast<int>(i);
    throw ContractViolation("snapshot has no column " + name);
  }
};

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Columns node_id, x1..xn, u, v, S, H, A2, J in node order.
template <class Mesh>
void write_snapshot(std::ostream& os, const Field<Mesh>& field) {
  constexpr int N = Mesh::dim;
  const Field<Mesh> f = field.closed ? field : apply_neumann(field);
  const auto& m = *f.mesh;
  os << "node_id";
  for (int i = 1; i <= N; ++i) os << ",x" << i;
  os << ",u,v,S,H,A2,J\n";
  m.for_each_jet(f, [&](int k, const Jet<N>& jet) {
    const auto g = node_geometry(jet);
    os << k;
    for (int i = 0; i < N; ++i) os << ',' << format_double(jet.x[i]);
    for (double v : {jet.u, g.v, g.S, g.H, g.A2, g.J}) os << ',' << format_double(v);
    os << '\n';
  });
  if (!os) throw IoError("snapshot write failed");
}

template <class Mesh>
void write_snapshot(const std::filesystem::path& path, const Field<Mesh>& field) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  write_snapshot(os, field);
}

inline SnapshotTable read_snapshot(std::istream& is) {
  SnapshotTable t;
  std::string line;
  if (!std::getline(is, line)) throw IoError("snapshot is empty");
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) t.header.push_back(cell);
  }
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::size_t pos = 0;
    while (pos <= line.size()) {
      const std::size_t end = std::min(line.find(',', pos), line.size());
      const std::string cell = line.substr(pos, end - pos);
      char* stop = nullptr;
      const double v = std::strtod(cell.c_str(), &stop);
      if (cell.empty() || *stop != '\0') throw IoError("snapshot: bad number '" + cell + "'");
      row.push_back(v);
      pos = end + 1;
    }
    if (row.size() != t.header.size()) throw IoError("snapshot: row width does not match header");
    t.rows.push_back(std::move(row));
  }
  return t;
}

inline SnapshotTable read_snapshot(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  return read_snapshot(is);
}

// ---------------------------------------------------------------------------
// Records as JSON

inline nlohmann::json to_json(const DiagnosticsRecord& r) {
  return {
      {"t", r.t},
      {"n", r.n},
      {"cap_area", r.cap_area},
      {"F2_2nt_min", r.F2_2nt_min},
      {"F2_2nt_max", r.F2_2nt_max},
      {"HF_min", r.HF_min},
      {"HF_max", r.HF_max},
      {"HSF2_min", r.HSF2_min},
      {"HSF2_max", r.HSF2_max},
      {"J_max", r.J_max},
      {"H_min", r.H_min},
      {"area", r.area},
      {"psi", r.psi},
      {"psi_u_min", r.psi_u_min},
      {"psi_u_max", r.psi_u_max},
      {"osc_psi_u", r.osc_psi_u},
      {"mean_HF", r.mean_HF},
      {"integral_residual", r.integral_residual},
      {"interior_A2F2_max", r.interior_A2F2_max},
      {"boundary", {{"rF2", r.boundary.rF2}, {"rHS", r.boundary.rHS}, {"rH", r.boundary.rH}}},
      {"parabolicity",
       {{"min_v", r.parabolicity.min_v},
        {"min_u", r.parabolicity.min_u},
        {"max_u", r.parabolicity.max_u},
        {"bound", r.parabolicity.bound()}}},
  };
}

/// Inverse of to_json; throws IoError naming the first missing or mistyped
/// field.
inline DiagnosticsRecord record_from_json(const nlohmann::json& j) {
  DiagnosticsRecord r;
  try {
    r.t = j.at("t").get<double>();
    r.n = j.at("n").get<int>();
    r.cap_area = j.at("cap_area").get<double>();
    r.F2_2nt_min = j.at("F2_2nt_min").get<double>();
    r.F2_2nt_max = j.at("F2_2nt_max").get<double>();
    r.HF_min = j.at("HF_min").get<double>();
    r.HF_max = j.at("HF_max").get<double>();
    r.HSF2_min = j.at("HSF2_min").get<double>();
    r.HSF2_max = j.at("HSF2_max").get<double>();
    r.J_max = j.at("J_max").get<double>();
    r.H_min = j.at("H_min").get<double>();
    r.area = j.at("area").get<double>();
    r.psi = j.at("psi").get<double>();
    r.psi_u_min = j.at("psi_u_min").get<double>();
    r.psi_u_max = j.at("psi_u_max").get<double>();
    r.osc_psi_u = j.at("osc_psi_u").get<double>();
    r.mean_HF = j.at("mean_HF").get<double>();
    r.integral_residual = j.at("integral_residual").get<double>();
    r.interior_A2F2_max = j.at("interior_A2F2_max").get<double>();
    const auto& b = j.at("boundary");
    r.boundary.rF2 = b.at("rF2").get<double>();
    r.boundary.rHS = b.at("rHS").get<double>();
    r.boundary.rH = b.at("rH").get<double>();
    const auto& p = j.at("parabolicity");
    r.parabolicity.min_v = p.at("min_v").get<double>();
    r.parabolicity.min_u = p.at("min_u").get<double>();
    r.parabolicity.max_u = p.at("max_u").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("timeseries record: ") + e.what());
  }
  return r;
}

/// Appends one record per line; each line is written and flushed whole.
class TimeseriesWriter {
 public:
  explicit TimeseriesWriter(const std::filesystem::path& path) : os_(path, std::ios::binary | std::ios::trunc) {
    if (!os_) throw IoError("cannot open " + path.string() + " for writing");
  }

  void append(const DiagnosticsRecord& r) {
    const std::string line = to_json(r).dump() + "\n";
    os_.write(line.data(), static_cast<std::streamsize>(line.size()));
    os_.flush();
    if (!os_) throw IoError("timeseries write failed");
  }

 private:
  std::ofstream os_;
};

inline void write_timeseries(const std::filesystem::path& path, const std::vector<DiagnosticsRecord>& records) {
  if (records.empty()) throw ContractViolation("write_timeseries needs at least one record");
  TimeseriesWriter w(path);
  for (const auto& r : records) w.append(r);
}

/// Reads complete lines; a trailing line without its newline (an interrupted
/// write) is ignored if it does not parse.
inline std::vector<DiagnosticsRecord> read_timeseries(std::istream& is) {
  std::vector<DiagnosticsRecord> out;
  std::string line;
  while (std::getline(is, line)) {
    const bool complete = !is.eof();
    if (line.empty()) continue;
    try {
      out.push_back(record_from_json(nlohmann::json::parse(line)));
    } catch (const std::exception& e) {
      if (complete) throw IoError(std::string("timeseries line ") + std::to_string(out.size() + 1) + ": " + e.what());
    }
  }
  return out;
}

inline std::vector<DiagnosticsRecord> read_timeseries(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  return read_timeseries(is);
}

// ---------------------------------------------------------------------------
// Audit report

inline nlohmann::json to_json(const AuditReport& rep) {
  nlohmann::json checks = nlohmann::json::array();
  for (const auto& c : rep.checks) {
    nlohmann::json jc{{"name", c.name}, {"passed", c.passed}, {"worst_margin", c.worst_margin}, {"detail", c.detail}};
    jc["offending_t"] = c.offending_t ? nlohmann::json(*c.offending_t) : nlohmann::json(nullptr);
    checks.push_back(std::move(jc));
  }
  nlohmann::json fit{{"performed", rep.fit.performed}};
  if (rep.fit.performed) {
    fit["b"] = rep.fit.b;
    fit["coefficient"] = rep.fit.coefficient;
    fit["r2"] = rep.fit.r2;
    fit["t_min"] = rep.fit.t_min;
    fit["t_max"] = rep.fit.t_max;
    fit["samples"] = rep.fit.samples;
  }
  return {{"passed", rep.passed()}, {"checks", checks}, {"log_fit", fit}};
}

}  // namespace mcf
