#pragma once

// Run orchestration: evolve the configured initial data, record diagnostics
// at every snapshot, stream artifacts and audit the trajectory.

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mcf/config.hpp"
#include "mcf/diagnostics.hpp"
#include "mcf/flow.hpp"
#include "mcf/io.hpp"

namespace mcf {

struct RunResult {
  std::vector<DiagnosticsRecord> records;
  AuditReport audit;
  EvolveStats stats;
};

namespace detail {

inline void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os << j.dump(2) << '\n';
  if (!os) throw IoError("write failed: " + path.string());
}

template <class Mesh>
RunResult run_on(const RunConfig& c, std::shared_ptr<const Mesh> mesh, bool write) {
  namespace fs = std::filesystem;
  const fs::path dir = c.output.directory;
  std::optional<TimeseriesWriter> series;
  if (write) {
    fs::create_directories(dir);
    write_json(dir / "config.json", to_json(c));
    if (c.output.wants("snapshot")) fs::create_directories(dir / "snapshots");
    if (c.output.wants("timeseries")) series.emplace(dir / "timeseries.ndjson");
  }

  RunResult res;
  int snap = 0;
  auto observe = [&](const Field<Mesh>& f) {
    res.records.push_back(record(f, c.interior_fraction));
    if (series) series->append(res.records.back());
    if (write && c.output.wants("snapshot")) {
      char name[32];
      std::snprintf(name, sizeof name, "snapshot_%04d.csv", snap);
      write_snapshot(dir / "snapshots" / name, f);
    }
    ++snap;
  };

  try {
    evolve(initial_field(c, mesh), c.step_control(), observe, &res.stats);
  } catch (const Error& e) {
    if (write) {
      nlohmann::json dump{{"error", e.what()},
                          {"steps", res.stats.steps},
                          {"rejected", res.stats.rejected},
                          {"last_dt", res.stats.last_dt},
                          {"parabolicity", res.stats.worst.str()}};
      dump["last_record"] = res.records.empty() ? nlohmann::json(nullptr) : to_json(res.records.back());
      write_json(dir / "failure.json", dump);
    }
    throw;
  }

  AuditTolerances tol;
  res.audit = audit(res.records, tol);
  if (write && c.output.wants("audit")) write_json(dir / "audit.json", to_json(res.audit));
  return res;
}

}  // namespace detail

/// Runs the configuration. With write = true the output directory receives
/// config.json, timeseries.ndjson, snapshots/snapshot_NNNN.csv and
/// audit.json (as selected by output.formats), or failure.json if the run
/// halts.
inline RunResult run(const RunConfig& c, bool write = true) {
  return with_mesh(c, [&](auto mesh) { return detail::run_on(c, mesh, write); });
}

/// The exact solution u = sqrt(k^2 + 2nt) sampled at t0 factor^j up to t_end.
struct HomotheticSample {
  double t, u, H, HF, J;
};

inline std::vector<HomotheticSample> homothetic_trajectory(double k, int n, double t_end, double t0 = 1.0,
                                                           double factor = 2.0) {
  if (!(k > 0.0) || n < 2 || !(t_end > 0.0) || !(t0 > 0.0) || !(factor > 1.0))
    throw DomainError("homothetic trajectory needs k > 0, n >= 2, t_end > 0, t0 > 0, factor > 1");
  std::vector<double> times{0.0};
  for (double t = t0; t < t_end; t *= factor) times.push_back(t);
  times.push_back(t_end);
  std::vector<HomotheticSample> out;
  for (double t : times) {
    const double u = homothetic_u(k, n, t);
    out.push_back({t, u, n / u, static_cast<double>(n), 0.0});
  }
  return out;
}

}  // namespace mcf
