#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "mcf/config.hpp"
#include "mcf/io.hpp"
#include "mcf/run.hpp"

namespace mcf {
namespace {

namespace fs = std::filesystem;

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("mcfcone_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

std::vector<std::string> violations_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigViolations& e) {
    return e.violations;
  }
  return {};
}

bool mentions(const std::vector<std::string>& v, const std::string& needle) {
  for (const auto& s : v)
    if (s.find(needle) != std::string::npos) return true;
  return false;
}

TEST(Config, MinimalRoundConfigFillsDefaults) {
  const auto c = parse_config(R"({"cone": {"rho": 0.5}})");
  EXPECT_EQ(c.n, 2);
  EXPECT_EQ(c.cone.type, "round");
  EXPECT_EQ(c.mesh.nr, 64);
  EXPECT_EQ(c.mesh.ntheta, 64);
  EXPECT_FALSE(c.mesh.axisymmetric);
  EXPECT_EQ(c.time.safety, 0.25);
  EXPECT_EQ(c.initial.kind, "constant");
  EXPECT_EQ(c.initial.k, 1.0);
  EXPECT_EQ(c.interior_fraction, 0.5);
  EXPECT_TRUE(std::isinf(c.time.dt_max));
}

TEST(Config, RhoOutsideUnitBallIsRejected) {
  const auto v = violations_of(R"({"cone": {"rho": 1.2}})");
  ASSERT_FALSE(v.empty());
  EXPECT_TRUE(mentions(v, "cross-section must lie in the open unit ball"));
}

TEST(Config, UnknownKeysAreRejected) {
  const auto v = violations_of(R"({"cone": {"rho": 0.5, "rh0": 1}, "tim": {}})");
  EXPECT_TRUE(mentions(v, "unknown key 'rh0'"));
  EXPECT_TRUE(mentions(v, "unknown key 'tim'"));
}

TEST(Config, AllViolationsAreReportedTogether) {
  const auto v = violations_of(R"({
    "n": 1,
    "cone": {"type": "round", "rho": -0.1},
    "mesh": {"Nr": 4, "Ntheta": 9},
    "time": {"safety": 2.0, "snapshot_factor": 1.0},
    "initial": {"kind": "spiral", "k": -1},
    "interior_fraction": 0
  })");
  EXPECT_GE(v.size(), 8u);
  EXPECT_TRUE(mentions(v, "n must be at least 2"));
  EXPECT_TRUE(mentions(v, "open unit ball"));
  EXPECT_TRUE(mentions(v, "Nr"));
  EXPECT_TRUE(mentions(v, "Ntheta"));
  EXPECT_TRUE(mentions(v, "safety"));
  EXPECT_TRUE(mentions(v, "snapshot_factor"));
  EXPECT_TRUE(mentions(v, "initial.kind"));
  EXPECT_TRUE(mentions(v, "interior_fraction"));
}

TEST(Config, TypeErrorsAndMalformedInputAreReported) {
  EXPECT_TRUE(mentions(violations_of(R"({"mesh": {"Nr": "many"}})"), "mesh.Nr"));
  EXPECT_TRUE(mentions(violations_of(R"({"mesh": {"Nr": 12.5}})"), "integer"));
  EXPECT_TRUE(mentions(violations_of("{not json"), "malformed JSON"));
}

TEST(Config, DimensionAndMeshCombinations) {
  EXPECT_TRUE(mentions(violations_of(R"({"n": 3})"), "axisymmetric"));
  EXPECT_NO_THROW(parse_config(R"({"n": 3, "mesh": {"Nr": 16, "axisymmetric": true}})"));
  EXPECT_TRUE(mentions(violations_of(R"({"cone": {"type": "polar", "cosine": [0.5]}, "mesh": {"axisymmetric": true}})"),
                       "round cone"));
  EXPECT_TRUE(mentions(violations_of(R"({"cone": {"type": "polar", "cosine": [0.9, 0.2]}})"), "open unit ball"));
  EXPECT_NO_THROW(parse_config(R"({"cone": {"type": "polar", "cosine": [0.5, 0.05]}, "mesh": {"Nr": 16, "Ntheta": 16}})"));
}

TEST(Config, NonSpacelikeBumpNamesTheNode) {
  try {
    parse_config(R"({"cone": {"rho": 0.5}, "mesh": {"Nr": 32, "Ntheta": 32},
                     "initial": {"kind": "radial_bump", "k": 1, "a": 0.2}})");
    FAIL() << "expected a spacelike violation";
  } catch (const SpacelikeViolation& e) {
    EXPECT_NE(std::string(e.what()).find("node"), std::string::npos);
  }
  EXPECT_NO_THROW(parse_config(R"({"cone": {"rho": 0.8}, "mesh": {"Nr": 32, "Ntheta": 32},
                                   "initial": {"kind": "radial_bump", "k": 1, "a": 0.2}})"));
}

TEST(Config, JsonRoundTrip) {
  const auto c = parse_config(R"({"cone": {"type": "polar", "cosine": [0.5, 0.05]},
      "mesh": {"Nr": 16, "Ntheta": 16}, "initial": {"kind": "angular_mode", "a": 0.01, "m": 3},
      "time": {"t_end": 2, "dt_max": 0.5}})");
  const auto d = parse_config(to_json(c).dump());
  EXPECT_EQ(to_json(c), to_json(d));
  EXPECT_EQ(d.initial.m, 3);
  EXPECT_EQ(d.time.dt_max, 0.5);
}

TEST(InitialData, ProfilesAreNeumannCompatibleOnRoundCones) {
  for (const char* kind : {"radial_bump", "angular_mode"}) {
    RunConfig c;
    c.cone.rho = 0.6;
    c.initial.kind = kind;
    c.initial.a = 0.1;
    c.initial.m = 2;
    const auto u = initial_function<2>(c);
    for (double th : {0.0, 0.7, 2.0}) {
      const ChartPoint<2> e(std::cos(th), std::sin(th));
      const double h = 1e-6;
      const double dr = (u(e * (0.6 + h)) - u(e * (0.6 - h))) / (2 * h);
      EXPECT_NEAR(dr, 0.0, 1e-8) << kind;
    }
  }
}

TEST(InitialData, ConstantAndBumpValues) {
  RunConfig c;
  c.cone.rho = 0.8;
  c.initial.kind = "radial_bump";
  c.initial.k = 2.0;
  c.initial.a = 0.1;
  const auto u = initial_function<2>(c);
  EXPECT_DOUBLE_EQ(u(ChartPoint<2>(0.0, 0.0)), 2.1);
  EXPECT_NEAR(u(ChartPoint<2>(0.0, 0.4)), 2.0, 1e-15);
  EXPECT_NEAR(u(ChartPoint<2>(0.8, 0.0)), 1.9, 1e-15);
}

TEST(Snapshot, HomotheticSnapshotHasZeroJ) {
  const auto m = build_mesh(ConeSpec::round(0.5), 16, 16);
  std::stringstream ss;
  write_snapshot(ss, apply_neumann(sample_field(m, [](const ChartPoint<2>&) { return 1.7; })));
  const auto t = read_snapshot(ss);
  const std::vector<std::string> header{"node_id", "x1", "x2", "u", "v", "S", "H", "A2", "J"};
  EXPECT_EQ(t.header, header);
  ASSERT_EQ(t.rows.size(), 256u);
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    EXPECT_EQ(t.rows[i][0], static_cast<double>(i));
    EXPECT_NEAR(t.rows[i][t.column("J")], 0.0, 1e-10);
    EXPECT_NEAR(t.rows[i][t.column("H")], 2.0 / 1.7, 1e-12);
  }
}

TEST(Snapshot, RoundTripIsBitIdentical) {
  const auto m = build_mesh(ConeSpec::polar_graph({0.5, 0.05}), 16, 16);
  const auto f = apply_neumann(sample_field(m, [](const ChartPoint<2>& x) { return 1.0 + 0.1 * std::sin(3 * x[0]) * x[1]; }));
  std::stringstream ss;
  write_snapshot(ss, f);
  const std::string text = ss.str();
  const auto t = read_snapshot(ss);
  for (int k = 0; k < m->size(); ++k) {
    EXPECT_EQ(t.rows[k][t.column("u")], f.u[k]);
    EXPECT_EQ(t.rows[k][t.column("x1")], m->x(k)[0]);
  }
  std::ostringstream again;
  again << "node_id,x1,x2,u,v,S,H,A2,J\n";
  for (const auto& row : t.rows) {
    again << static_cast<long>(row[0]);
    for (std::size_t i = 1; i < row.size(); ++i) again << ',' << format_double(row[i]);
    again << '\n';
  }
  EXPECT_EQ(again.str(), text);
}

TEST(Snapshot, RadialMeshSnapshotHasNColumns) {
  const auto m = build_radial_mesh<3>(ConeSpec::round(0.5, 3), 8);
  std::stringstream ss;
  write_snapshot(ss, apply_neumann(sample_field(m, [](const ChartPoint<3>&) { return 1.0; })));
  const auto t = read_snapshot(ss);
  EXPECT_EQ(t.header.size(), 10u);
  EXPECT_EQ(t.rows.size(), 8u);
}

TEST(Snapshot, MalformedInputIsAnIoError) {
  std::stringstream bad("node_id,u\n0,1.0,2.0\n");
  EXPECT_THROW(read_snapshot(bad), IoError);
  std::stringstream nan("node_id,u\n0,abc\n");
  EXPECT_THROW(read_snapshot(nan), IoError);
  EXPECT_THROW(read_snapshot(fs::path("/nonexistent/mcf.csv")), IoError);
}

std::vector<DiagnosticsRecord> sample_records() {
  const auto m = build_mesh(ConeSpec::round(0.8), 12, 16);
  StepControl ctl;
  ctl.t_end = 0.5;
  ctl.snapshot_t0 = 0.125;
  std::vector<DiagnosticsRecord> recs;
  evolve(sample_field(m, [](const ChartPoint<2>& x) { return 1.0 + 0.1 * std::cos(std::numbers::pi * x.norm() / 0.8); }),
         ctl, [&](const auto& f) { recs.push_back(record(f)); });
  return recs;
}

TEST(Timeseries, OneLinePerRecordWithTheRecordSchema) {
  auto recs = sample_records();
  recs.resize(3);
  const auto dir = scratch("ts_schema");
  write_timeseries(dir / "ts.ndjson", recs);
  std::ifstream is(dir / "ts.ndjson");
  std::string line;
  int lines = 0;
  const std::set<std::string> keys{"t", "n", "cap_area", "F2_2nt_min", "F2_2nt_max", "HF_min", "HF_max",
                                   "HSF2_min", "HSF2_max", "J_max", "H_min", "area", "psi", "psi_u_min",
                                   "psi_u_max", "osc_psi_u", "mean_HF", "integral_residual",
                                   "interior_A2F2_max", "boundary", "parabolicity"};
  while (std::getline(is, line)) {
    ++lines;
    const auto j = nlohmann::json::parse(line);
    std::set<std::string> got;
    for (const auto& [k, _] : j.items()) got.insert(k);
    EXPECT_EQ(got, keys);
  }
  EXPECT_EQ(lines, 3);
  fs::remove_all(dir);
}

TEST(Timeseries, RoundTripReproducesTheAudit) {
  const auto recs = sample_records();
  const auto dir = scratch("ts_audit");
  write_timeseries(dir / "ts.ndjson", recs);
  const auto back = read_timeseries(dir / "ts.ndjson");
  ASSERT_EQ(back.size(), recs.size());
  for (std::size_t i = 0; i < recs.size(); ++i) EXPECT_EQ(to_json(back[i]), to_json(recs[i]));
  EXPECT_EQ(to_json(audit(back)), to_json(audit(recs)));
  fs::remove_all(dir);
}

TEST(Timeseries, InterruptedFileParsesUpToLastCompleteLine) {
  const auto recs = sample_records();
  std::string text;
  for (const auto& r : recs) text += to_json(r).dump() + "\n";
  const std::string cut = text.substr(0, text.size() - 40);
  std::stringstream ss(cut);
  const auto back = read_timeseries(ss);
  EXPECT_EQ(back.size(), recs.size() - 1);
  std::stringstream corrupt("{\"t\": 1}\n" + text);
  EXPECT_THROW(read_timeseries(corrupt), IoError);
}

TEST(Run, HomotheticConfigWritesArtifactsAndPassesAudit) {
  const auto dir = scratch("run_homothetic");
  auto c = parse_config(R"({"cone": {"rho": 0.5}, "mesh": {"Nr": 16, "Ntheta": 16},
                            "time": {"t_end": 4, "snapshot_t0": 0.5}})");
  c.output.directory = dir.string();
  const auto res = run(c);
  for (const auto& ch : res.audit.checks) EXPECT_TRUE(ch.passed) << ch.name << " " << ch.worst_margin;
  EXPECT_EQ(res.records.size(), 5u);
  EXPECT_NEAR(res.records.back().F2_2nt_max, 1.0, 1e-5);
  EXPECT_TRUE(fs::exists(dir / "config.json"));
  EXPECT_TRUE(fs::exists(dir / "audit.json"));
  EXPECT_TRUE(fs::exists(dir / "snapshots" / "snapshot_0004.csv"));
  EXPECT_EQ(read_timeseries(dir / "timeseries.ndjson").size(), res.records.size());
  fs::remove_all(dir);
}

TEST(Run, IdenticalConfigsGiveByteIdenticalOutputs) {
  const std::string text = R"({"cone": {"type": "polar", "cosine": [0.6, 0.05]}, "mesh": {"Nr": 12, "Ntheta": 16},
                               "initial": {"kind": "angular_mode", "a": 0.05, "m": 2},
                               "time": {"t_end": 0.5, "snapshot_t0": 0.125}})";
  std::vector<fs::path> dirs{scratch("det_a"), scratch("det_b")};
  for (const auto& d : dirs) {
    auto c = parse_config(text);
    c.output.directory = d.string();
    run(c);
  }
  for (const char* f : {"timeseries.ndjson", "audit.json", "snapshots/snapshot_0000.csv", "snapshots/snapshot_0003.csv"})
    EXPECT_EQ(slurp(dirs[0] / f), slurp(dirs[1] / f)) << f;
  for (const auto& d : dirs) fs::remove_all(d);
}

TEST(Run, AxisymmetricThreeDimensionalRun) {
  auto c = parse_config(R"({"n": 3, "cone": {"rho": 0.5}, "mesh": {"Nr": 16, "axisymmetric": true},
                            "time": {"t_end": 1}})");
  const auto res = run(c, false);
  const auto& last = res.records.back();
  EXPECT_EQ(last.t, 1.0);
  EXPECT_NEAR(last.psi_u_max / last.psi, 2.645751, 1e-4);
}

TEST(Run, HomotheticTrajectoryIsExact) {
  const auto traj = homothetic_trajectory(1.0, 3, 10.0, 1.0, 2.0);
  ASSERT_EQ(traj.size(), 6u);
  EXPECT_EQ(traj.back().t, 10.0);
  EXPECT_NEAR(traj.back().u, std::sqrt(61.0), 1e-14);
  for (const auto& s : traj) EXPECT_DOUBLE_EQ(s.H * s.u, 3.0);
  EXPECT_THROW(homothetic_trajectory(0.0, 2, 1.0), DomainError);
}

}  // namespace
}  // namespace mcf
