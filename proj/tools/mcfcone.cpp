// mcfcone: run configured evolutions, check the acceptance criteria and
// print the exact self-similar trajectory.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "mcf/config.hpp"
#include "mcf/io.hpp"
#include "mcf/run.hpp"
#include "mcf/verify.hpp"

namespace {

std::string slurp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw mcf::IoError("cannot open " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

struct Overrides {
  std::string out;
  double t_end = -1.0;
  int resolution = 0;
  bool axisymmetric = false;
};

/// Applies command-line overrides through the JSON form so that the result
/// is validated like a file.
mcf::RunConfig load(const std::string& path, const Overrides& o) {
  nlohmann::json j = path.empty() ? mcf::to_json(mcf::RunConfig{}) : nlohmann::json::parse(slurp(path));
  if (!o.out.empty()) j["output"]["directory"] = o.out;
  if (o.t_end > 0.0) j["time"]["t_end"] = o.t_end;
  if (o.resolution > 0) {
    j["mesh"]["Nr"] = o.resolution;
    j["mesh"]["Ntheta"] = o.resolution;
  }
  if (o.axisymmetric) j["mesh"]["axisymmetric"] = true;
  return mcf::parse_config(j.dump());
}

void print_audit(const mcf::AuditReport& rep) {
  for (const auto& c : rep.checks)
    std::printf("%s %-16s %s\n", c.passed ? "[PASS]" : "[FAIL]", c.name.c_str(), c.detail.c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mean curvature flow of spacelike graphs in a cone"};
  app.require_subcommand(1);

  Overrides ov;
  std::string config_path;
  auto* run = app.add_subcommand("run", "evolve a configuration and audit the result");
  run->add_option("-c,--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);
  run->add_option("-o,--out", ov.out, "output directory");
  run->add_option("--t-end", ov.t_end, "final time");
  run->add_option("--resolution", ov.resolution, "Nr = Ntheta");
  run->add_flag("--axisymmetric", ov.axisymmetric, "use the radial mesh");

  auto* check = app.add_subcommand("check-config", "validate a configuration and print it normalised");
  check->add_option("config", config_path, "JSON run configuration")->required()->check(CLI::ExistingFile);

  mcf::VerifyOptions vopt;
  auto* verify = app.add_subcommand("verify", "evaluate the acceptance criteria");
  verify->add_option("--resolution", vopt.resolution, "Nr = Ntheta of the main runs")->check(CLI::Range(16, 512));

  double k = 1.0, t_end = 100.0;
  int n = 2;
  auto* homo = app.add_subcommand("homothetic", "print the exact self-similar trajectory as JSON lines");
  homo->add_option("-k", k, "initial height");
  homo->add_option("-n", n, "dimension");
  homo->add_option("--t-end", t_end, "final time");

  std::string series_path;
  auto* report = app.add_subcommand("report", "audit an existing timeseries");
  report->add_option("timeseries", series_path, "timeseries.ndjson")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      const auto c = load(config_path, ov);
      const auto res = mcf::run(c);
      std::printf("%zu snapshots, %ld steps, %ld rejected, output in %s\n", res.records.size(),
                  static_cast<long>(res.stats.steps), static_cast<long>(res.stats.rejected),
                  c.output.directory.c_str());
      print_audit(res.audit);
      return res.audit.passed() ? 0 : 1;
    }
    if (*check) {
      std::cout << mcf::to_json(load(config_path, {})).dump(2) << '\n';
      return 0;
    }
    if (*verify) {
      bool all = true;
      mcf::run_acceptance(vopt, [&](const mcf::CriterionResult& r) {
        std::printf("%s\n", r.line().c_str());
        std::fflush(stdout);
        all = all && r.passed;
      });
      return all ? 0 : 1;
    }
    if (*homo) {
      for (const auto& s : mcf::homothetic_trajectory(k, n, t_end))
        std::cout << nlohmann::json{{"t", s.t}, {"u", s.u}, {"H", s.H}, {"HF", s.HF}, {"J", s.J}}.dump() << '\n';
      return 0;
    }
    if (*report) {
      const auto rep = mcf::audit(mcf::read_timeseries(std::filesystem::path(series_path)));
      print_audit(rep);
      return rep.passed() ? 0 : 1;
    }
  } catch (const mcf::ConfigViolations& e) {
    std::fprintf(stderr, "invalid configuration:\n");
    for (const auto& v : e.violations) std::fprintf(stderr, "  %s\n", v.c_str());
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::fprintf(stderr, "invalid configuration: %s\n", e.what());
    return 2;
  } catch (const mcf::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
  return 0;
}
