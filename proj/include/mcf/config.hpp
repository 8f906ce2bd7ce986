#pragma once

// Run configuration: strict JSON parsing, validation that reports every
// violation at once, and construction of the initial graph function.

#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mcf/cone.hpp"
#include "mcf/errors.hpp"
#include "mcf/flow.hpp"
#include "mcf/geometry.hpp"
#include "mcf/mesh.hpp"

namespace mcf {

struct ConeConfig {
  std::string type = "round";  // round | polar
  double rho = 0.5;
  std::vector<double> cosine;  // polar: rho(theta) = sum c_k cos(k theta)
};

struct MeshConfig {
  int nr = 64;
  int ntheta = 64;
  bool axisymmetric = false;
};

struct TimeConfig {
  double t_end = 100.0;
  double safety = 0.25;
  double dt_min = 1e-14;
  double dt_max = std::numeric_limits<double>::infinity();
  double snapshot_t0 = 1.0;
  double snapshot_factor = 2.0;
};

struct InitialConfig {
  std::string kind = "constant";  // constant | radial_bump | angular_mode
  double k = 1.0;
  double a = 0.0;
  int m = 2;
};

struct OutputConfig {
  std::string directory = "out";
  std::vector<std::string> formats{"snapshot", "timeseries", "audit"};

  bool wants(const std::string& f) const {
    return std::find(formats.begin(), formats.end(), f) != formats.end();
  }
};

struct RunConfig {
  int n = 2;
  ConeConfig cone;
  MeshConfig mesh;
  TimeConfig time;
  InitialConfig initial;
  double interior_fraction = 0.5;
  OutputConfig output;

  ConeSpec cone_spec() const {
    return cone.type == "polar" ? ConeSpec::polar_graph(cone.cosine) : ConeSpec::round(cone.rho, n);
  }

  StepControl step_control() const {
    StepControl c;
    c.safety = time.safety;
    c.dt_min = time.dt_min;
    c.dt_max = time.dt_max;
    c.t_end = time.t_end;
    c.snapshot_t0 = time.snapshot_t0;
    c.snapshot_factor = time.snapshot_factor;
    return c;
  }
};

/// Thrown with every violation found, one per line of what().
struct ConfigViolations : ConfigError {
  std::vector<std::string> violations;
  explicit ConfigViolations(std::vector<std::string> v)
      : ConfigError(join(v)), violations(std::move(v)) {}

 private:
  static std::string join(const std::vector<std::string>& v) {
    std::string s = "invalid configuration:";
    for (const auto& e : v) s += "\n  " + e;
    return s;
  }
};

namespace detail {

class ConfigReader {
 public:
  std::vector<std::string> errors;

  /// Records keys of obj not in allowed.
  void strict(const nlohmann::json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) {
      errors.push_back(where + ": expected an object");
      return;
    }
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [key, _] : obj.items())
      if (!ok.count(key)) errors.push_back(where + ": unknown key '" + key + "'");
  }

  template <class T>
  void get(const nlohmann::json& obj, const char* key, const std::string& where, T& out) {
    if (!obj.is_object() || !obj.contains(key)) return;
    try {
      const auto& v = obj.at(key);
      if constexpr (std::is_same_v<T, int>) {
        if (!v.is_number_integer()) throw std::invalid_argument("expected an integer");
      } else if constexpr (std::is_same_v<T, double>) {
        if (v.is_string() && (v == "inf" || v == "infinity")) {
          out = std::numeric_limits<double>::infinity();
          return;
        }
        if (!v.is_number()) throw std::invalid_argument("expected a number");
      } else if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) throw std::invalid_argument("expected a boolean");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) throw std::invalid_argument("expected a string");
      }
      out = v.get<T>();
    } catch (const std::exception& e) {
      errors.push_back(where + "." + key + ": " + e.what());
    }
  }

  void require(bool cond, const std::string& msg) {
    if (!cond) errors.push_back(msg);
  }
};

}  // namespace detail

/// Parses and validates the structure of a run configuration. Missing keys
/// take defaults; unknown keys and invariant violations are all collected
/// into one ConfigViolations.
inline RunConfig parse_config_structure(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigViolations({std::string("malformed JSON: ") + e.what()});
  }
  RunConfig c;
  detail::ConfigReader r;
  r.strict(j, "config", {"n", "cone", "mesh", "time", "initial", "interior_fraction", "output"});
  r.get(j, "n", "config", c.n);
  r.get(j, "interior_fraction", "config", c.interior_fraction);

  if (j.contains("cone")) {
    const auto& o = j["cone"];
    r.strict(o, "cone", {"type", "rho", "cosine"});
    r.get(o, "type", "cone", c.cone.type);
    r.get(o, "rho", "cone", c.cone.rho);
    r.get(o, "cosine", "cone", c.cone.cosine);
  }
  if (j.contains("mesh")) {
    const auto& o = j["mesh"];
    r.strict(o, "mesh", {"Nr", "Ntheta", "axisymmetric"});
    r.get(o, "Nr", "mesh", c.mesh.nr);
    r.get(o, "Ntheta", "mesh", c.mesh.ntheta);
    r.get(o, "axisymmetric", "mesh", c.mesh.axisymmetric);
  }
  if (j.contains("time")) {
    const auto& o = j["time"];
    r.strict(o, "time", {"t_end", "safety", "dt_min", "dt_max", "snapshot_t0", "snapshot_factor"});
    r.get(o, "t_end", "time", c.time.t_end);
    r.get(o, "safety", "time", c.time.safety);
    r.get(o, "dt_min", "time", c.time.dt_min);
    r.get(o, "dt_max", "time", c.time.dt_max);
    r.get(o, "snapshot_t0", "time", c.time.snapshot_t0);
    r.get(o, "snapshot_factor", "time", c.time.snapshot_factor);
  }
  if (j.contains("initial")) {
    const auto& o = j["initial"];
    r.strict(o, "initial", {"kind", "k", "a", "m"});
    r.get(o, "kind", "initial", c.initial.kind);
    r.get(o, "k", "initial", c.initial.k);
    r.get(o, "a", "initial", c.initial.a);
    r.get(o, "m", "initial", c.initial.m);
  }
  if (j.contains("output")) {
    const auto& o = j["output"];
    r.strict(o, "output", {"directory", "formats"});
    r.get(o, "directory", "output", c.output.directory);
    r.get(o, "formats", "output", c.output.formats);
  }

  r.require(c.n >= 2, "n must be at least 2");
  if (c.cone.type == "round") {
    r.require(c.cone.rho > 0.0 && c.cone.rho < 1.0, "cross-section must lie in the open unit ball (cone.rho)");
  } else if (c.cone.type == "polar") {
    r.require(c.n == 2, "polar cones need n = 2");
    r.require(!c.cone.cosine.empty(), "polar cones need cone.cosine coefficients");
    if (!c.cone.cosine.empty() && c.n == 2) {
      try {
        c.cone_spec();
      } catch (const DomainError& e) {
        r.errors.push_back(e.what());
      }
    }
  } else {
    r.errors.push_back("cone.type must be 'round' or 'polar'");
  }

  r.require(c.mesh.nr >= 8, "mesh.Nr must be at least 8");
  if (!c.mesh.axisymmetric) {
    r.require(c.mesh.ntheta >= 8 && c.mesh.ntheta % 2 == 0, "mesh.Ntheta must be even and at least 8");
    r.require(c.n == 2, "n >= 3 requires mesh.axisymmetric = true");
  } else {
    r.require(c.cone.type == "round", "axisymmetric runs need a round cone");
    r.require(c.initial.kind != "angular_mode", "axisymmetric runs need radial initial data");
    r.require(c.n <= 4, "axisymmetric runs support n <= 4");
  }

  r.require(c.time.t_end > 0.0, "time.t_end must be positive");
  r.require(c.time.safety > 0.0 && c.time.safety <= 1.0, "time.safety must lie in (0,1]");
  r.require(c.time.dt_min > 0.0 && c.time.dt_min <= c.time.dt_max, "need 0 < time.dt_min <= time.dt_max");
  r.require(c.time.snapshot_t0 > 0.0, "time.snapshot_t0 must be positive");
  r.require(c.time.snapshot_factor > 1.0, "time.snapshot_factor must exceed 1");

  const std::set<std::string> kinds{"constant", "radial_bump", "angular_mode"};
  r.require(kinds.count(c.initial.kind) == 1,
            "initial.kind must be one of constant, radial_bump, angular_mode");
  r.require(c.initial.k > 0.0, "initial.k must be positive");
  r.require(std::isfinite(c.initial.a), "initial.a must be finite");
  r.require(c.initial.m >= 1, "initial.m must be at least 1");

  r.require(c.interior_fraction > 0.0 && c.interior_fraction <= 1.0, "interior_fraction must lie in (0,1]");
  const std::set<std::string> formats{"snapshot", "timeseries", "audit"};
  for (const auto& f : c.output.formats)
    r.require(formats.count(f) == 1, "output.formats: unknown format '" + f + "'");

  if (!r.errors.empty()) throw ConfigViolations(r.errors);
  return c;
}

/// Initial graph function u0(x). With s = |x| / rho(theta):
///   constant       k
///   radial_bump    k + a cos(pi s)
///   angular_mode   k + a (s^m - m s^{m+2} / (m+2)) cos(m theta)
/// Both profiles have zero s-derivative at s = 1, so on round cones they meet
/// the Neumann condition exactly.
template <int N>
std::function<double(const ChartPoint<N>&)> initial_function(const RunConfig& c) {
  const ConeSpec spec = c.cone_spec();
  const InitialConfig ini = c.initial;
  return [spec, ini](const ChartPoint<N>& x) {
    const double theta = N == 2 ? std::atan2(x[1], x[0]) : 0.0;
    const double s = x.norm() / spec.radius(theta);
    if (ini.kind == "radial_bump") return ini.k + ini.a * std::cos(std::numbers::pi * s);
    if (ini.kind == "angular_mode") {
      const double m = ini.m;
      const double profile = std::pow(s, m) - m * std::pow(s, m + 2) / (m + 2);
      return ini.k + ini.a * profile * std::cos(m * theta);
    }
    return ini.k;
  };
}

/// Closed initial field; throws SpacelikeViolation naming the first node
/// where v^2 <= 0.
template <class Mesh>
Field<Mesh> initial_field(const RunConfig& c, std::shared_ptr<const Mesh> mesh) {
  constexpr int N = Mesh::dim;
  auto f = apply_neumann(sample_field(mesh, initial_function<N>(c)));
  for (int k = 0; k < mesh->size(); ++k) {
    if (!(f.u[k] > 0.0)) {
      std::ostringstream os;
      os << "initial data not spacelike at node " << k << ": u = " << f.u[k] << " <= 0";
      throw SpacelikeViolation(os.str());
    }
  }
  mesh->for_each_jet(f, [&](int k, const Jet<N>& jet) {
    try {
      detail::chart_scalars(jet);
    } catch (const SpacelikeViolation&) {
      std::ostringstream os;
      os << "initial data not spacelike at node " << k << ": " << detail::describe(jet);
      throw SpacelikeViolation(os.str());
    }
  });
  return f;
}

inline std::shared_ptr<const PolarMesh> polar_mesh_for(const RunConfig& c) {
  return build_mesh(c.cone_spec(), c.mesh.nr, c.mesh.ntheta);
}

/// Calls fn with the configured mesh: PolarMesh for 2-D runs, RadialMesh<n>
/// for axisymmetric runs.
template <class Fn>
decltype(auto) with_mesh(const RunConfig& c, Fn&& fn) {
  if (!c.mesh.axisymmetric) return fn(polar_mesh_for(c));
  switch (c.n) {
    case 2: return fn(build_radial_mesh<2>(c.cone_spec(), c.mesh.nr));
    case 3: return fn(build_radial_mesh<3>(c.cone_spec(), c.mesh.nr));
    case 4: return fn(build_radial_mesh<4>(c.cone_spec(), c.mesh.nr));
    default: throw ConfigError("axisymmetric runs support n <= 4");
  }
}

/// Full parse: structure, then spacelike validation of the initial data on
/// the configured mesh.
inline RunConfig parse_config(const std::string& text) {
  RunConfig c = parse_config_structure(text);
  with_mesh(c, [&](auto mesh) {
    initial_field(c, mesh);
    return 0;
  });
  return c;
}

inline nlohmann::json to_json(const RunConfig& c) {
  nlohmann::json j;
  j["n"] = c.n;
  j["cone"] = {{"type", c.cone.type}};
  if (c.cone.type == "polar") {
    j["cone"]["cosine"] = c.cone.cosine;
  } else {
    j["cone"]["rho"] = c.cone.rho;
  }
  j["mesh"] = {{"Nr", c.mesh.nr}, {"Ntheta", c.mesh.ntheta}, {"axisymmetric", c.mesh.axisymmetric}};
  j["time"] = {{"t_end", c.time.t_end},         {"safety", c.time.safety},
               {"dt_min", c.time.dt_min},       {"snapshot_t0", c.time.snapshot_t0},
               {"snapshot_factor", c.time.snapshot_factor}};
  if (std::isfinite(c.time.dt_max)) {
    j["time"]["dt_max"] = c.time.dt_max;
  } else {
    j["time"]["dt_max"] = "inf";
  }
  j["initial"] = {{"kind", c.initial.kind}, {"k", c.initial.k}, {"a", c.initial.a}, {"m", c.initial.m}};
  j["interior_fraction"] = c.interior_fraction;
  j["output"] = {{"directory", c.output.directory}, {"formats", c.output.formats}};
  return j;
}

}  // namespace mcf
