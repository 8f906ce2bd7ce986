#pragma once

// Acceptance suite: ten numbered criteria, each evaluated on fresh runs and
// reported as one pass/fail line with the measured numbers.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "mcf/diagnostics.hpp"
#include "mcf/flow.hpp"
#include "mcf/geometry.hpp"
#include "mcf/mesh.hpp"

namespace mcf {

struct CriterionResult {
  int id = 0;
  std::string title;
  bool passed = false;
  std::string detail;

  std::string line() const {
    return std::string(passed ? "[PASS]" : "[FAIL]") + " criterion " + std::to_string(id) + " (" + title +
           "): " + detail;
  }
};

struct VerifyOptions {
  int resolution = 64;           // Nr = Ntheta of the main runs
  double homothetic_t_end = 100.0;
  double bump_t_end = 1e6;
  double bump_rho = 0.8;
  double bump_a = 0.2;
  double mean_convex_a = 0.05;
  double mean_convex_t_end = 1e4;
  double envelope_horizon = 100.0;
  double oracle_t = 10.0;
  double generic_t = 0.05;
};

namespace detail {

inline std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

inline std::string sci(double v) { return fmt("%.3e", v); }

inline auto radial_bump(double k, double a, double rho) {
  return [=](const auto& x) { return k + a * std::cos(std::numbers::pi * x.norm() / rho); };
}

struct TrackedRun {
  std::vector<DiagnosticsRecord> records;
  std::vector<double> max_rel_error;  // vs the homothetic solution, per record
  Field<PolarMesh> final_field;
  std::optional<Field<PolarMesh>> stop_field;  // field at the stop time, if requested
};

/// Evolves on a geometric snapshot grid t0 * 2^k. A stop time splits the run
/// so that the field is also available there.
template <class Init>
TrackedRun tracked_run(std::shared_ptr<const PolarMesh> mesh, Init&& init, double t_end, double safety = 0.25,
                       double stop = -1.0, bool track_homothetic = false) {
  TrackedRun out;
  StepControl ctl;
  ctl.safety = safety;
  ctl.snapshot_t0 = 1.0 / 64;
  ctl.snapshot_factor = 2.0;
  auto observe = [&](const Field<PolarMesh>& f) {
    if (!out.records.empty() && f.t == out.records.back().t) return;
    out.records.push_back(record(f));
    if (track_homothetic) {
      const double exact = homothetic_u(1.0, 2, f.t);
      double e = 0.0;
      for (double u : f.u) e = std::max(e, std::abs(u - exact) / exact);
      out.max_rel_error.push_back(e);
    }
  };
  Field<PolarMesh> f = sample_field(mesh, init);
  if (stop > 0.0 && stop < t_end) {
    ctl.t_end = stop;
    f = evolve(std::move(f), ctl, observe);
    out.stop_field = f;
  }
  ctl.t_end = t_end;
  out.final_field = evolve(std::move(f), ctl, observe);
  return out;
}

/// Largest relative breach of the running envelope extremes up to horizon.
inline double envelope_violation(const std::vector<DiagnosticsRecord>& recs, double horizon) {
  double worst = 0.0;
  double best_max = recs.front().F2_2nt_max, best_min = recs.front().F2_2nt_min;
  for (std::size_t i = 1; i < recs.size() && recs[i].t <= horizon * (1 + 1e-12); ++i) {
    worst = std::max(worst, (recs[i].F2_2nt_max - best_max) / std::max(1.0, std::abs(best_max)));
    worst = std::max(worst, (best_min - recs[i].F2_2nt_min) / std::max(1.0, std::abs(best_min)));
    best_max = std::min(best_max, recs[i].F2_2nt_max);
    best_min = std::max(best_min, recs[i].F2_2nt_min);
  }
  return worst;
}

inline const DiagnosticsRecord* record_at(const std::vector<DiagnosticsRecord>& recs, double t) {
  for (const auto& r : recs)
    if (std::abs(r.t - t) <= 1e-12 * std::max(1.0, t)) return &r;
  return nullptr;
}

}  // namespace detail

/// Runs the suite; on_result is called as each criterion completes.
inline std::vector<CriterionResult> run_acceptance(const VerifyOptions& opt,
                                                   const std::function<void(const CriterionResult&)>& on_result = {}) {
  using namespace detail;
  std::vector<CriterionResult> results;
  auto emit = [&](CriterionResult r) {
    if (on_result) on_result(r);
    results.push_back(std::move(r));
  };
  const int res = opt.resolution;
  const int half = std::max(8, res / 2);
  const int n = 2;

  // Homothetic run shared by criteria 1, 7, 8 and 9.
  const auto round_half = ConeSpec::round(0.5);
  const auto unit = [](const ChartPoint<2>&) { return 1.0; };
  const auto homo = tracked_run(build_mesh(round_half, res, res), unit, opt.homothetic_t_end, 0.25, -1.0, true);
  {
    const double worst = *std::max_element(homo.max_rel_error.begin(), homo.max_rel_error.end());
    auto final_error = [&](double safety) {
      const auto r = tracked_run(build_mesh(round_half, 16, 16), unit, opt.homothetic_t_end, safety, -1.0, true);
      return r.max_rel_error.back();
    };
    const double e1 = final_error(0.25), e2 = final_error(0.125);
    const double ratio = e1 / e2;
    CriterionResult c{1, "homothetic exactness", worst <= 1e-4 && ratio >= 3.5, ""};
    c.detail = "max-node relative error " + sci(worst) + " <= 1e-4 over " + std::to_string(homo.records.size()) +
               " snapshots to t=" + fmt("%g", opt.homothetic_t_end) + " at " + std::to_string(res) +
               "^2; dt-halving error ratio " + fmt("%.3f", ratio) + " >= 3.5 (16^2, " + sci(e1) + " -> " + sci(e2) + ")";
    emit(c);
  }

  // Bump runs shared by criteria 2-5, 7, 8 and 10.
  const auto bump_spec = ConeSpec::round(opt.bump_rho);
  const auto bump = radial_bump(1.0, opt.bump_a, opt.bump_rho);
  const auto fine = tracked_run(build_mesh(bump_spec, res, res), bump, opt.bump_t_end, 0.25, opt.oracle_t);
  const auto coarse = tracked_run(build_mesh(bump_spec, half, half), bump, opt.bump_t_end);
  const auto fine_audit = audit(fine.records);

  {
    const double vf = envelope_violation(fine.records, opt.envelope_horizon);
    const double vc = envelope_violation(coarse.records, opt.envelope_horizon);
    const double ratio = vf > 0.0 ? vc / vf : std::numeric_limits<double>::infinity();
    const bool shrink = (vc == 0.0 && vf == 0.0) || ratio >= 3.0;
    CriterionResult c{2, "envelope preservation", vf <= 1e-6 && shrink, ""};
    c.detail = "largest breach of the running F^2-2nt extremes for t <= " + fmt("%g", opt.envelope_horizon) + ": " +
               sci(vf) + " at " + std::to_string(res) + "^2 (<= 1e-6), " + sci(vc) + " at " + std::to_string(half) +
               "^2, shrink " + fmt("%.1f", ratio) + "x (>= 3); over the full run to t=" + fmt("%g", opt.bump_t_end) +
               ": " + sci(envelope_violation(fine.records, opt.bump_t_end)) + " (midpoint time error)";
    emit(c);
  }

  {
    const auto& h = fine_audit.check("hsf2_hull");
    double lo = fine.records.front().HSF2_min, hi = fine.records.front().HSF2_max;
    double run_lo = lo, run_hi = hi;
    for (const auto& r : fine.records) {
      run_lo = std::min(run_lo, r.HSF2_min);
      run_hi = std::max(run_hi, r.HSF2_max);
    }
    CriterionResult c{3, "hull preservation", h.passed, ""};
    c.detail = "(H/S)F^2 range over the run [" + fmt("%.6f", run_lo) + ", " + fmt("%.6f", run_hi) +
               "] inside initial hull [" + fmt("%.6f", lo) + ", " + fmt("%.6f", hi) + "] +- " + fmt("%g", 1e-3 * n) +
               ", worst margin " + sci(h.worst_margin);
    emit(c);
  }

  {
    const auto& jb = fine_audit.check("j_bound");
    std::vector<double> x, y;
    const double t_lo = 1e2, t_hi = std::min(1e6, opt.bump_t_end);
    double j_lo = std::numeric_limits<double>::infinity(), j_hi = 0.0;
    for (const auto& r : fine.records) {
      if (r.t < t_lo * (1 - 1e-12) || r.t > t_hi * (1 + 1e-12)) continue;
      x.push_back(2.0 * n * r.t);
      y.push_back(1.0 / r.J_max);
      j_lo = std::min(j_lo, r.J_max);
      j_hi = std::max(j_hi, r.J_max);
    }
    LogFit fit;
    bool finite = std::all_of(y.begin(), y.end(), [](double v) { return std::isfinite(v); });
    if (x.size() >= 3 && finite) fit = fit_inverse_log(x, y);
    const bool fit_ok = fit.performed && fit.r2 >= 0.9 && fit.coefficient > 0.0;
    CriterionResult c{4, "J bound and decay", jb.passed && fit_ok, ""};
    c.detail = "max J margin to max(J0, n-1) " + sci(jb.worst_margin) + (jb.passed ? " (holds)" : " (violated)") +
               "; fit of 1/max J against log(b+2nt) on t in [" + fmt("%g", t_lo) + ", " + fmt("%g", t_hi) + "], " +
               std::to_string(x.size()) + " samples, max J from " + sci(j_hi) + " down to " + sci(j_lo) + ": " +
               (fit.performed ? "R^2 = " + fmt("%.4f", fit.r2) + " (>= 0.9), a = " + sci(fit.coefficient) +
                                    ", b = " + sci(fit.b)
                              : std::string("not computable (J = 0 or too few samples)"));
    emit(c);
  }

  {
    double mf = 0.0, mc = 0.0;
    for (const auto& r : fine.records) mf = std::max(mf, r.integral_residual);
    for (const auto& r : coarse.records) mc = std::max(mc, r.integral_residual);
    const double slope = std::log2(mc / mf);
    CriterionResult c{5, "integral identity", mf <= 1e-3 && slope >= 1.7, ""};
    c.detail = "max integral residual " + sci(mf) + " at " + std::to_string(res) + "^2 (<= 1e-3), " + sci(mc) +
               " at " + std::to_string(half) + "^2, refinement slope " + fmt("%.2f", slope) + " (>= 1.7)";
    emit(c);
  }

  {
    const auto mc = tracked_run(build_mesh(bump_spec, half, half), radial_bump(1.0, opt.mean_convex_a, opt.bump_rho),
                                opt.mean_convex_t_end);
    double worst = std::numeric_limits<double>::infinity();
    for (const auto& r : mc.records) worst = std::min(worst, r.H_min);
    const double h0 = mc.records.front().H_min;
    CriterionResult c{6, "mean-convexity preservation", h0 >= 0.1 && worst >= -1e-6, ""};
    c.detail = "bump a=" + fmt("%g", opt.mean_convex_a) + " on Round(" + fmt("%g", opt.bump_rho) + "), " +
               std::to_string(half) + "^2 to t=" + fmt("%g", opt.mean_convex_t_end) + ": min H(0) = " +
               fmt("%.4f", h0) + " (>= 0.1), min H over the run " + sci(worst) + " (>= -1e-6)";
    emit(c);
  }

  {
    std::string seq;
    bool strict = true;
    double prev = std::numeric_limits<double>::infinity();
    int samples = 0;
    for (int k = 0; k <= 8; ++k) {
      const auto* r = record_at(fine.records, std::pow(4.0, k));
      if (!r) {
        strict = false;
        seq += " missing@" + fmt("%g", std::pow(4.0, k));
        continue;
      }
      ++samples;
      if (!(r->osc_psi_u < prev)) strict = false;
      prev = r->osc_psi_u;
      seq += (k ? ", " : "") + sci(r->osc_psi_u);
    }
    const double R_bump = std::pow(hyperbolic_cap_area(opt.bump_rho, n), -1.0 / n);
    const double final_psi_u = 0.5 * (fine.records.back().psi_u_min + fine.records.back().psi_u_max);
    const double rel = std::abs(final_psi_u - R_bump) / R_bump;
    const double R_half = std::pow(hyperbolic_cap_area(0.5, n), -1.0 / n);
    double homo_dev = 0.0;
    for (const auto& r : homo.records)
      homo_dev = std::max({homo_dev, std::abs(r.psi_u_min - R_half), std::abs(r.psi_u_max - R_half)});
    CriterionResult c{7, "renormalized convergence trend", strict && rel <= 0.02 && homo_dev <= 1e-3, ""};
    c.detail = "osc(psi u) at t=4^k, k=0..8: [" + seq + "] strictly decreasing: " + (strict ? "yes" : "no") +
               "; final psi u " + fmt("%.6f", final_psi_u) + " vs R " + fmt("%.6f", R_bump) + " (" +
               fmt("%.3f", 100 * rel) + "% <= 2%); homothetic |psi u - R| <= " + sci(homo_dev) + " (<= 1e-3)";
    emit(c);
  }

  {
    const double a0 = fine.records.front().interior_A2F2_max;
    double amax = 0.0, late = 0.0;
    bool late_seen = false;
    for (const auto& r : fine.records) {
      amax = std::max(amax, r.interior_A2F2_max);
      if (r.t >= 1e4 * (1 - 1e-12)) {
        late_seen = true;
        late = std::max(late, std::abs(r.interior_A2F2_max - n) / n);
      }
    }
    const double h = 1.0 / (res - 0.5);
    double homo_dev = 0.0;
    for (const auto& r : homo.records) homo_dev = std::max(homo_dev, std::abs(r.interior_A2F2_max - n));
    const bool ok = amax <= 2.0 * a0 && late_seen && late <= 0.05 && homo_dev <= h * h;
    CriterionResult c{8, "interior curvature bound", ok, ""};
    c.detail = "bump: max |A|^2F^2 " + fmt("%.4f", amax) + " <= 2 x " + fmt("%.4f", a0) +
               (late_seen ? ", relative distance to n for t >= 1e4: " + sci(late) + " (<= 5%)"
                          : std::string(", no record at t >= 1e4")) +
               "; homothetic |A|^2F^2 - n up to " + sci(homo_dev) + " (<= h^2 = " + sci(h * h) + ")";
    emit(c);
  }

  {
    BoundaryResiduals hmax;
    for (const auto& r : homo.records) {
      hmax.rF2 = std::max(hmax.rF2, r.boundary.rF2);
      hmax.rHS = std::max(hmax.rHS, r.boundary.rHS);
      hmax.rH = std::max(hmax.rH, r.boundary.rH);
    }
    const bool homo_ok = hmax.rF2 <= 1e-8 && hmax.rHS <= 1e-8 && hmax.rH <= 1e-8;

    const auto spec = ConeSpec::polar_graph({0.6, 0.05});
    auto generic = [spec](const ChartPoint<2>& x) {
      const double th = std::atan2(x[1], x[0]);
      const double s = x.norm() / spec.radius(th);
      return 1.0 + 0.1 * std::cos(std::numbers::pi * s) + 0.05 * (s * s - 0.5 * s * s * s * s) * std::cos(2 * th);
    };
    std::vector<int> sizes{std::max(8, res / 4), half, res};
    std::vector<BoundaryResiduals> gen;
    for (int m : sizes) {
      StepControl ctl;
      ctl.t_end = opt.generic_t;
      ctl.snapshot_t0 = opt.generic_t;
      gen.push_back(boundary_residuals(evolve(sample_field(build_mesh(spec, m, m), generic), ctl, [](const auto&) {})));
    }
    double min_order = std::numeric_limits<double>::infinity();
    std::string orders;
    for (std::size_t i = 0; i + 1 < gen.size(); ++i) {
      const double o1 = std::log2(gen[i].rF2 / gen[i + 1].rF2);
      const double o2 = std::log2(gen[i].rHS / gen[i + 1].rHS);
      const double o3 = std::log2(gen[i].rH / gen[i + 1].rH);
      min_order = std::min({min_order, o1, o2, o3});
      orders += (i ? "; " : "") + std::to_string(sizes[i]) + "->" + std::to_string(sizes[i + 1]) + ": " +
                fmt("%.2f", o1) + "/" + fmt("%.2f", o2) + "/" + fmt("%.2f", o3);
    }
    CriterionResult c{9, "boundary identities", homo_ok && min_order >= 1.0, ""};
    c.detail = "homothetic max residuals rF2/rHS/rH " + sci(hmax.rF2) + "/" + sci(hmax.rHS) + "/" + sci(hmax.rH) +
               " (<= 1e-8); generic data on a polar-graph cone at t=" + fmt("%g", opt.generic_t) +
               ", refinement orders rF2/rHS/rH " + orders + " (>= 1)";
    emit(c);
  }

  {
    StepControl ctl;
    ctl.t_end = opt.oracle_t;
    ctl.snapshot_t0 = 1.0 / 64;
    const auto radial = evolve(sample_field(build_radial_mesh<2>(bump_spec, res), bump), ctl, [](const auto&) {});
    const auto& polar = *fine.stop_field;
    double sup = 0.0;
    for (int i = 0; i < res; ++i)
      for (int j = 0; j < res; ++j)
        sup = std::max(sup, std::abs(polar.u[polar.mesh->index(i, j)] - radial.u[i]));
    CriterionResult c{10, "oracle agreement", sup <= 1e-3 && polar.t == opt.oracle_t && radial.t == opt.oracle_t, ""};
    c.detail = "radial Nr=" + std::to_string(res) + " vs 2-D " + std::to_string(res) + "^2 on the a=" +
               fmt("%g", opt.bump_a) + " bump at t=" + fmt("%g", opt.oracle_t) + ": sup-norm difference " + sci(sup) +
               " (<= 1e-3)";
    emit(c);
  }
  return results;
}

}  // namespace mcf
