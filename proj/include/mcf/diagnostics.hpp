#pragma once

// Per-snapshot measurements of the flow's geometric estimates, and an audit
// of their persistence along a run.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "mcf/cone.hpp"
#include "mcf/errors.hpp"
#include "mcf/flow.hpp"
#include "mcf/geometry.hpp"
#include "mcf/mesh.hpp"

namespace mcf {

struct BoundaryResiduals {
  double rF2 = 0.0;  // max |<grad F^2, mu>|
  double rHS = 0.0;  // max |<grad (H/S), mu>|
  double rH = 0.0;   // max |<grad H, mu> + H A^Sigma(nu, nu)|
};

struct DiagnosticsRecord {
  double t = 0.0;
  int n = 2;
  double cap_area = 0.0;  // area of the u = 1 surface on the same mesh
  double F2_2nt_min = 0.0, F2_2nt_max = 0.0;
  double HF_min = 0.0, HF_max = 0.0;
  double HSF2_min = 0.0, HSF2_max = 0.0;  // (H/S) F^2
  double J_max = 0.0;
  double H_min = 0.0;
  double area = 0.0;
  double psi = 0.0;  // area^{-1/n}
  double psi_u_min = 0.0, psi_u_max = 0.0;
  double osc_psi_u = 0.0;
  double mean_HF = 0.0;  // area-weighted
  double integral_residual = 0.0;
  double interior_A2F2_max = 0.0;
  BoundaryResiduals boundary;
  ParabolicityReport parabolicity;
};

namespace detail {

struct NodalGeometry {
  std::vector<double> F2, H_over_S, H;
};

template <class Mesh>
BoundaryResiduals boundary_residuals_from(const Field<Mesh>& f, const NodalGeometry& g) {
  constexpr int N = Mesh::dim;
  const auto& m = *f.mesh;
  BoundaryResiduals r;
  for (int b = 0; b < m.boundary_count(); ++b) {
    const int k = m.boundary_node(b);
    const auto& bs = m.boundary(b);
    const auto jet = m.jet(f, k);
    const double mu_norm = std::sqrt(bs.w.dot(metric(jet) * bs.w));
    auto conormal_derivative = [&](const std::vector<double>& values) {
      return m.boundary_gradient(values, b).dot(bs.w) / mu_norm;
    };
    r.rF2 = std::max(r.rF2, std::abs(conormal_derivative(g.F2)));
    r.rHS = std::max(r.rHS, std::abs(conormal_derivative(g.H_over_S)));
    const double a_sigma =
        sigma_A_nu_nu<N>(m.spec(), bs.x, jet.u, normal(jet), std::numeric_limits<double>::infinity());
    r.rH = std::max(r.rH, std::abs(conormal_derivative(g.H) + g.H[k] * a_sigma));
  }
  return r;
}

template <class Mesh>
double unit_cap_area(const Mesh& m) {
  constexpr int N = Mesh::dim;
  double area = 0.0;
  for (int k = 0; k < m.size(); ++k) {
    Jet<N> jet;
    jet.x = m.x(k);
    area += m.weight(k) * std::sqrt(metric(jet).determinant());
  }
  return area;
}

}  // namespace detail

/// Conormal derivatives at the boundary nodes from one-sided stencils in the
/// mesh's normal coordinate; mu is w normalised in the surface metric.
template <class Mesh>
BoundaryResiduals boundary_residuals(const Field<Mesh>& field) {
  const Field<Mesh> f = field.closed ? field : apply_neumann(field);
  const auto& m = *f.mesh;
  detail::NodalGeometry g;
  g.F2.resize(m.size());
  g.H_over_S.resize(m.size());
  g.H.resize(m.size());
  m.for_each_jet(f, [&](int k, const auto& jet) {
    const auto geo = node_geometry(jet);
    g.F2[k] = geo.F2;
    g.H_over_S[k] = geo.H / geo.S;
    g.H[k] = geo.H;
  });
  return detail::boundary_residuals_from(f, g);
}

/// Measures every tracked estimate on one snapshot. interior_fraction selects
/// the ray-cone {s <= fraction} used for the interior curvature bound.
template <class Mesh>
DiagnosticsRecord record(const Field<Mesh>& field, double interior_fraction = 0.5) {
  constexpr int N = Mesh::dim;
  const Field<Mesh> f = field.closed ? field : apply_neumann(field);
  const auto& m = *f.mesh;
  const double inf = std::numeric_limits<double>::infinity();

  DiagnosticsRecord r;
  r.t = f.t;
  r.n = N;
  r.cap_area = detail::unit_cap_area(m);
  r.F2_2nt_min = r.HF_min = r.HSF2_min = r.H_min = inf;
  r.F2_2nt_max = r.HF_max = r.HSF2_max = r.J_max = -inf;

  detail::NodalGeometry g;
  g.F2.resize(m.size());
  g.H_over_S.resize(m.size());
  g.H.resize(m.size());
  double hs_integral = 0.0, hf_integral = 0.0;
  const double two_nt = 2.0 * N * f.t;

  m.for_each_jet(f, [&](int k, const Jet<N>& jet) {
    const auto geo = node_geometry(jet);
    const double F = jet.u;
    const double dmu = m.weight(k) * std::sqrt(geo.metric.determinant());
    g.F2[k] = geo.F2;
    g.H_over_S[k] = geo.H / geo.S;
    g.H[k] = geo.H;

    r.F2_2nt_min = std::min(r.F2_2nt_min, geo.F2 - two_nt);
    r.F2_2nt_max = std::max(r.F2_2nt_max, geo.F2 - two_nt);
    r.HF_min = std::min(r.HF_min, geo.H * F);
    r.HF_max = std::max(r.HF_max, geo.H * F);
    const double hsf2 = geo.H / geo.S * geo.F2;
    r.HSF2_min = std::min(r.HSF2_min, hsf2);
    r.HSF2_max = std::max(r.HSF2_max, hsf2);
    r.J_max = std::max(r.J_max, geo.J);
    r.H_min = std::min(r.H_min, geo.H);
    if (m.in_interior(k, interior_fraction)) {
      r.interior_A2F2_max = std::max(r.interior_A2F2_max, geo.A2 * geo.F2);
    }
    r.area += dmu;
    hs_integral += geo.H * geo.S * dmu;
    hf_integral += geo.H * F * dmu;
    r.parabolicity.add(jet.u, geo.v);
  });

  r.psi = std::pow(r.area, -1.0 / N);
  const auto [lo, hi] = std::minmax_element(f.u.begin(), f.u.end());
  r.psi_u_min = r.psi * *lo;
  r.psi_u_max = r.psi * *hi;
  r.osc_psi_u = r.psi_u_max - r.psi_u_min;
  r.mean_HF = hf_integral / r.area;
  r.integral_residual = std::abs(hs_integral - N * r.area) / r.area;
  r.boundary = detail::boundary_residuals_from(f, g);
  return r;
}

// ---------------------------------------------------------------------------
// Audit

struct AuditTolerances {
  double envelope = 1e-6;        // relative to max(1, |F^2 - 2nt|)
  double hull_per_n = 1e-3;      // hull slack is hull_per_n * n
  double j_bound = 1e-6;
  double mean_convexity = 1e-6;
  double osc_t0 = 1.0;           // osc(psi u) sampled at osc_t0 * osc_factor^k
  double osc_factor = 4.0;
  double fit_t_min = -1.0;       // negative: last two decades of the run
  double fit_t_max = -1.0;
  double fit_r2_min = 0.9;
};

struct AuditCheck {
  std::string name;
  bool passed = true;
  double worst_margin = 0.0;  // >= 0 when passed
  std::optional<double> offending_t;
  std::string detail;
};

struct LogFit {
  bool performed = false;
  double b = 0.0;
  double coefficient = 0.0;  // 1/J ~ coefficient * log(b + 2nt)
  double r2 = 0.0;
  double t_min = 0.0, t_max = 0.0;
  int samples = 0;
};

struct AuditReport {
  std::vector<AuditCheck> checks;
  LogFit fit;

  bool passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed; });
  }
  const AuditCheck& check(const std::string& name) const {
    for (const auto& c : checks)
      if (c.name == name) return c;
    throw ContractViolation("no audit check named " + name);
  }
};

namespace detail {

class CheckBuilder {
 public:
  explicit CheckBuilder(std::string name) { c_.name = std::move(name); c_.worst_margin = std::numeric_limits<double>::infinity(); }

  /// margin >= 0 passes; the smallest margin and its time are kept.
  void observe(double margin, double t) {
    if (margin < c_.worst_margin) {
      c_.worst_margin = margin;
      if (margin < 0.0) c_.offending_t = t;
    }
    if (margin < 0.0) c_.passed = false;
  }

  AuditCheck finish(std::string detail = {}) {
    if (c_.worst_margin == std::numeric_limits<double>::infinity()) c_.worst_margin = 0.0;
    c_.detail = std::move(detail);
    return c_;
  }

 private:
  AuditCheck c_;
};

/// Least squares of y = a log(b + x) over b on a log grid; returns the best.
inline LogFit fit_inverse_log(const std::vector<double>& x, const std::vector<double>& y) {
  LogFit best;
  best.performed = true;
  best.samples = static_cast<int>(x.size());
  best.r2 = -std::numeric_limits<double>::infinity();
  double mean = 0.0;
  for (double v : y) mean += v;
  mean /= y.size();
  double ss_tot = 0.0;
  for (double v : y) ss_tot += (v - mean) * (v - mean);
  for (int e = -40; e <= 120; ++e) {
    const double b = std::pow(10.0, e / 10.0);
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double l = std::log(b + x[i]);
      sxy += l * y[i];
      sxx += l * l;
    }
    const double a = sxy / sxx;
    double ss_res = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double d = y[i] - a * std::log(b + x[i]);
      ss_res += d * d;
    }
    const double r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : (ss_res == 0.0 ? 1.0 : 0.0);
    if (r2 > best.r2) {
      best.r2 = r2;
      best.b = b;
      best.coefficient = a;
    }
  }
  return best;
}

/// osc(psi u) at or below this is roundoff: the surface is the soliton.
inline constexpr double kOscFloor = 1e-10;

inline bool on_geometric_grid(double t, double t0, double factor) {
  if (t < t0 * (1.0 - 1e-12)) return false;
  const double k = std::log(t / t0) / std::log(factor);
  return std::abs(k - std::round(k)) < 1e-9;
}

}  // namespace detail

/// Checks on a run's records:
///  envelope        max(F^2-2nt) non-increasing, min non-decreasing
///  hsf2_hull       (H/S)F^2 inside its initial hull
///  j_bound         max J <= max(max J(0), n-1)
///  mean_convexity  min H >= 0 if initially so
///  hf_hull         HF inside the hull implied by hsf2_hull and j_bound
///  psi_band        psi F inside the band implied by envelope and j_bound
///  mean_hf         n / sqrt(1 + max J) <= mean HF <= n on mean-convex records
///  osc_decay       osc(psi u) strictly decreasing on the geometric samples
///  j_log_fit       1/max J fitted by a log(b + 2nt); needs R^2 >= fit_r2_min,
///                  skipped when the window is converged to roundoff or holds
///                  fewer than three records
inline AuditReport audit(const std::vector<DiagnosticsRecord>& records,
                         const AuditTolerances& tol = {}) {
  if (records.size() < 2) throw ContractViolation("audit needs at least two records");
  const auto& r0 = records.front();
  const int n = r0.n;
  AuditReport rep;

  {
    // Against the running extremes, so slow drifts accumulate.
    detail::CheckBuilder c("envelope");
    double best_max = r0.F2_2nt_max, best_min = r0.F2_2nt_min;
    for (std::size_t i = 1; i < records.size(); ++i) {
      const auto& b = records[i];
      c.observe(tol.envelope - (b.F2_2nt_max - best_max) / std::max(1.0, std::abs(best_max)), b.t);
      c.observe(tol.envelope - (best_min - b.F2_2nt_min) / std::max(1.0, std::abs(best_min)), b.t);
      best_max = std::min(best_max, b.F2_2nt_max);
      best_min = std::max(best_min, b.F2_2nt_min);
    }
    rep.checks.push_back(c.finish());
  }

  const double hull_tol = tol.hull_per_n * n;
  {
    detail::CheckBuilder c("hsf2_hull");
    for (const auto& r : records) {
      c.observe(hull_tol - (r0.HSF2_min - r.HSF2_min), r.t);
      c.observe(hull_tol - (r.HSF2_max - r0.HSF2_max), r.t);
    }
    std::ostringstream os;
    os << "initial hull [" << r0.HSF2_min << ", " << r0.HSF2_max << "]";
    rep.checks.push_back(c.finish(os.str()));
  }

  const double j_cap = std::max(r0.J_max, static_cast<double>(n - 1));
  {
    detail::CheckBuilder c("j_bound");
    for (const auto& r : records) c.observe(j_cap + tol.j_bound - r.J_max, r.t);
    rep.checks.push_back(c.finish("bound " + std::to_string(j_cap)));
  }

  {
    detail::CheckBuilder c("mean_convexity");
    if (r0.H_min >= 0.0) {
      for (const auto& r : records) c.observe(r.H_min + tol.mean_convexity, r.t);
    }
    rep.checks.push_back(c.finish(r0.H_min >= 0.0 ? "" : "not applicable: min H(0) < 0"));
  }

  {
    // HF = (H/S)F^2 sqrt(1 + J)
    const double stretch = std::sqrt(1.0 + j_cap);
    const double lo = r0.HSF2_min >= 0.0 ? r0.HSF2_min : r0.HSF2_min * stretch;
    const double hi = r0.HSF2_max >= 0.0 ? r0.HSF2_max * stretch : r0.HSF2_max;
    detail::CheckBuilder c("hf_hull");
    for (const auto& r : records) {
      c.observe(r.HF_min - (lo - hull_tol), r.t);
      c.observe(hi + hull_tol - r.HF_max, r.t);
    }
    std::ostringstream os;
    os << "band [" << lo << ", " << hi << "]";
    rep.checks.push_back(c.finish(os.str()));
  }

  {
    // Area between the two enveloping solitons' caps, thinned by (1+J)^{-1/2}.
    detail::CheckBuilder c("psi_band");
    const double c1 = r0.F2_2nt_min, c2 = r0.F2_2nt_max;
    for (const auto& r : records) {
      const double R = std::pow(r.cap_area, -1.0 / n);
      const double a = c1 + 2.0 * n * r.t, b = c2 + 2.0 * n * r.t;
      if (!(a > 0.0)) continue;
      const double lo = R * std::sqrt(a / b);
      const double hi = R * std::sqrt(b / a) * std::pow(1.0 + j_cap, 0.5 / n);
      const double slack = tol.envelope * R;
      c.observe(r.psi_u_min - lo + slack, r.t);
      c.observe(hi + slack - r.psi_u_max, r.t);
    }
    rep.checks.push_back(c.finish());
  }

  {
    // With H >= 0: HF <= HS = HF sqrt(1 + J) pointwise and int HS = n area.
    detail::CheckBuilder c("mean_hf");
    for (const auto& r : records) {
      if (r.H_min < 0.0) continue;
      c.observe(r.mean_HF - (n / std::sqrt(1.0 + r.J_max) - hull_tol), r.t);
      c.observe(n + hull_tol - r.mean_HF, r.t);
    }
    rep.checks.push_back(c.finish());
  }

  {
    detail::CheckBuilder c("osc_decay");
    const DiagnosticsRecord* prev = nullptr;
    int samples = 0;
    for (const auto& r : records) {
      if (!detail::on_geometric_grid(r.t, tol.osc_t0, tol.osc_factor)) continue;
      ++samples;
      if (prev) {
        // Strict decrease, unless the oscillation is already at roundoff level.
        const double drop = prev->osc_psi_u - r.osc_psi_u;
        if (prev->osc_psi_u <= detail::kOscFloor) {
          c.observe(detail::kOscFloor - r.osc_psi_u, r.t);
        } else {
          c.observe(drop > 0.0 ? drop : drop - std::numeric_limits<double>::min(), r.t);
        }
      }
      prev = &r;
    }
    rep.checks.push_back(c.finish(std::to_string(samples) + " geometric samples"));
  }

  {
    const double t_end = records.back().t;
    const double t_max = tol.fit_t_max > 0.0 ? tol.fit_t_max : t_end;
    const double t_min = tol.fit_t_min > 0.0 ? tol.fit_t_min : t_max / 100.0;
    std::vector<double> x, y;
    bool degenerate = true;
    for (const auto& r : records) {
      if (r.t < t_min * (1 - 1e-12) || r.t > t_max * (1 + 1e-12)) continue;
      if (r.J_max != 0.0 && r.osc_psi_u > detail::kOscFloor) degenerate = false;
      x.push_back(2.0 * n * r.t);
      y.push_back(1.0 / std::max(r.J_max, 1e-300));
    }
    detail::CheckBuilder c("j_log_fit");
    std::ostringstream os;
    if (degenerate) {
      os << "converged to roundoff on the fit window; no decay to fit";
    } else if (x.size() < 3) {
      os << "not evaluated: only " << x.size() << " records in the fit window";
    } else {
      rep.fit = detail::fit_inverse_log(x, y);
      rep.fit.t_min = t_min;
      rep.fit.t_max = t_max;
      c.observe(rep.fit.r2 - tol.fit_r2_min, t_end);
      if (!(rep.fit.coefficient > 0.0)) c.observe(-1.0, t_end);
      os << "1/J = " << rep.fit.coefficient << " log(" << rep.fit.b << " + 2nt), R^2 = " << rep.fit.r2;
    }
    rep.checks.push_back(c.finish(os.str()));
  }
  return rep;
}

}  // namespace mcf
