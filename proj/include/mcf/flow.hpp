#pragma once

// Graphical mean curvature flow inside the cone:
//
//   du/dt = v H sqrt(1-|x|^2) / u
//         = g^{ij} D_ij u + (n+1)/u - (u/(1-|x|^2) + 2 Du.x) / v^2
//
// advanced with the explicit midpoint rule. The diffusion tensor g^{ij}
// scales like 1/u^2, so the stable step grows like u^2 ~ t and geometric
// horizons stay affordable.

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include "mcf/errors.hpp"
#include "mcf/geometry.hpp"
#include "mcf/mesh.hpp"

namespace mcf {

struct StepControl {
  double safety = 0.25;
  double dt_min = 1e-14;
  double dt_max = std::numeric_limits<double>::infinity();
  double t_end = 1.0;
  double snapshot_t0 = 1.0;      // first snapshot after t = 0
  double snapshot_factor = 2.0;  // t_k = t0 * factor^k
  int max_retries = 10;

  void validate() const {
    if (!(safety > 0.0 && safety <= 1.0)) throw DomainError("safety must lie in (0,1]");
    if (!(dt_min > 0.0 && dt_min <= dt_max)) throw DomainError("need 0 < dt_min <= dt_max");
    if (!(snapshot_factor > 1.0)) throw DomainError("snapshot_factor must exceed 1");
    if (!(snapshot_t0 > 0.0)) throw DomainError("snapshot_t0 must be positive");
  }
};

/// Uniform parabolicity is equivalent to bounding max{1/v^2, 1/u^2, u^2}.
struct ParabolicityReport {
  double min_v = std::numeric_limits<double>::infinity();
  double min_u = std::numeric_limits<double>::infinity();
  double max_u = 0.0;

  double max_inv_v2() const { return 1.0 / (min_v * min_v); }
  double max_inv_u2() const { return 1.0 / (min_u * min_u); }
  double max_u2() const { return max_u * max_u; }
  double bound() const { return std::max({max_inv_v2(), max_inv_u2(), max_u2()}); }

  void add(double u, double v) {
    min_v = std::min(min_v, v);
    min_u = std::min(min_u, u);
    max_u = std::max(max_u, u);
  }

  void merge(const ParabolicityReport& o) {
    min_v = std::min(min_v, o.min_v);
    min_u = std::min(min_u, o.min_u);
    max_u = std::max(max_u, o.max_u);
  }

  std::string str() const {
    std::ostringstream os;
    os << "max 1/v^2 = " << max_inv_v2() << ", max 1/u^2 = " << max_inv_u2()
       << ", max u^2 = " << max_u2() << ", min v = " << min_v << ", min u = " << min_u;
    return os.str();
  }
};

/// Right-hand side of the graph equation at one jet, together with what the
/// step-size control needs.
template <int N>
struct PointSpeed {
  double speed = 0.0;
  double v = 0.0;
  ChartMatrix<N> ginv;
};

template <int N>
PointSpeed<N> point_speed(const Jet<N>& jet) {
  if (!jet.d2u) throw ContractViolation("point_speed: jet carries no Hessian");
  const auto c = detail::chart_scalars(jet);
  PointSpeed<N> p;
  p.ginv = detail::inverse_metric(jet, c);
  p.v = std::sqrt(c.v2);
  const double u = jet.u;
  p.speed = p.ginv.cwiseProduct(*jet.d2u).sum() + (N + 1) / u -
            (u / c.w + 2.0 * c.du_x) / c.v2;
  return p;
}

/// Mean curvature recovered from the speed: H = (du/dt) u / (v sqrt(1-|x|^2)).
template <int N>
double mean_curvature_from_speed(const Jet<N>& jet, double speed) {
  const double w = 1.0 - jet.x.squaredNorm();
  return speed * jet.u / (gradient_function_v(jet) * std::sqrt(w));
}

/// One sweep over the nodes: speeds, the stable step and the parabolicity
/// quantities. Spacelike failures are rethrown with the node location.
struct RhsEvaluation {
  std::vector<double> speed;
  double max_stiffness = 0.0;
  ParabolicityReport parabolicity;
};

template <class Mesh>
RhsEvaluation evaluate_rhs(const Field<Mesh>& f, bool step_control = true) {
  const auto& m = *f.mesh;
  RhsEvaluation out;
  out.speed.resize(m.size());
  m.for_each_jet(f, [&](int k, const auto& jet) {
    try {
      const auto p = point_speed(jet);
      out.speed[k] = p.speed;
      if (step_control) {
        out.max_stiffness = std::max(out.max_stiffness, m.stiffness(k, p.ginv));
        out.parabolicity.add(jet.u, p.v);
      }
    } catch (const SpacelikeViolation& e) {
      std::ostringstream os;
      os << "node " << k << " at t = " << f.t << ": " << e.what();
      throw SpacelikeViolation(os.str());
    }
  });
  return out;
}

template <class Mesh>
std::vector<double> rhs(const Field<Mesh>& f) {
  return evaluate_rhs(f, false).speed;
}

/// Per-node H computed from the speed identity.
template <class Mesh>
std::vector<double> H_from_rhs(const Field<Mesh>& f) {
  const auto& m = *f.mesh;
  std::vector<double> h(m.size());
  m.for_each_jet(f, [&](int k, const auto& jet) {
    h[k] = mean_curvature_from_speed(jet, point_speed(jet).speed);
  });
  return h;
}

template <class Mesh>
ParabolicityReport parabolicity(const Field<Mesh>& f) {
  return evaluate_rhs(f).parabolicity;
}

namespace detail {

inline double clamp_dt(double raw, const StepControl& ctl, const ParabolicityReport& rep) {
  if (raw < ctl.dt_min) {
    std::ostringstream os;
    os << "stable step " << raw << " below dt_min " << ctl.dt_min << " (" << rep.str() << ")";
    throw StiffnessError(os.str());
  }
  return std::min(raw, ctl.dt_max);
}

inline double dt_from(const RhsEvaluation& ev, const StepControl& ctl) {
  // stiffness ~ 4 lambda / h^2, so this is safety * h^2 / lambda.
  return clamp_dt(ctl.safety * 4.0 / ev.max_stiffness, ctl, ev.parabolicity);
}

}  // namespace detail

/// safety * min_k h_k^2 / lambda_max(g^{ij}), with h_k^2 / lambda_max read off
/// the stencil's Gershgorin bound; clamped to [dt_min, dt_max].
template <class Mesh>
double stable_dt(const Field<Mesh>& f, const StepControl& ctl) {
  return detail::dt_from(evaluate_rhs(f), ctl);
}

/// Midpoint stages from a precomputed first-stage speed. Returns the closed
/// new field; throws SpacelikeViolation if a stage leaves the spacelike set.
template <class Mesh>
Field<Mesh> midpoint_step(const Field<Mesh>& f, std::vector<double> k1, double dt) {
  const auto& m = *f.mesh;
  m.filter(k1);
  Field<Mesh> half = f;
  for (int k = 0; k < m.size(); ++k) half.u[k] += 0.5 * dt * k1[k];
  half.t += 0.5 * dt;
  m.close(half);
  auto k2 = rhs(half);
  m.filter(k2);
  Field<Mesh> next = f;
  for (int k = 0; k < m.size(); ++k) {
    next.u[k] += dt * k2[k];
    if (!(next.u[k] > 0.0)) throw SpacelikeViolation("graph function became non-positive");
  }
  next.t = f.t + dt;
  m.close(next);
  return next;
}

/// Explicit two-stage midpoint step; dt = 0 is the identity.
template <class Mesh>
Field<Mesh> step(const Field<Mesh>& f, double dt) {
  if (dt == 0.0) return f;
  Field<Mesh> closed = f.closed ? f : apply_neumann(f);
  auto next = midpoint_step(closed, rhs(closed), dt);
  evaluate_rhs(next);  // spacelike check of the result
  return next;
}

/// Accepted-step bookkeeping of an adaptive integration.
struct EvolveStats {
  std::size_t steps = 0;
  std::size_t rejected = 0;
  double last_dt = 0.0;
  ParabolicityReport worst;
};

/// Advances f to ctl.t_end with adaptive dt, landing exactly on the geometric
/// snapshot times t0 * factor^k and on t_end. on_snapshot(field) is called at
/// the initial time, at every snapshot time and at t_end.
template <class Mesh, class Observer>
Field<Mesh> evolve(Field<Mesh> f, const StepControl& ctl, Observer&& on_snapshot,
                   EvolveStats* stats = nullptr) {
  ctl.validate();
  EvolveStats local;
  EvolveStats& st = stats ? *stats : local;
  f = apply_neumann(std::move(f));
  auto ev = evaluate_rhs(f);
  st.worst = ev.parabolicity;
  on_snapshot(static_cast<const Field<Mesh>&>(f));

  double next_snap = ctl.snapshot_t0;
  while (next_snap <= f.t) next_snap *= ctl.snapshot_factor;
  const double eps = 1e-12 * std::max(1.0, ctl.t_end);

  while (f.t < ctl.t_end - eps) {
    const double target = std::min(next_snap, ctl.t_end);
    double dt = std::min(detail::dt_from(ev, ctl), target - f.t);
    int attempt = 0;
    for (;;) {
      try {
        auto next = midpoint_step(f, ev.speed, dt);
        auto next_ev = evaluate_rhs(next);
        f = std::move(next);
        ev = std::move(next_ev);
        break;
      } catch (const SpacelikeViolation&) {
        if (++attempt > ctl.max_retries) throw;
        ++st.rejected;
        dt *= 0.5;
        if (dt < ctl.dt_min) throw;
      }
    }
    ++st.steps;
    st.last_dt = dt;
    st.worst.merge(ev.parabolicity);

    if (std::abs(f.t - target) <= eps) {
      f.t = target;
      on_snapshot(static_cast<const Field<Mesh>&>(f));
      if (target >= next_snap) next_snap *= ctl.snapshot_factor;
    }
  }
  return f;
}

/// The exact expanding hyperbolic solution: u(t) = sqrt(k^2 + 2 n t).
inline double homothetic_u(double k, int n, double t) { return std::sqrt(k * k + 2.0 * n * t); }

}  // namespace mcf
