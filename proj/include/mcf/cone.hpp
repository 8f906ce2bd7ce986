#pragma once

// The boundary cone Sigma: all rays from the origin through (S(theta), 1),
// where S is a convex closed curve (n = 2) or a round sphere (any n) inside
// the unit ball. The flow domain D is the region S encloses at height one.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "mcf/errors.hpp"
#include "mcf/geometry.hpp"

namespace mcf {

struct ConeSpec {
  enum class Kind { Round, PolarGraph };

  Kind kind = Kind::Round;
  int n = 2;
  double rho = 0.5;
  // PolarGraph: rho(theta) = c_0 + sum_{k>=1} c_k cos(k theta)
  std::vector<double> cosine;

  static ConeSpec round(double rho, int n = 2) {
    ConeSpec s;
    s.kind = Kind::Round;
    s.n = n;
    s.rho = rho;
    s.validate();
    return s;
  }

  static ConeSpec polar_graph(std::vector<double> coefficients) {
    ConeSpec s;
    s.kind = Kind::PolarGraph;
    s.n = 2;
    s.cosine = std::move(coefficients);
    s.validate();
    return s;
  }

  bool is_round() const { return kind == Kind::Round; }

  double radius(double theta) const { return series(theta, 0); }
  double radius_d1(double theta) const { return series(theta, 1); }
  double radius_d2(double theta) const { return series(theta, 2); }

  /// Throws DomainError if the cross-section leaves the open unit ball.
  void validate() const {
    if (n < 2) throw DomainError("cone dimension n must be at least 2");
    if (kind == Kind::Round) {
      if (!(rho > 0.0 && rho < 1.0)) {
        throw DomainError("cross-section must lie in the open unit ball (rho = " +
                          std::to_string(rho) + ")");
      }
      return;
    }
    if (n != 2) throw DomainError("polar-graph cross-sections are only supported for n = 2");
    if (cosine.empty()) throw DomainError("polar-graph cross-section needs at least c_0");
    for (int j = 0; j < kSamples; ++j) {
      const double r = radius(2.0 * std::numbers::pi * j / kSamples);
      if (!(r > 0.0 && r < 1.0)) {
        throw DomainError("cross-section must lie in the open unit ball (rho(theta) = " +
                          std::to_string(r) + ")");
      }
    }
  }

  static constexpr int kSamples = 4096;

 private:
  double series(double theta, int order) const {
    if (kind == Kind::Round) return order == 0 ? rho : 0.0;
    double acc = 0.0;
    for (std::size_t k = 0; k < cosine.size(); ++k) {
      const double kk = static_cast<double>(k);
      switch (order) {
        case 0: acc += cosine[k] * std::cos(kk * theta); break;
        case 1: acc -= cosine[k] * kk * std::sin(kk * theta); break;
        default: acc -= cosine[k] * kk * kk * std::cos(kk * theta); break;
      }
    }
    return acc;
  }
};

/// Signed curvature of the cross-section boundary r = rho(theta); positive
/// where the curve bends towards the origin.
inline double boundary_curvature(const ConeSpec& spec, double theta) {
  const double r = spec.radius(theta);
  const double r1 = spec.radius_d1(theta);
  const double r2 = spec.radius_d2(theta);
  return (r * r + 2.0 * r1 * r1 - r * r2) / std::pow(r * r + r1 * r1, 1.5);
}

template <int N>
struct BoundarySample {
  ChartPoint<N> x;
  ChartPoint<N> gamma;  // outward unit normal of D
  ChartPoint<N> w;      // conormal direction gamma - (gamma.x) x
  double kappa = 0.0;   // curvature of the cross-section at x
  double a_sigma_theta = 0.0;  // A^Sigma(e, e) for a unit angular e at height 1
};

namespace detail {

inline constexpr double kBoundaryTolerance = 1e-9;

template <int N>
double polar_angle(const ChartPoint<N>& x) {
  return std::atan2(x[1], x[0]);
}

}  // namespace detail

/// Boundary data at x; throws DomainError unless x lies on dD within 1e-9.
template <int N>
BoundarySample<N> boundary_sample(const ChartPoint<N>& x, const ConeSpec& spec) {
  if (spec.n != N) throw ContractViolation("boundary_sample: dimension mismatch with cone");
  const double r = x.norm();
  BoundarySample<N> b;
  b.x = x;
  if (spec.is_round()) {
    if (std::abs(r - spec.rho) > detail::kBoundaryTolerance) {
      throw DomainError("point is not on the cone boundary (|x| = " + std::to_string(r) + ")");
    }
    b.gamma = x / r;
    b.kappa = 1.0 / spec.rho;
  } else {
    const double theta = detail::polar_angle<N>(x);
    const double rt = spec.radius(theta);
    if (std::abs(r - rt) > detail::kBoundaryTolerance) {
      throw DomainError("point is not on the cone boundary (|x| = " + std::to_string(r) +
                        ", rho(theta) = " + std::to_string(rt) + ")");
    }
    const double r1 = spec.radius_d1(theta);
    ChartPoint<N> er = ChartPoint<N>::Zero();
    ChartPoint<N> et = ChartPoint<N>::Zero();
    er[0] = std::cos(theta);
    er[1] = std::sin(theta);
    et[0] = -std::sin(theta);
    et[1] = std::cos(theta);
    b.gamma = (rt * er - r1 * et).normalized();
    b.kappa = boundary_curvature(spec, theta);
  }
  b.w = b.gamma - b.gamma.dot(x) * x;
  const double sn = x.dot(b.gamma);
  b.a_sigma_theta = b.kappa / std::sqrt(1.0 - sn * sn);
  return b;
}

template <int N>
ChartPoint<N> conormal(const ConeSpec& spec, const ChartPoint<N>& x) {
  return boundary_sample<N>(x, spec).w;
}

/// A^Sigma(nu, nu) at the point embed(x, u) of Sigma, x on dD.
///
/// Writing nu = a (x, 1) + (Z, 0) with Z orthogonal to the ray, the ray part
/// is a null direction of A^Sigma and A(nu,nu) = |Z|^2 kappa / (l sqrt(1 - (x.gamma)^2))
/// at height l. Z is projected onto the boundary tangent after the tangency
/// check, so a tolerance above 1e-8 accepts approximately tangent vectors.
template <int N>
double sigma_A_nu_nu(const ConeSpec& spec, const ChartPoint<N>& x, double u,
                     const SpacetimeVector<N>& nu, double tolerance = 1e-8) {
  const auto b = boundary_sample<N>(x, spec);
  const double l = embed<N>(x, u)[N];
  ChartPoint<N> z = nu.template head<N>() - nu[N] * x;
  const double scale = std::max(1.0, nu.template head<N>().norm());
  const double off = z.dot(b.gamma);
  if (std::abs(off) > tolerance * scale) {
    throw ContractViolation("sigma_A_nu_nu: vector is not tangent to the cone");
  }
  z -= off * b.gamma;
  return z.squaredNorm() * b.a_sigma_theta / l;
}

struct ConvexityReport {
  bool convex = true;
  double min_curvature = 0.0;
  double theta_at_min = 0.0;
};

/// Samples the boundary curvature on a fine angular grid.
inline ConvexityReport convexity_check(const ConeSpec& spec) {
  ConvexityReport rep;
  if (spec.is_round()) {
    rep.min_curvature = 1.0 / spec.rho;
    return rep;
  }
  rep.min_curvature = std::numeric_limits<double>::infinity();
  for (int j = 0; j < ConeSpec::kSamples; ++j) {
    const double theta = 2.0 * std::numbers::pi * j / ConeSpec::kSamples;
    const double k = boundary_curvature(spec, theta);
    if (k < rep.min_curvature) {
      rep.min_curvature = k;
      rep.theta_at_min = theta;
    }
  }
  rep.convex = rep.min_curvature >= 0.0;
  return rep;
}

}  // namespace mcf
