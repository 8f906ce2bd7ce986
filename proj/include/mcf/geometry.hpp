#pragma once

// Pointwise Minkowski geometry of a spacelike graph over the light-cone chart.
//
// A hypersurface inside the future light cone is written as
//   F(x) = u(x) (x + e_{n+1}) / sqrt(1 - |x|^2),   x in D, |x| < 1,
// so u = sqrt(-<F,F>) and everything below is a closed-form function of the
// jet (x, u, Du, D^2u). The dimension N is a compile-time parameter.

#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <sstream>
#include <string>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "mcf/errors.hpp"

namespace mcf {

template <int N>
using ChartPoint = Eigen::Matrix<double, N, 1>;
template <int N>
using ChartMatrix = Eigen::Matrix<double, N, N>;
/// Point or vector of R^{N+1}_1; index N is the timelike direction.
template <int N>
using SpacetimeVector = Eigen::Matrix<double, N + 1, 1>;

/// <a,b> = a_1 b_1 + ... + a_n b_n - a_{n+1} b_{n+1}
template <int N>
double minkowski_dot(const SpacetimeVector<N>& a, const SpacetimeVector<N>& b) {
  return a.template head<N>().dot(b.template head<N>()) - a[N] * b[N];
}

/// Runtime-sized variant for vectors whose dimension is only known at runtime.
inline double minkowski_dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) {
    throw ContractViolation("minkowski_dot: dimension mismatch (" + std::to_string(a.size()) +
                            " vs " + std::to_string(b.size()) + ")");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < a.size(); ++i) acc += a[i] * b[i];
  return acc - a.back() * b.back();
}

/// (u, Du, D^2u) of the graph function at a chart point. The Hessian is
/// absent for first-order queries.
template <int N>
struct Jet {
  ChartPoint<N> x = ChartPoint<N>::Zero();
  double u = 1.0;
  ChartPoint<N> du = ChartPoint<N>::Zero();
  std::optional<ChartMatrix<N>> d2u;
};

template <int N>
struct NodeGeometry {
  double F2 = 0.0;  // -<F,F> = u^2
  double v = 0.0;
  double S = 0.0;  // -<F,nu>, positive for the future-pointing normal
  ChartMatrix<N> metric;
  ChartMatrix<N> inv_metric;
  SpacetimeVector<N> normal;
  double H = 0.0;
  double A2 = 0.0;
  double J = 0.0;  // (S^2 - F^2) / F^2
};

namespace detail {

template <int N>
std::string describe(const Jet<N>& jet) {
  std::ostringstream os;
  os << "x=(" << jet.x.transpose() << "), u=" << jet.u << ", Du=(" << jet.du.transpose() << ")";
  return os.str();
}

/// Scalars shared by every chart formula.
struct ChartScalars {
  double w;     // 1 - |x|^2
  double du_x;  // Du . x
  double du2;   // |Du|^2
  double v2;
};

template <int N>
ChartScalars chart_scalars(const Jet<N>& jet) {
  const double w = 1.0 - jet.x.squaredNorm();
  if (!(w > 0.0)) throw LightConeViolation("chart point outside the unit ball: " + describe(jet));
  if (!(jet.u > 0.0)) throw DomainError("graph function must be positive: " + describe(jet));
  const double du_x = jet.du.dot(jet.x);
  const double du2 = jet.du.squaredNorm();
  const double v2 = jet.u * jet.u / w + du_x * du_x - du2;
  if (!(v2 > 0.0)) throw SpacelikeViolation("surface not spacelike (v^2 <= 0) at " + describe(jet));
  return {w, du_x, du2, v2};
}

template <int N>
ChartMatrix<N> inverse_metric(const Jet<N>& jet, const ChartScalars& c) {
  const auto& x = jet.x;
  const auto& du = jet.du;
  const double u2 = jet.u * jet.u;
  ChartMatrix<N> bracket = (c.du2 - u2 / c.w) * (x * x.transpose()) + du * du.transpose() -
                           c.du_x * (x * du.transpose() + du * x.transpose());
  return (c.w / u2) * (ChartMatrix<N>::Identity() + bracket / c.v2);
}

}  // namespace detail

/// F(x) = u (x + e_{n+1}) / sqrt(1 - |x|^2)
template <int N>
SpacetimeVector<N> embed(const ChartPoint<N>& x, double u) {
  const double w = 1.0 - x.squaredNorm();
  if (!(w > 0.0)) throw LightConeViolation("embed: |x| >= 1");
  if (!(u > 0.0)) throw DomainError("embed: u must be positive");
  SpacetimeVector<N> F;
  F.template head<N>() = x;
  F[N] = 1.0;
  return (u / std::sqrt(w)) * F;
}

/// v = sqrt(u^2/(1-|x|^2) + (Du.x)^2 - |Du|^2)
template <int N>
double gradient_function_v(const Jet<N>& jet) {
  return std::sqrt(detail::chart_scalars(jet).v2);
}

template <int N>
ChartMatrix<N> metric(const Jet<N>& jet) {
  const auto c = detail::chart_scalars(jet);
  const double s = jet.u * jet.u / c.w;
  return s * (ChartMatrix<N>::Identity() + jet.x * jet.x.transpose() / c.w) -
         jet.du * jet.du.transpose();
}

/// Closed-form g^{ij}; not a numerical inverse of metric().
template <int N>
ChartMatrix<N> inverse_metric(const Jet<N>& jet) {
  return detail::inverse_metric(jet, detail::chart_scalars(jet));
}

/// Future-pointing unit timelike normal.
template <int N>
SpacetimeVector<N> normal(const Jet<N>& jet) {
  const auto c = detail::chart_scalars(jet);
  const double v = std::sqrt(c.v2);
  SpacetimeVector<N> nu;
  nu.template head<N>() = c.w * jet.du + jet.u * jet.x;
  nu[N] = c.du_x * c.w + jet.u;
  return nu / (c.w * v);
}

/// S = -<F,nu> = u^2 / (v sqrt(1-|x|^2))
template <int N>
double support_S(const Jet<N>& jet) {
  const auto c = detail::chart_scalars(jet);
  return jet.u * jet.u / (std::sqrt(c.v2) * std::sqrt(c.w));
}

/// J = (S^2 - F^2)/F^2, evaluated through the equivalent |Du|_g^2 form,
/// which stays nonnegative in floating point.
template <int N>
double defect_J(const Jet<N>& jet) {
  const auto c = detail::chart_scalars(jet);
  return jet.du.dot(detail::inverse_metric(jet, c) * jet.du);
}

struct Curvature {
  double H;
  double A2;
};

/// Mean curvature and |A|^2, with h_ij = -<D_ij F, nu> so that the expanding
/// hyperbolic plane of radius k has H = n/k.
template <int N>
Curvature shape_operator(const Jet<N>& jet) {
  if (!jet.d2u) throw ContractViolation("shape_operator: jet carries no Hessian");
  const auto c = detail::chart_scalars(jet);
  const ChartMatrix<N> ginv = detail::inverse_metric(jet, c);
  const SpacetimeVector<N> nu = normal(jet);
  const auto& x = jet.x;
  const double u = jet.u;
  const auto& hess = *jet.d2u;

  // phi = (x, 1)/sqrt(w); F = u phi.
  const double sw = std::sqrt(c.w);
  SpacetimeVector<N> xt;
  xt.template head<N>() = x;
  xt[N] = 1.0;
  const SpacetimeVector<N> phi = xt / sw;
  std::array<SpacetimeVector<N>, N> dphi;
  for (int i = 0; i < N; ++i) {
    SpacetimeVector<N> ei = SpacetimeVector<N>::Zero();
    ei[i] = 1.0;
    dphi[i] = ei / sw + xt * (x[i] / (c.w * sw));
  }

  ChartMatrix<N> h;
  const double w32 = c.w * sw;
  const double w52 = c.w * w32;
  for (int i = 0; i < N; ++i) {
    for (int j = i; j < N; ++j) {
      SpacetimeVector<N> ddphi = xt * ((i == j ? 1.0 : 0.0) / w32 + 3.0 * x[i] * x[j] / w52);
      ddphi[i] += x[j] / w32;
      ddphi[j] += x[i] / w32;
      const SpacetimeVector<N> ddF =
          hess(i, j) * phi + jet.du[i] * dphi[j] + jet.du[j] * dphi[i] + u * ddphi;
      h(i, j) = h(j, i) = -minkowski_dot<N>(ddF, nu);
    }
  }
  const ChartMatrix<N> shape = ginv * h;
  return {shape.trace(), (shape * shape).trace()};
}

/// Everything the diagnostics need at one chart point.
template <int N>
NodeGeometry<N> node_geometry(const Jet<N>& jet) {
  const auto c = detail::chart_scalars(jet);
  NodeGeometry<N> g;
  g.F2 = jet.u * jet.u;
  g.v = std::sqrt(c.v2);
  g.S = g.F2 / (g.v * std::sqrt(c.w));
  g.metric = metric(jet);
  g.inv_metric = detail::inverse_metric(jet, c);
  g.normal = normal(jet);
  g.J = jet.du.dot(g.inv_metric * jet.du);
  if (jet.d2u) {
    const auto k = shape_operator(jet);
    g.H = k.H;
    g.A2 = k.A2;
  }
  return g;
}

/// Surface area of the unit sphere S^{n-1} in R^n.
inline double unit_sphere_area(int n) {
  return 2.0 * std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n);
}

/// Hyperbolic volume of the geodesic ball cut from Y_1 = {<p,p> = -1} by the
/// round cone whose height-one cross-section has radius rho. Integrates the
/// chart density sqrt(det g^Y) = (1-r^2)^{-(n+1)/2} over the disc |x| < rho.
inline double hyperbolic_cap_area(double rho, int n) {
  if (!(rho > 0.0 && rho < 1.0)) throw DomainError("hyperbolic_cap_area: rho must lie in (0,1)");
  if (n < 2) throw DomainError("hyperbolic_cap_area: n must be at least 2");
  auto radial = [n](double r) { return std::pow(r, n - 1) * std::pow(1.0 - r * r, -0.5 * (n + 1)); };
  const double integral =
      boost::math::quadrature::gauss_kronrod<double, 61>::integrate(radial, 0.0, rho, 8, 1e-14);
  return unit_sphere_area(n) * integral;
}

}  // namespace mcf
