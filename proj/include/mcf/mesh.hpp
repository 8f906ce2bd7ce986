#pragma once

// Static discretisations of the flow domain D and finite-difference jets.
//
// PolarMesh (n = 2) uses scaled polar coordinates x = s rho(theta) e_r(theta)
// with cell-centred rings s_i = (i + 1/2) ds, the last ring sitting exactly on
// dD (s = 1) and one ghost ring outside it for the Neumann closure. The
// innermost ring takes its derivatives from a quadratic least-squares fit over
// the first two rings, which sidesteps the coordinate singularity at x = 0.
// Radial derivatives are second-order centred differences; angular ones are
// Fourier (exact for trigonometric polynomials below the Nyquist mode).
//
// RadialMesh<N> is the axisymmetric reduction on a round cone for any n.
//
// Both expose the same duck-typed interface consumed by the flow engine and
// the diagnostics: size(), x(k), weight(k), jet(field, k), boundary nodes and
// one-sided boundary gradients.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mcf/cone.hpp"
#include "mcf/errors.hpp"
#include "mcf/geometry.hpp"

namespace mcf {

/// Graph values at one instant. Ghost values are only meaningful after
/// apply_neumann().
template <class Mesh>
struct Field {
  std::shared_ptr<const Mesh> mesh;
  std::vector<double> u;
  std::vector<double> ghost;
  double t = 0.0;
  bool closed = false;

  Field() = default;
  explicit Field(std::shared_ptr<const Mesh> m, double time = 0.0)
      : mesh(std::move(m)), u(mesh->size(), 1.0), ghost(mesh->ghost_size(), 1.0), t(time) {}
};

// ---------------------------------------------------------------------------
// Polar mesh, n = 2

namespace detail {

/// Fourier differentiation matrices on an even periodic grid of n points.
inline void periodic_derivative_matrices(int n, Eigen::MatrixXd& d1, Eigen::MatrixXd& d2) {
  const double h = 2.0 * std::numbers::pi / n;
  d1.setZero(n, n);
  d2.setZero(n, n);
  for (int j = 0; j < n; ++j) {
    for (int k = 0; k < n; ++k) {
      if (j == k) continue;
      const double sign = ((j - k) % 2 == 0) ? 1.0 : -1.0;
      const double half = 0.5 * (j - k) * h;
      d1(j, k) = 0.5 * sign / std::tan(half);
      d2(j, k) = -0.5 * sign / (std::sin(half) * std::sin(half));
    }
    // Diagonal from the row sums, so constants are annihilated to the last bit.
    d1(j, j) = -d1.row(j).sum();
    d2(j, j) = -d2.row(j).sum();
  }
}

/// Orthogonal projector onto angular modes 0..m of an n-point periodic grid.
inline Eigen::MatrixXd mode_projector(int n, int m) {
  Eigen::MatrixXd p(n, n);
  const double h = 2.0 * std::numbers::pi / n;
  for (int j = 0; j < n; ++j) {
    for (int k = 0; k < n; ++k) {
      double acc = 1.0;
      for (int q = 1; q <= m; ++q) acc += 2.0 * std::cos(q * (j - k) * h);
      p(j, k) = acc / n;
    }
  }
  return p;
}

}  // namespace detail

class PolarMesh {
 public:
  static constexpr int dim = 2;

  PolarMesh(ConeSpec spec, int nr, int ntheta) : spec_(std::move(spec)), nr_(nr), nt_(ntheta) {
    if (spec_.n != 2) throw ContractViolation("PolarMesh requires n = 2");
    if (nr_ < 8 || nt_ < 8) throw DomainError("PolarMesh needs Nr >= 8 and Ntheta >= 8");
    if (nt_ % 2 != 0) throw DomainError("PolarMesh needs an even Ntheta");
    const auto conv = convexity_check(spec_);
    if (!conv.convex) {
      throw DomainError("cone cross-section is not convex (min curvature " +
                        std::to_string(conv.min_curvature) + ")");
    }
    ds_ = 1.0 / (nr_ - 0.5);
    dth_ = 2.0 * std::numbers::pi / nt_;
    detail::periodic_derivative_matrices(nt_, d1_, d2_);
    build_nodes();
    build_origin_fit();
    build_filter();
    build_boundary();
  }

  const ConeSpec& spec() const { return spec_; }
  int nr() const { return nr_; }
  int ntheta() const { return nt_; }
  int size() const { return nr_ * nt_; }
  int ghost_size() const { return nt_; }
  int index(int i, int j) const { return i * nt_ + wrap(j); }
  int ring(int k) const { return k / nt_; }
  double ds() const { return ds_; }
  double dtheta() const { return dth_; }
  double s(int i) const { return (i + 0.5) * ds_; }
  double theta(int j) const { return j * dth_; }

  const ChartPoint<2>& x(int k) const { return nodes_[k].x; }
  /// Chart point of ghost node j, one ring spacing outside dD.
  ChartPoint<2> ghost_x(int j) const {
    const double th = theta(j);
    return (1.0 + ds_) * spec_.radius(th) * ChartPoint<2>(std::cos(th), std::sin(th));
  }
  double weight(int k) const { return nodes_[k].weight; }
  bool is_boundary(int k) const { return ring(k) == nr_ - 1; }
  /// True if the node lies on the ray-cone {s <= fraction}.
  bool in_interior(int k, double fraction) const { return s(ring(k)) <= fraction + 1e-12; }

  int boundary_count() const { return nt_; }
  int boundary_node(int b) const { return index(nr_ - 1, b); }
  const BoundarySample<2>& boundary(int b) const { return bsamples_[b]; }

  /// Highest angular mode kept on ring i (Ntheta/2 means unfiltered).
  int kept_mode(int i) const { return kept_[i]; }

  template <class Fld>
  Jet<2> jet(const Fld& f, int k) const {
    check_closed(f);
    const int i = ring(k), j = k % nt_;
    if (i == 0) return origin_jet(k, f.u[k], origin_coefficients(f.u));
    std::array<double, 3> d1{}, d2{};
    for (int r = 0; r < 3; ++r) {
      const Eigen::VectorXd row = centred(ring_data(f, i - 1 + r));
      d1[r] = d1_.row(j).dot(row);
      d2[r] = d2_.row(j).dot(row);
    }
    return ring_jet(f, i, j, d1, d2[1]);
  }

  /// Calls fn(k, jet) for every node in index order.
  template <class Fld, class Fn>
  void for_each_jet(const Fld& f, Fn&& fn) const {
    check_closed(f);
    Eigen::MatrixXd u(nt_, nr_ + 1);
    for (int i = 0; i <= nr_; ++i) u.col(i) = centred(ring_data(f, i));
    const Eigen::MatrixXd ut = d1_ * u;
    const Eigen::MatrixXd utt = d2_ * u;
    const auto origin = origin_coefficients(f.u);
    for (int j = 0; j < nt_; ++j) fn(index(0, j), origin_jet(index(0, j), f.u[index(0, j)], origin));
    for (int i = 1; i < nr_; ++i) {
      for (int j = 0; j < nt_; ++j) {
        fn(index(i, j), ring_jet(f, i, j, {ut(j, i - 1), ut(j, i), ut(j, i + 1)}, utt(j, i)));
      }
    }
  }

  /// Cartesian gradient of nodal values f at boundary node b, from a one-sided
  /// second-order difference in s and the spectral derivative along the ring.
  ChartPoint<2> boundary_gradient(std::span<const double> f, int b) const {
    const int i = nr_ - 1;
    const double fs = (3.0 * f[index(i, b)] - 4.0 * f[index(i - 1, b)] + f[index(i - 2, b)]) /
                      (2.0 * ds_);
    const double ft = d1_.row(b).dot(centred(f.data() + i * nt_));
    return nodes_[index(i, b)].jinv_t * ChartPoint<2>(fs, ft);
  }

  /// Fill the ghost ring so that the centred discrete Du . w vanishes at every
  /// boundary node. On a round cone this is the mirror u_ghost = u_{Nr-2}.
  template <class Fld>
  void close(Fld& f) const {
    const int i = nr_ - 1;
    const Eigen::VectorXd ut = d1_ * centred(f.u.data() + i * nt_);
    for (int j = 0; j < nt_; ++j) {
      f.ghost[j] = f.u[index(i - 1, j)] - 2.0 * ds_ * ghost_slope_[j] * ut[j];
    }
    f.closed = true;
  }

  /// Project each inner ring of a nodal vector onto its kept angular modes.
  void filter(std::span<double> values) const {
    for (std::size_t i = 0; i < projectors_.size(); ++i) {
      Eigen::Map<Eigen::VectorXd> row(values.data() + i * nt_, nt_);
      row = (projectors_[i] * row).eval();
    }
  }

  /// Upper bound on the spectral radius of the discrete diffusion operator at
  /// node k with tensor ginv (symbol bound; Gershgorin on the origin fit).
  double stiffness(int k, const ChartMatrix<2>& ginv) const {
    const int i = ring(k);
    if (i == 0) {
      return 2.0 * (std::abs(ginv(0, 0)) * origin_abs_[3] + std::abs(ginv(0, 1)) * origin_abs_[4] +
                    std::abs(ginv(1, 1)) * origin_abs_[5]);
    }
    const auto& nd = nodes_[k];
    const ChartMatrix<2> K = nd.jinv_t.transpose() * ginv * nd.jinv_t;
    const double m = kept_[i];
    return 4.0 * K(0, 0) / (ds_ * ds_) + K(1, 1) * m * m + 2.0 * std::abs(K(0, 1)) * m / ds_;
  }

 private:
  struct Node {
    ChartPoint<2> x;
    double weight = 0.0;
    ChartMatrix<2> jinv_t;  // J^{-T}, J = [dx/ds, dx/dtheta]
    ChartPoint<2> x_st;     // d2x/ds dtheta (d2x/ds2 = 0)
    ChartPoint<2> x_tt;     // d2x/dtheta2
  };

  int wrap(int j) const { return ((j % nt_) + nt_) % nt_; }

  template <class Fld>
  static void check_closed(const Fld& f) {
    if (!f.closed) throw ContractViolation("jet requested before the Neumann closure was applied");
  }

  // Ring values minus their first entry: derivatives of constant rings then
  // vanish exactly instead of to GEMM roundoff.
  Eigen::VectorXd centred(const double* row) const {
    return Eigen::Map<const Eigen::VectorXd>(row, nt_).array() - row[0];
  }

  template <class Fld>
  const double* ring_data(const Fld& f, int i) const {
    return i == nr_ ? f.ghost.data() : f.u.data() + i * nt_;
  }

  Jet<2> origin_jet(int k, double u, const std::array<double, 6>& c) const {
    const auto& p = nodes_[k].x;
    Jet<2> jet;
    jet.x = p;
    jet.u = u;
    jet.du << c[1] + 2.0 * c[3] * p[0] + c[4] * p[1], c[2] + c[4] * p[0] + 2.0 * c[5] * p[1];
    ChartMatrix<2> h;
    h << 2.0 * c[3], c[4], c[4], 2.0 * c[5];
    jet.d2u = h;
    return jet;
  }

  // ut holds the angular derivative on rings i-1, i, i+1 at column j.
  template <class Fld>
  Jet<2> ring_jet(const Fld& f, int i, int j, const std::array<double, 3>& ut, double utt) const {
    const int k = index(i, j);
    const auto& nd = nodes_[k];
    const double up = ring_data(f, i + 1)[j], um = f.u[index(i - 1, j)], u0 = f.u[k];
    const double us = (up - um) / (2.0 * ds_);
    const double uss = (up - 2.0 * u0 + um) / (ds_ * ds_);
    const double ust = (ut[2] - ut[0]) / (2.0 * ds_);
    Jet<2> jet;
    jet.x = nd.x;
    jet.u = u0;
    jet.du = nd.jinv_t * ChartPoint<2>(us, ut[1]);
    ChartMatrix<2> m;
    m(0, 0) = uss;
    m(0, 1) = m(1, 0) = ust - jet.du.dot(nd.x_st);
    m(1, 1) = utt - jet.du.dot(nd.x_tt);
    jet.d2u = nd.jinv_t * m * nd.jinv_t.transpose();
    return jet;
  }

  void build_nodes() {
    nodes_.resize(size());
    for (int j = 0; j < nt_; ++j) {
      const double th = theta(j);
      const double r = spec_.radius(th), r1 = spec_.radius_d1(th), r2 = spec_.radius_d2(th);
      const ChartPoint<2> er(std::cos(th), std::sin(th));
      const ChartPoint<2> et(-std::sin(th), std::cos(th));
      for (int i = 0; i < nr_; ++i) {
        auto& nd = nodes_[index(i, j)];
        const double si = s(i);
        nd.x = (i == nr_ - 1 ? 1.0 : si) * r * er;
        ChartMatrix<2> jac;
        jac.col(0) = r * er;
        jac.col(1) = si * (r1 * er + r * et);
        nd.jinv_t = jac.inverse().transpose();
        nd.x_st = r1 * er + r * et;
        nd.x_tt = si * (r2 * er + 2.0 * r1 * et - r * er);
        const double lo = std::max(0.0, si - 0.5 * ds_);
        const double hi = std::min(1.0, si + 0.5 * ds_);
        nd.weight = r * r * dth_ * (hi * hi - lo * lo) / 2.0;
      }
    }
  }

  // u ~ c0 + c1 x + c2 y + c3 x^2 + c4 xy + c5 y^2 over rings 0 and 1.
  void build_origin_fit() {
    const int m = 2 * nt_;
    Eigen::MatrixXd a(m, 6);
    for (int q = 0; q < m; ++q) {
      const auto& p = nodes_[q].x;
      a.row(q) << 1.0, p[0], p[1], p[0] * p[0], p[0] * p[1], p[1] * p[1];
    }
    origin_fit_ = a.completeOrthogonalDecomposition().pseudoInverse();
    for (int c = 0; c < 6; ++c) origin_abs_[c] = origin_fit_.row(c).cwiseAbs().sum();
  }

  std::array<double, 6> origin_coefficients(const std::vector<double>& u) const {
    const Eigen::VectorXd c =
        origin_fit_ * Eigen::Map<const Eigen::VectorXd>(u.data(), 2 * nt_);
    return {c[0], c[1], c[2], c[3], c[4], c[5]};
  }

  // Near the origin a smooth field's mode m scales like s^m, so ring i keeps
  // modes up to max(2, i); this keeps the angular stiffness below the radial.
  void build_filter() {
    kept_.resize(nr_);
    for (int i = 0; i < nr_; ++i) {
      kept_[i] = std::min(nt_ / 2, std::max(2, i));
      if (kept_[i] < nt_ / 2) projectors_.push_back(detail::mode_projector(nt_, kept_[i]));
    }
  }

  void build_boundary() {
    bsamples_.resize(nt_);
    ghost_slope_.resize(nt_);
    for (int j = 0; j < nt_; ++j) {
      const auto& nd = nodes_[index(nr_ - 1, j)];
      bsamples_[j] = boundary_sample<2>(nd.x, spec_);
      // (alpha, beta) = J^{-1} w; the closure enforces alpha u_s + beta u_theta = 0.
      const ChartPoint<2> ab = nd.jinv_t.transpose() * bsamples_[j].w;
      ghost_slope_[j] = ab[1] / ab[0];
    }
  }

  ConeSpec spec_;
  int nr_, nt_;
  double ds_ = 0.0, dth_ = 0.0;
  std::vector<Node> nodes_;
  Eigen::MatrixXd d1_, d2_;
  Eigen::MatrixXd origin_fit_;
  std::array<double, 6> origin_abs_{};
  std::vector<int> kept_;
  std::vector<Eigen::MatrixXd> projectors_;
  std::vector<BoundarySample<2>> bsamples_;
  std::vector<double> ghost_slope_;
};

// ---------------------------------------------------------------------------
// Axisymmetric reduction on a round cone, any n

template <int N>
class RadialMesh {
 public:
  static constexpr int dim = N;

  RadialMesh(ConeSpec spec, int nr) : spec_(std::move(spec)), nr_(nr) {
    if (!spec_.is_round()) throw DomainError("axisymmetric mode requires a round cone");
    if (spec_.n != N) throw ContractViolation("RadialMesh dimension does not match the cone");
    if (nr_ < 8) throw DomainError("RadialMesh needs Nr >= 8");
    dr_ = spec_.rho / (nr_ - 0.5);
    const double omega = unit_sphere_area(N);
    weights_.resize(nr_);
    for (int i = 0; i < nr_; ++i) {
      const double lo = std::max(0.0, r(i) - 0.5 * dr_);
      const double hi = std::min(spec_.rho, r(i) + 0.5 * dr_);
      weights_[i] = omega * (std::pow(hi, N) - std::pow(lo, N)) / N;
    }
    ChartPoint<N> xb = ChartPoint<N>::Zero();
    xb[0] = spec_.rho;
    bsample_ = boundary_sample<N>(xb, spec_);
  }

  const ConeSpec& spec() const { return spec_; }
  int nr() const { return nr_; }
  int size() const { return nr_; }
  int ghost_size() const { return 1; }
  double dr() const { return dr_; }
  double r(int i) const { return i == nr_ - 1 ? spec_.rho : (i + 0.5) * dr_; }

  ChartPoint<N> x(int k) const {
    ChartPoint<N> p = ChartPoint<N>::Zero();
    p[0] = r(k);
    return p;
  }
  double weight(int k) const { return weights_[k]; }
  bool is_boundary(int k) const { return k == nr_ - 1; }
  bool in_interior(int k, double fraction) const { return r(k) <= fraction * spec_.rho + 1e-12; }
  int boundary_count() const { return 1; }
  int boundary_node(int) const { return nr_ - 1; }
  const BoundarySample<N>& boundary(int) const { return bsample_; }

  /// Radial jet at r_k along the first axis:
  /// D_ij u = u_rr x_i x_j / r^2 + u_r (delta_ij / r - x_i x_j / r^3).
  template <class Fld>
  Jet<N> jet(const Fld& f, int k) const {
    if (!f.closed) throw ContractViolation("jet requested before the Neumann closure was applied");
    const double um = k == 0 ? f.u[0] : f.u[k - 1];
    const double up = k == nr_ - 1 ? f.ghost[0] : f.u[k + 1];
    const double u0 = f.u[k];
    const double ur = (up - um) / (2.0 * dr_);
    const double urr = (up - 2.0 * u0 + um) / (dr_ * dr_);
    const double rk = r(k);
    Jet<N> jet;
    jet.x = x(k);
    jet.u = u0;
    jet.du = ChartPoint<N>::Zero();
    jet.du[0] = ur;
    ChartMatrix<N> h = (ur / rk) * ChartMatrix<N>::Identity();
    h(0, 0) = urr;
    jet.d2u = h;
    return jet;
  }

  template <class Fld, class Fn>
  void for_each_jet(const Fld& f, Fn&& fn) const {
    for (int k = 0; k < nr_; ++k) fn(k, jet(f, k));
  }

  ChartPoint<N> boundary_gradient(std::span<const double> f, int) const {
    const int i = nr_ - 1;
    ChartPoint<N> g = ChartPoint<N>::Zero();
    g[0] = (3.0 * f[i] - 4.0 * f[i - 1] + f[i - 2]) / (2.0 * dr_);
    return g;
  }

  template <class Fld>
  void close(Fld& f) const {
    f.ghost[0] = f.u[nr_ - 2];
    f.closed = true;
  }

  void filter(std::span<double>) const {}

  double stiffness(int k, const ChartMatrix<N>& ginv) const {
    const double krr = ginv(0, 0);
    const double ktt = N > 1 ? ginv(1, 1) : 0.0;
    return 4.0 * krr / (dr_ * dr_) + 2.0 * (N - 1) * ktt / (dr_ * r(k));
  }

 private:
  ConeSpec spec_;
  int nr_;
  double dr_ = 0.0;
  std::vector<double> weights_;
  BoundarySample<N> bsample_;
};

// ---------------------------------------------------------------------------
// Free functions mirroring the operation list

inline std::shared_ptr<const PolarMesh> build_mesh(const ConeSpec& spec, int nr, int ntheta) {
  return std::make_shared<const PolarMesh>(spec, nr, ntheta);
}

template <int N>
std::shared_ptr<const RadialMesh<N>> build_radial_mesh(const ConeSpec& spec, int nr) {
  return std::make_shared<const RadialMesh<N>>(spec, nr);
}

/// Field sampled from a function of the chart point.
template <class Mesh, class Fn>
Field<Mesh> sample_field(std::shared_ptr<const Mesh> mesh, Fn&& fn, double t = 0.0) {
  Field<Mesh> f(mesh, t);
  for (int k = 0; k < mesh->size(); ++k) f.u[k] = fn(mesh->x(k));
  return f;
}

template <class Mesh>
Field<Mesh> apply_neumann(Field<Mesh> f) {
  f.mesh->close(f);
  return f;
}

template <class Mesh>
Jet<Mesh::dim> jet_at(const Field<Mesh>& f, int node) {
  return f.mesh->jet(f, node);
}

/// Largest |Du . w / |w|| over the boundary, from the closed centred jets.
template <class Mesh>
double conormal_residual(const Field<Mesh>& f) {
  const auto& m = *f.mesh;
  double worst = 0.0;
  for (int b = 0; b < m.boundary_count(); ++b) {
    const auto jet = m.jet(f, m.boundary_node(b));
    const auto& w = m.boundary(b).w;
    worst = std::max(worst, std::abs(jet.du.dot(w)) / w.norm());
  }
  return worst;
}

/// Integral of sqrt(det g) over D.
template <class Mesh>
double area_graph(const Field<Mesh>& f) {
  const auto& m = *f.mesh;
  double area = 0.0;
  m.for_each_jet(f, [&](int k, const auto& jet) {
    area += m.weight(k) * std::sqrt(metric(jet).determinant());
  });
  return area;
}

/// The same area through the Y_1 chart: integral over B of
/// u^n (1 + |grad F^2|^2 / 4F^2)^{-1/2} dmu_{Y_1}.
template <class Mesh>
double area_graph_hyperbolic(const Field<Mesh>& f) {
  constexpr int n = Mesh::dim;
  const auto& m = *f.mesh;
  double area = 0.0;
  m.for_each_jet(f, [&](int k, const auto& jet) {
    const double w = 1.0 - jet.x.squaredNorm();
    const double density_y = std::pow(w, -0.5 * (n + 1));
    area += m.weight(k) * density_y * std::pow(jet.u, n) / std::sqrt(1.0 + defect_J(jet));
  });
  return area;
}

}  // namespace mcf
