#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "mcf/mesh.hpp"

using namespace mcf;

namespace {

const double kPi = std::numbers::pi;

std::shared_ptr<const PolarMesh> round_mesh(int n, double rho = 0.5) {
  return build_mesh(ConeSpec::round(rho), n, n);
}

double bump(const ChartPoint<2>& x, double rho) { return 1.0 + 0.1 * std::cos(kPi * x.norm() / rho); }

ChartPoint<2> bump_gradient(const ChartPoint<2>& x, double rho) {
  const double r = x.norm();
  return -0.1 * kPi / rho * std::sin(kPi * r / rho) * x / r;
}

// Worst gradient error of the bump over all nodes of an n x n mesh.
double bump_gradient_error(int n) {
  const double rho = 0.5;
  auto mesh = round_mesh(n, rho);
  auto f = apply_neumann(sample_field(mesh, [&](const ChartPoint<2>& x) { return bump(x, rho); }));
  double err = 0.0;
  mesh->for_each_jet(f, [&](int k, const Jet<2>& jet) {
    err = std::max(err, (jet.du - bump_gradient(mesh->x(k), rho)).norm());
  });
  return err;
}

}  // namespace

TEST(BuildMesh, CountsAndPlacement) {
  auto mesh = round_mesh(64);
  EXPECT_EQ(mesh->size(), 64 * 64);
  EXPECT_EQ(mesh->boundary_count(), 64);
  for (int b = 0; b < mesh->boundary_count(); ++b) {
    EXPECT_NEAR(mesh->x(mesh->boundary_node(b)).norm(), 0.5, 1e-15);
    EXPECT_TRUE(mesh->is_boundary(mesh->boundary_node(b)));
  }
  for (int k = 0; k < mesh->size(); ++k) {
    EXPECT_LT(mesh->x(k).norm(), 1.0);
    EXPECT_GT(mesh->weight(k), 0.0);
  }
  EXPECT_GT(mesh->x(0).norm(), 0.0);
}

TEST(BuildMesh, PolarGraphBoundaryNodesLieOnTheCurve) {
  const auto spec = ConeSpec::polar_graph({0.5, 0.0, 0.05});
  auto mesh = build_mesh(spec, 16, 32);
  for (int b = 0; b < mesh->boundary_count(); ++b) {
    const auto& x = mesh->x(mesh->boundary_node(b));
    EXPECT_NEAR(x.norm(), spec.radius(std::atan2(x[1], x[0])), 1e-15);
  }
}

TEST(BuildMesh, Rejections) {
  EXPECT_THROW(build_mesh(ConeSpec::polar_graph({0.5, 0.0, 0.3}), 16, 16), DomainError);
  EXPECT_THROW(build_mesh(ConeSpec::round(0.5), 7, 16), DomainError);
  EXPECT_THROW(build_mesh(ConeSpec::round(0.5), 16, 7), DomainError);
  EXPECT_THROW(build_mesh(ConeSpec::round(0.5, 3), 16, 16), ContractViolation);
}

TEST(Quadrature, WeightsSumToTheDiscArea) {
  auto mesh = round_mesh(64);
  double total = 0.0;
  for (int k = 0; k < mesh->size(); ++k) total += mesh->weight(k);
  EXPECT_NEAR(total, kPi * 0.25, 1e-12);

  // Polar graph: area = 1/2 int rho^2 dtheta, which the angular rule
  // integrates exactly for a short cosine series.
  const auto spec = ConeSpec::polar_graph({0.5, 0.0, 0.05});
  auto pm = build_mesh(spec, 16, 32);
  double polar_total = 0.0;
  for (int k = 0; k < pm->size(); ++k) polar_total += pm->weight(k);
  EXPECT_NEAR(polar_total, kPi * (0.25 + 0.5 * 0.05 * 0.05), 1e-12);
}

TEST(Jets, ConstantFieldHasVanishingDerivatives) {
  auto mesh = round_mesh(32);
  auto f = apply_neumann(sample_field(mesh, [](const ChartPoint<2>&) { return 1.0; }));
  mesh->for_each_jet(f, [&](int, const Jet<2>& jet) {
    EXPECT_LT(jet.du.cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT(jet.d2u->cwiseAbs().maxCoeff(), 1e-12);
  });
}

TEST(Jets, QuadraticFieldIsDifferentiatedExactly) {
  const auto spec = ConeSpec::polar_graph({0.5, 0.0, 0.05});
  auto mesh = build_mesh(spec, 24, 32);
  auto q = [](const ChartPoint<2>& x) {
    return 1.0 + 0.3 * x[0] + 0.2 * x[1] + 0.5 * x[0] * x[0] - 0.4 * x[0] * x[1] + 0.7 * x[1] * x[1];
  };
  ChartMatrix<2> hess;
  hess << 1.0, -0.4, -0.4, 1.4;
  auto f = sample_field(mesh, q);
  // Ghost ring carries the polynomial's own extension.
  for (int j = 0; j < mesh->ntheta(); ++j) f.ghost[j] = q(mesh->ghost_x(j));
  f.closed = true;
  mesh->for_each_jet(f, [&](int k, const Jet<2>& jet) {
    const auto& x = mesh->x(k);
    const ChartPoint<2> grad(0.3 + x[0] - 0.4 * x[1], 0.2 - 0.4 * x[0] + 1.4 * x[1]);
    EXPECT_LT((jet.du - grad).cwiseAbs().maxCoeff(), 1e-10) << "node " << k;
    EXPECT_LT((*jet.d2u - hess).cwiseAbs().maxCoeff(), 1e-10) << "node " << k;
  });
  // The single-node accessor agrees with the sweep.
  for (int k : {0, 5, 200, mesh->size() - 1}) {
    const auto jet = jet_at(f, k);
    EXPECT_LT((*jet.d2u - hess).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(Jets, SecondOrderConvergenceOnASmoothRadialField) {
  const double e16 = bump_gradient_error(16);
  const double e32 = bump_gradient_error(32);
  const double e64 = bump_gradient_error(64);
  EXPECT_GT(e16 / e32, 3.0);
  EXPECT_GT(e32 / e64, 3.0);
  EXPECT_LT(e64, 1e-3);
}

TEST(Jets, RequireTheNeumannClosure) {
  auto mesh = round_mesh(16);
  auto f = sample_field(mesh, [](const ChartPoint<2>&) { return 1.0; });
  EXPECT_THROW(jet_at(f, 3), ContractViolation);
}

TEST(Neumann, CompatibleRadialFieldIsUnchanged) {
  const double rho = 0.5;
  auto mesh = round_mesh(32, rho);
  auto f = apply_neumann(sample_field(mesh, [&](const ChartPoint<2>& x) { return bump(x, rho); }));
  const int last = mesh->nr() - 1;
  for (int j = 0; j < mesh->ntheta(); ++j) {
    EXPECT_NEAR(f.ghost[j], f.u[mesh->index(last - 1, j)], 1e-12);
  }
  const auto again = apply_neumann(f);
  for (int j = 0; j < mesh->ntheta(); ++j) EXPECT_EQ(again.ghost[j], f.ghost[j]);
  for (int k = 0; k < mesh->size(); ++k) EXPECT_EQ(again.u[k], f.u[k]);
}

TEST(Neumann, ClosureRemovesTheRadialSlopeOfRSquared) {
  const double rho = 0.5;
  auto mesh = round_mesh(32, rho);
  auto f = sample_field(mesh, [](const ChartPoint<2>& x) { return 1.0 + x.squaredNorm(); });
  // Uncorrected: the field's own ghost extension.
  auto raw = f;
  for (int j = 0; j < mesh->ntheta(); ++j) raw.ghost[j] = 1.0 + mesh->ghost_x(j).squaredNorm();
  raw.closed = true;
  const auto jraw = jet_at(raw, mesh->boundary_node(0));
  EXPECT_NEAR(jraw.du.dot(mesh->x(mesh->boundary_node(0)).normalized()), 2.0 * rho, 1e-10);

  const auto closed = apply_neumann(f);
  EXPECT_LT(conormal_residual(closed), 1e-12);
}

TEST(Neumann, PolarGraphConormalDerivativeIsSecondOrder) {
  const auto spec = ConeSpec::polar_graph({0.5, 0.0, 0.05});
  auto g = [](const ChartPoint<2>& x) {
    return 1.0 + 0.2 * x[0] * x[0] - 0.1 * x[1] + 0.05 * std::sin(3 * x[1]);
  };
  auto grad = [](const ChartPoint<2>& x) {
    return ChartPoint<2>(0.4 * x[0], -0.1 + 0.15 * std::cos(3 * x[1]));
  };
  // Centred Du.w with the field's own ghost extension, against the analytic value.
  auto error = [&](int n) {
    auto mesh = build_mesh(spec, n, n);
    auto f = sample_field(mesh, g);
    for (int j = 0; j < mesh->ntheta(); ++j) f.ghost[j] = g(mesh->ghost_x(j));
    f.closed = true;
    double worst = 0.0;
    for (int b = 0; b < mesh->boundary_count(); ++b) {
      const int k = mesh->boundary_node(b);
      const auto& w = mesh->boundary(b).w;
      worst = std::max(worst, std::abs((jet_at(f, k).du - grad(mesh->x(k))).dot(w)));
    }
    return worst;
  };
  const double e16 = error(16), e32 = error(32), e64 = error(64);
  EXPECT_GT(e16 / e32, 3.0);
  EXPECT_GT(e32 / e64, 3.0);

  // After the closure the same discrete derivative vanishes.
  for (int n : {16, 32, 64}) {
    auto mesh = build_mesh(spec, n, n);
    EXPECT_LT(conormal_residual(apply_neumann(sample_field(mesh, g))), 1e-12);
  }
}

TEST(Area, UnitFieldGivesTheHyperbolicCap) {
  auto mesh = round_mesh(64);
  auto f = apply_neumann(sample_field(mesh, [](const ChartPoint<2>&) { return 1.0; }));
  EXPECT_NEAR(area_graph(f), 0.971933, 1e-3);
  EXPECT_NEAR(area_graph(f), hyperbolic_cap_area(0.5, 2), 1e-3);
}

TEST(Area, ScalesLikeKToTheN) {
  auto mesh = round_mesh(32);
  auto unit = apply_neumann(sample_field(mesh, [](const ChartPoint<2>&) { return 1.0; }));
  const double a1 = area_graph(unit);
  for (double k : {0.5, 3.0, 11.0}) {
    auto f = apply_neumann(sample_field(mesh, [&](const ChartPoint<2>&) { return k; }));
    EXPECT_NEAR(area_graph(f) / (k * k), a1, 1e-12 * a1);
  }
  auto radial = build_radial_mesh<3>(ConeSpec::round(0.5, 3), 64);
  auto r1 = apply_neumann(sample_field(radial, [](const ChartPoint<3>&) { return 1.0; }));
  auto r4 = apply_neumann(sample_field(radial, [](const ChartPoint<3>&) { return 4.0; }));
  EXPECT_NEAR(area_graph(r4) / 64.0, area_graph(r1), 1e-12 * area_graph(r1));
}

TEST(Area, TwoQuadratureRoutesAgreeAndConverge) {
  auto gap = [](int n) {
    auto mesh = round_mesh(n);
    auto f = apply_neumann(sample_field(mesh, [](const ChartPoint<2>& x) {
      return 1.0 + 0.1 * std::cos(kPi * x.norm() / 0.5) + 0.05 * x[0];
    }));
    return std::abs(area_graph(f) - area_graph_hyperbolic(f)) / area_graph(f);
  };
  const double g32 = gap(32), g64 = gap(64);
  EXPECT_LT(g64, 1e-3);
  EXPECT_LT(g64, g32);
}

TEST(RadialMesh, Construction) {
  auto mesh = build_radial_mesh<2>(ConeSpec::round(0.5), 512);
  double total = 0.0;
  for (int k = 0; k < mesh->size(); ++k) total += mesh->weight(k);
  EXPECT_NEAR(total, kPi * 0.25, 1e-12);
  EXPECT_NEAR(mesh->x(mesh->size() - 1).norm(), 0.5, 1e-15);
  EXPECT_THROW(build_radial_mesh<2>(ConeSpec::polar_graph({0.5}), 64), DomainError);
  EXPECT_THROW(build_radial_mesh<3>(ConeSpec::round(0.5), 64), ContractViolation);

  auto m3 = build_radial_mesh<3>(ConeSpec::round(0.5, 3), 400);
  auto f = apply_neumann(sample_field(m3, [](const ChartPoint<3>&) { return 1.0; }));
  EXPECT_NEAR(area_graph(f), hyperbolic_cap_area(0.5, 3), 1e-4);
}

TEST(RadialMesh, JetsMatchTheCartesianFormulaForRadialFields) {
  auto mesh = build_radial_mesh<3>(ConeSpec::round(0.5, 3), 128);
  auto f = apply_neumann(sample_field(mesh, [](const ChartPoint<3>& x) { return 1.0 + x.squaredNorm(); }));
  for (int k = 0; k < mesh->size() - 1; ++k) {
    const auto jet = jet_at(f, k);
    const double r = mesh->x(k).norm();
    if (k > 0) EXPECT_NEAR(jet.du[0], 2.0 * r, 1e-12);
    if (k > 0) EXPECT_NEAR((*jet.d2u)(0, 0), 2.0, 1e-9);
    if (k > 0) EXPECT_NEAR((*jet.d2u)(1, 1), 2.0, 1e-9);
  }
}
