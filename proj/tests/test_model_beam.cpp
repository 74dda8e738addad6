#include "bladectl/model_beam.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace bladectl;

TEST(Nondimensionalize, TableValuesShearAndArea) {
  const PhysicalBeamParams p;
  const auto d = nondimensionalize(p);
  // hand arithmetic: 77.5e9 * 1 / (200e9 * 1.3876e-4)
  EXPECT_NEAR(d.G, 2792.6, 0.05);
  EXPECT_DOUBLE_EQ(d.A, 0.005);
  EXPECT_NEAR(d.b, std::sqrt(0.005 * 0.53066 * 2792.6), 1e-4);
  EXPECT_NEAR(d.b, 2.7221, 1e-4);
}

TEST(Nondimensionalize, RectangularSectionI0) {
  const PhysicalBeamParams p;
  const auto d = nondimensionalize(p);
  const double Lh = std::sqrt(12.0 * 0.00013876 / 0.005);
  EXPECT_NEAR(d.I0, 1.18e-5 * 0.005 * Lh / (2.0 * 0.00013876), 1e-15);
  EXPECT_NEAR(d.I0, 1.22686e-4, 1e-8);
}

TEST(RiemannProfiles, ZeroExponent) {
  const auto d = nondimensionalize(PhysicalBeamParams{});
  const Vec x = unit_grid(11);
  const auto [p1, p2] = riemann_profiles(d, 0.0, 0.0, x);
  EXPECT_LT((p1 - Vec::Ones(11)).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LT((p2 - Vec::Ones(11)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(RiemannProfiles, UnitAtOrigin) {
  const auto d = nondimensionalize(PhysicalBeamParams{});
  const auto [p1, p2] = riemann_profiles(d, 1.0, 1.0, unit_grid(5));
  EXPECT_DOUBLE_EQ(p1(0), 1.0);
  EXPECT_DOUBLE_EQ(p2(0), 1.0);
}

TEST(BuildGeneralSpec, NoThermalNoAeroCouplingVanishes) {
  PhysicalBeamParams p;
  p.I0 = 0.0;
  p.k1 = p.k2 = 0.0;
  const auto d = nondimensionalize(p);
  const auto s = build_general_spec(d, p);
  for (double x : {0.0, 0.3, 0.7, 1.0}) {
    EXPECT_EQ(s.ev(s.mu1, x), 0.0);
    EXPECT_EQ(s.ev(s.mu2, x), 0.0);
    EXPECT_EQ(s.evD(s.D1, x).norm(), 0.0);
    EXPECT_EQ(s.evD(s.D2, x).norm(), 0.0);
    EXPECT_EQ(s.evG(s.G1, x).norm(), 0.0);
    EXPECT_EQ(s.evG(s.G2, x).norm(), 0.0);
    for (double y : {0.0, 0.5, 1.0}) {
      EXPECT_EQ(s.ev(s.f13, x, y), 0.0);
      EXPECT_EQ(s.ev(s.f23, x, y), 0.0);
    }
  }
}

TEST(BuildGeneralSpec, ScalarOdeCoefficient) {
  const PhysicalBeamParams p;
  const auto d = nondimensionalize(p);
  const auto s = build_general_spec(d, p);
  ASSERT_EQ(s.n(), 1);
  EXPECT_NEAR(s.A(0, 0), 1.0 / (std::sqrt(d.eps) - 1.0), 1e-12 * std::abs(s.A(0, 0)));
  EXPECT_NO_THROW(s.validate());
}

TEST(InnerLoop, ZeroInputs) {
  EXPECT_EQ(inner_loop_u1(2.7, 1e-4, 0.0, Vec::Zero(101), Vec::Zero(101)), 0.0);
}

TEST(InnerLoop, UnitSlopeClosedForm) {
  const double b = 2.7221;
  const double u1 = inner_loop_u1(b, 1e-4, 0.0, Vec::Ones(2001), Vec::Zero(2001));
  // -b^2 int_0^1 cosh(b(1-y)) dy = -b sinh(b)
  EXPECT_NEAR(u1, -b * std::sinh(b), 1e-5 * b * std::sinh(b));
}

TEST(Reconstruct, ZeroStateZeroEnergy) {
  const PhysicalBeamParams p;
  const auto d = nondimensionalize(p);
  const auto s = build_general_spec(d, p);
  const auto st = PlantState::zeros(41, 1, 2);
  const auto F = reconstruct_physical(st, d, s);
  EXPECT_EQ(F.varpi.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(F.total(), 0.0);
}

TEST(Reconstruct, RigidVelocityContentHasNoSlope) {
  const PhysicalBeamParams p;
  const auto d = nondimensionalize(p);
  const auto s = build_general_spec(d, p);
  const int n = 41;
  const Vec x = unit_grid(n);
  const auto [p1, p2] = riemann_profiles(d, d.k1, d.k2, x);
  auto st = PlantState::zeros(n, 1, 2);
  for (int i = 0; i < n; ++i) {
    st.xi(i) = std::sin(M_PI * x(i)) + 0.5;
    // general-form eta carries the boundary rescaling factor
    st.eta(i) = d.r() * p2(i) * st.xi(i) / p1(i);
  }
  const auto F = reconstruct_physical(st, d, s);
  EXPECT_LT(F.varpi_x.cwiseAbs().maxCoeff(), 1e-12);
}
