#include "bladectl/control.hpp"
#include "blade_fixture.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace bladectl;

namespace {

KernelSet zero_set(int Nk, int n, int m) {
  KernelSet ks;
  ks.x = unit_grid(Nk);
  ks.k = ks.l = ks.p = ks.p_y = Mat::Zero(Nk, Nk);
  ks.gamma = Mat::Zero(Nk, n);
  ks.Upsilon = Mat::Zero(Nk, m);
  ks.py0 = Vec::Zero(Nk);
  ks.K = RowVec::Zero(n);
  return ks;
}

}  // namespace

TEST(PlacePoles, ScalarFormula) {
  Mat A(1, 1), B(1, 1);
  A << 3.0;
  B << 2.0;
  const RowVec K = place_poles(A, B, {{-2.0, 0.0}});
  EXPECT_NEAR(K(0), (-2.0 - 3.0) / 2.0, 1e-14);
}

TEST(PlacePoles, DoubleIntegratorCompanion) {
  Mat A(2, 2), B(2, 1);
  A << 0, 1, 0, 0;
  B << 0, 1;
  const RowVec K = place_poles(A, B, {{-1.0, 0.0}, {-2.0, 0.0}});
  EXPECT_NEAR(K(0), -2.0, 1e-12);
  EXPECT_NEAR(K(1), -3.0, 1e-12);
}

TEST(TargetCoeffs, ZeroKernelReduction) {
  auto spec = GeneralPlantSpec::zero_coupling();
  spec.f11 = [](double x, double y) { return x - 2 * y; };
  spec.g1 = [](double x) { return 1.0 + x; };
  spec.D1 = [](double x) { return RowVec::Constant(1, std::cos(x)); };
  spec.G1 = [](double x) { RowVec r(2); r << x, -x; return r; };
  const int Nk = 51;
  KernelSet ks = zero_set(Nk, 1, 2);
  ks.K = RowVec::Constant(1, -1.5);
  const InverseKernelSet iv = solve_inverse_kernels(spec, ks);
  const TargetCoeffs t = compute_target_coeffs(spec, ks, iv);
  double e11 = 0, eD1 = 0, eD2 = 0;
  for (int i = 0; i < Nk; ++i) {
    const double x = ks.x(i);
    for (int j = 0; j <= i; ++j) e11 = std::max(e11, std::abs(t.F11(i, j) - spec.f11(x, ks.x(j))));
    eD1 = std::max(eD1, std::abs(t.D1(i, 0) - (std::cos(x) + (1.0 + x) * -1.5)));
    eD2 = std::max(eD2, (t.D2.row(i) - spec.G1(x)).norm());
  }
  EXPECT_LT(e11, 1e-14);
  EXPECT_LT(eD1, 1e-14);
  EXPECT_LT(eD2, 1e-14);
}

TEST(TargetCoeffs, NoG1MeansNoGainDependence) {
  auto spec = GeneralPlantSpec::zero_coupling();
  spec.D1 = [](double x) { return RowVec::Constant(1, 1.0 + x * x); };
  KernelSet a = zero_set(41, 1, 2), b = zero_set(41, 1, 2);
  a.K(0) = -1.0;
  b.K(0) = -7.0;
  const auto ta = compute_target_coeffs(spec, a, solve_inverse_kernels(spec, a));
  const auto tb = compute_target_coeffs(spec, b, solve_inverse_kernels(spec, b));
  EXPECT_EQ((ta.D1 - tb.D1).cwiseAbs().maxCoeff(), 0.0);
}

TEST(HGains, ZeroKernelReduction) {
  auto spec = GeneralPlantSpec::zero_coupling();
  spec.c0 = 0.7;
  KernelSet ks = zero_set(41, 1, 2);
  ks.K(0) = -1.0;
  const InverseKernelSet iv = solve_inverse_kernels(spec, ks);
  const GainSet g = synthesize_gains(spec, ks, iv, 10.0);
  EXPECT_DOUBLE_EQ(g.h1, spec.c0);
  EXPECT_DOUBLE_EQ(g.h3, spec.c0);
  EXPECT_EQ(g.h4, 0.0);
  EXPECT_EQ(g.H10.cwiseAbs().maxCoeff(), 0.0);
}

TEST(HGains, NoSigmaLeavesOdeTerm) {
  auto spec = GeneralPlantSpec::zero_coupling();
  spec.c0 = 0.4;
  spec.c1s = 0.3;
  spec.q0 = 1.5;
  spec.A(0, 0) = 0.9;
  KernelSet ks = zero_set(41, 1, 2);
  ks.K(0) = -2.9;
  ks.gamma.setConstant(0.6);
  const InverseKernelSet iv = solve_inverse_kernels(spec, ks);
  ASSERT_EQ(iv.sigma.cwiseAbs().maxCoeff(), 0.0);
  const GainSet g = synthesize_gains(spec, ks, iv, 10.0);
  const double lam1 = iv.lambda(40, 0);
  const double ref = lam1 * (spec.A(0, 0) + spec.B(0, 0) * ks.K(0)) - (spec.q0 * spec.c1s + spec.c0) * lam1;
  EXPECT_NEAR(g.h5(0), ref, 1e-12);
}

TEST(NGains, N6ForAnySpec) {
  const auto s = fixture::synthesize_blade(fixture::weak_thermal_blade(), 101);
  EXPECT_NEAR(s.g.n6, -s.spec.q1 / (s.spec.eps1 * s.spec.q0), 1e-14);
}

TEST(NGains, ZeroKernelN1) {
  auto spec = GeneralPlantSpec::zero_coupling();
  spec.c1 = [](double x) { return 0.3 + x; };
  spec.q0 = 2.0;
  spec.q1 = 0.5;
  spec.eps1 = 0.7;
  KernelSet ks = zero_set(41, 1, 2);
  ks.K(0) = -1.0;
  const GainSet g = synthesize_gains(spec, ks, solve_inverse_kernels(spec, ks), 10.0);
  EXPECT_NEAR(g.n1, (-10.0 + (spec.q1 / spec.eps1) * 1.3) / spec.q0, 1e-13);
}

TEST(ControlLaw, ZeroStateAndSingleChannel) {
  const auto s = fixture::synthesize_blade(fixture::weak_thermal_blade(), 101);
  const ControlLaw law(s.g, 21);
  auto st = PlantState::zeros(21, 1, 2);
  EXPECT_EQ(law.U(st), 0.0);
  st.xi(0) = 1.0;
  double sum = 0.0;
  for (const auto& [name, v] : law.terms(st)) {
    if (name == "n5*xi(0)") EXPECT_EQ(v, s.g.n5);
    sum += v;
  }
  EXPECT_EQ(law.U(st), sum);
  // the measured channel alone
  EXPECT_EQ(law.U_of(PlantState::zeros(21, 1, 2), 1.0), s.g.n5);
}

TEST(ControlLaw, OutputLawOnExactCopy) {
  const auto s = fixture::synthesize_blade(fixture::weak_thermal_blade(), 101);
  const ControlLaw law(s.g, 21);
  auto st = PlantState::zeros(21, 1, 2);
  const Vec x = unit_grid(21);
  for (int i = 0; i < 21; ++i) {
    st.xi(i) = std::sin(2 * M_PI * x(i)) + 0.2;
    st.eta(i) = std::cos(M_PI * x(i));
    st.u(i) = 1.0 - x(i);
  }
  st.X(0) = 2.0;
  st.d << 1.0, -0.5;
  st.z = 0.3;
  EXPECT_EQ(law.U_of(st, st.xi(0)), law.U(st));
}

TEST(CheckC1, ScalarLyapunovBound) {
  const auto spec = GeneralPlantSpec::zero_coupling();
  const RowVec K = RowVec::Constant(1, -1.0);  // A + B K = -1
  const C1Certificate c = check_c1(spec, K, 10.0);
  EXPECT_TRUE(c.pass);
  EXPECT_NEAR(c.P1(0, 0), 0.5, 1e-12);
  EXPECT_NEAR(c.bound, std::exp(1.0) + 0.5, 1e-3);
  EXPECT_FALSE(check_c1(spec, K, 3.0).pass);
}

namespace {

// beta_t(1) from the time derivative of the transform versus the boundary-gain formula.
double boundary_derivative_gap(int Nk, double* scale) {
  const auto s = fixture::synthesize_blade(fixture::weak_thermal_blade(), Nk);
  const auto& sp = s.spec;
  Grid gr;
  gr.Nx = Nk;
  gr.dt = 1e-6;
  const PlantDiscretization disc(sp, gr);
  const Vec x = unit_grid(Nk);
  const double h = 1.0 / (Nk - 1);
  const int N = Nk - 1;
  auto st = PlantState::zeros(Nk, 1, 2);
  st.X(0) = 1.0;
  for (int i = 0; i < Nk; ++i) st.eta(i) = (sp.C * st.X)(0, 0) * (1 - x(i));
  const double uL = (sp.q * st.d)(0, 0) + (sp.p2 * st.X)(0, 0);
  for (int i = 0; i < Nk; ++i) st.u(i) = (1 - x(i)) * uL;
  st.z = (st.xi(N) + sp.q1 * st.eta(N)) / sp.q0;
  const double U = 0.7;

  Vec Sxi, Seta;
  disc.sources(st, Sxi, Seta);
  const Vec xit = (gradient(st.xi, h) + Sxi) / sp.eps2;
  const Vec etat = (-gradient(st.eta, h) + Seta) / sp.eps1;
  Vec ut = Vec::Zero(Nk);
  for (int i = 1; i < N; ++i) ut(i) = sp.kappa0 * (st.u(i + 1) - 2 * st.u(i) + st.u(i - 1)) / (h * h);
  const Vec Xd = sp.A * st.X + sp.B * st.xi(0);
  const Vec dd = sp.Ad * st.d;
  ut(0) = (sp.q * dd)(0, 0) + (sp.p2 * Xd)(0, 0);
  const double xit1 = -sp.q1 * etat(N) + sp.q0 * (sp.c0 * st.z + sp.c1s * st.xi(N) + U);
  const Vec w = trapz_weights(Nk, h);
  auto transform = [&](const Vec& xi, const Vec& eta, const Vec& u, const Vec& X, const Vec& d, int i) {
    double b = xi(i) + s.ks.gamma.row(i).dot(X) + s.ks.Upsilon.row(i).dot(d);
    for (int j = 0; j <= i; ++j) {
      const double wj = i == 0 ? 0 : ((j == 0 || j == i) ? 0.5 * h : h);
      b -= wj * (s.ks.k(i, j) * xi(j) + s.ks.l(i, j) * eta(j));
    }
    for (int j = 0; j < Nk; ++j) b -= w(j) * s.ks.p(i, j) * u(j);
    return b;
  };
  const double direct = transform(xit, etat, ut, Xd, dd, N) - xit(N) + xit1;
  Vec beta(Nk);
  for (int i = 0; i < Nk; ++i) beta(i) = transform(st.xi, st.eta, st.u, st.X, st.d, i);
  const Vec uy = gradient(st.u, h);
  const auto& g = s.g;
  const double formula = -sp.q1 * etat(N) + g.h1 * beta(N) + g.h2 * beta(0) + g.h3 * st.eta(N) +
                         g.h4 * st.eta(0) + g.h5.dot(st.X) + g.h6.dot(st.d) + sp.q0 * U +
                         w.dot(g.H7.cwiseProduct(beta)) + w.dot(g.H8.cwiseProduct(st.eta)) +
                         w.dot(g.H9.cwiseProduct(st.u)) + w.dot(g.H10.cwiseProduct(uy));
  *scale = std::abs(direct);
  return std::abs(direct - formula);
}

}  // namespace

TEST(BoundaryGains, TimeDerivativeOracle) {
  double s1 = 0, s2 = 0;
  const double g1 = boundary_derivative_gap(201, &s1);
  const double g2 = boundary_derivative_gap(401, &s2);
  EXPECT_LT(g1, 2e-3 * s1);
  EXPECT_LT(g2, g1);
}
