#include "bladectl/diagnostics.hpp"
#include "blade_fixture.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace bladectl;

namespace {

VerifyContext context_for(const GeneralPlantSpec& spec, const fixture::Synthesized& s, const ObserverKernelSet& os,
                          const ObserverGainSet& og) {
  VerifyContext c;
  c.spec = &spec;
  c.kernels = &s.ks;
  c.inverse = &s.iv;
  c.gains = &s.g;
  c.observer_kernels = &os;
  c.observer_gains = &og;
  c.grid.Nx = 21;
  c.grid.dt = 1e-3;
  c.grid.t_final = 0.5;
  return c;
}

const CheckRow* find_row(const VerifyReport& r, const std::string& name) {
  for (const auto& row : r.rows)
    if (row.check == name) return &row;
  return nullptr;
}

}  // namespace

TEST(Omega, TrivialCases) {
  auto s = PlantState::zeros(21, 1, 2);
  EXPECT_EQ(omega0(s, 0.05), 0.0);
  s.X(0) = 2.0;
  EXPECT_DOUBLE_EQ(omega0(s, 0.05), 4.0);
}

TEST(Omega, ReferenceInitialDataMatchesExactIntegrals) {
  const auto spec = fixture::weak_thermal_blade();
  const int Nx = 21;
  const Vec x = unit_grid(Nx);
  auto s = PlantState::zeros(Nx, 1, 2);
  s.z = 1.0;
  s.X(0) = 2.0;
  s.d << 7400.0, 7400.0;
  const double L = (spec.q * s.d)(0) + (spec.p2 * s.X)(0);
  for (int i = 0; i < Nx; ++i) {
    s.xi(i) = s.eta(i) = 2.0 * std::sin(2 * M_PI * x(i));
    s.u(i) = L * (1.0 - x(i));
  }
  // |xi|^2 = 2, |xi_x|^2 = 8 pi^2; |u|^2 = L^2/3, |u_x|^2 = L^2
  const double exact = 1.0 + 2.0 * (2.0 + 8.0 * M_PI * M_PI) + 4.0 + L * L / 3.0 + L * L;
  EXPECT_NEAR(omega0(s, 1.0 / (Nx - 1)), exact, 1e-2 * exact);
}

TEST(FitDecay, ExactExponential) {
  std::vector<double> t, v;
  for (int k = 0; k <= 500; ++k) {
    t.push_back(0.01 * k);
    v.push_back(3.0 * std::exp(-2.0 * t.back()));
  }
  const DecayFit f = fit_decay(t, v, 1.0, 5.0);
  EXPECT_NEAR(f.rate, -2.0, 1e-3);
  EXPECT_GT(f.r2, 0.999);
}

TEST(FitDecay, ConstantSeries) {
  std::vector<double> t, v;
  for (int k = 0; k <= 100; ++k) {
    t.push_back(0.05 * k);
    v.push_back(0.7);
  }
  EXPECT_NEAR(fit_decay(t, v, 0.0, 5.0).rate, 0.0, 1e-12);
}

TEST(Backstepping, ZeroKernelsAndZeroState) {
  const auto spec = GeneralPlantSpec::zero_coupling();
  const KernelSet ks = solve_control_kernels_series(spec, RowVec::Zero(1), 6);
  const PlantState s = random_smooth_state(spec, 41, 3);
  EXPECT_LT((apply_backstepping(s, ks) - s.xi).cwiseAbs().maxCoeff(), 1e-15);
  const auto blade = fixture::synthesize_blade(fixture::weak_thermal_blade(), 201);
  const BacksteppingTransform T(blade.ks, 41);
  EXPECT_EQ(T.forward(PlantState::zeros(41, 1, 2)).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Backstepping, RoundTripOnRandomStates) {
  const auto spec = fixture::weak_thermal_blade();
  const auto s = fixture::synthesize_blade(spec, 201);
  const BacksteppingTransform T(s.ks, 41);
  double worst = 0.0;
  for (unsigned long seed = 1; seed <= 50; ++seed) {
    const PlantState st = random_smooth_state(spec, 41, seed);
    const Vec beta = T.forward(st);
    const Vec back = T.inverse(beta, st.eta, st.u, st.X, st.d);
    worst = std::max(worst, (back - st.xi).cwiseAbs().maxCoeff() / st.xi.cwiseAbs().maxCoeff());
  }
  EXPECT_LE(worst, 1e-6);
}

TEST(VerifySuites, ZeroCouplingPassesEverySuite) {
  const auto spec = GeneralPlantSpec::zero_coupling();
  const auto s = fixture::synthesize_blade(spec, 201);
  const auto os = solve_observer_kernels(spec, spec.c0 + 5.0);
  const auto og = synthesize_observer_gains(spec, os, default_observer_poles(1), default_observer_poles(2));
  const VerifyContext c = context_for(spec, s, os, og);
  for (const auto& name : verify_suite_names()) {
    const VerifyReport r = verify_suite(name, c);
    EXPECT_TRUE(r.pass()) << name;
  }
}

TEST(VerifySuites, DoubledLKernelFailsDiagonal) {
  const auto spec = fixture::weak_thermal_blade();
  auto s = fixture::synthesize_blade(spec, 201);
  const auto os = solve_observer_kernels(spec, spec.c0 + 5.0);
  const auto og = synthesize_observer_gains(spec, os, default_observer_poles(1), default_observer_poles(2));
  {
    const VerifyReport good = verify_suite("kernels", context_for(spec, s, os, og));
    const CheckRow* row = find_row(good, "l_diagonal");
    ASSERT_NE(row, nullptr);
    EXPECT_TRUE(row->pass);
  }
  s.ks.l *= 2.0;
  const VerifyReport bad = verify_suite("kernels", context_for(spec, s, os, og));
  EXPECT_FALSE(bad.pass());
  const CheckRow* row = find_row(bad, "l_diagonal");
  ASSERT_NE(row, nullptr);
  EXPECT_FALSE(row->pass);
}
