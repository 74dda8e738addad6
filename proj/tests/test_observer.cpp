#include "bladectl/observer.hpp"
#include "blade_fixture.hpp"

#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

using namespace bladectl;

namespace {

struct ObserverFixture {
  GeneralPlantSpec spec;
  ObserverKernelSet os;
  ObserverGainSet g;
};

ObserverFixture blade_observer(int Nk = 101) {
  ObserverFixture f{fixture::weak_thermal_blade(), {}, {}};
  KernelOptions o;
  o.Nk = Nk;
  f.os = solve_observer_kernels(f.spec, f.spec.c0 + 5.0, o);
  f.g = synthesize_observer_gains(f.spec, f.os, default_observer_poles(1), default_observer_poles(2));
  return f;
}

PlantState smooth_state(int Nx, double phase) {
  auto s = PlantState::zeros(Nx, 1, 2);
  const Vec x = unit_grid(Nx);
  for (int i = 0; i < Nx; ++i) {
    s.xi(i) = std::sin(2 * M_PI * x(i) + phase);
    s.eta(i) = 0.5 * std::cos(M_PI * x(i) + phase);
    s.u(i) = (1 - x(i)) * std::sin(phase + 1.0);
  }
  s.X(0) = 1.0 + phase;
  s.d << std::cos(phase), 0.5;
  s.z = 0.2 * phase;
  return s;
}

std::vector<double> sorted_real(const Mat& M) {
  Eigen::EigenSolver<Mat> es(M);
  std::vector<double> v;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    EXPECT_NEAR(es.eigenvalues()(i).imag(), 0.0, 1e-9);
    v.push_back(es.eigenvalues()(i).real());
  }
  std::sort(v.begin(), v.end());
  return v;
}

}  // namespace

TEST(ObserverGains, GammaZFromM) {
  const auto f = blade_observer();
  EXPECT_DOUBLE_EQ(f.g.Gamma_z, f.os.M(0) / f.spec.eps2);
}

TEST(ObserverGains, InjectionProfilesReduceToKernelTraces) {
  auto spec = GeneralPlantSpec::zero_coupling();
  spec.eps1 = 0.9;
  spec.eps2 = 1.4;
  spec.c1 = [](double x) { return 0.5 - x; };
  spec.c2 = [](double x) { return 0.3 + 0.1 * x; };
  const auto os = solve_observer_kernels(spec, spec.c0 + 5.0);
  const auto g = synthesize_observer_gains(spec, os, default_observer_poles(1), default_observer_poles(2));
  ASSERT_GT(os.phi.col(0).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_LT((g.Gamma_eta - spec.eps1 / spec.eps2 * os.phi_x0()).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LT((g.Gamma_xi - os.psi_x0()).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(ObserverGains, FiniteDimensionalSpectra) {
  const auto f = blade_observer();
  const auto ex = sorted_real(f.spec.A - f.g.L_x * f.spec.C);
  ASSERT_EQ(ex.size(), 1u);
  EXPECT_NEAR(ex[0], -2.0, 1e-9);
  const auto ed = sorted_real(f.spec.Ad - f.g.L_d * f.spec.q);
  ASSERT_EQ(ed.size(), 2u);
  EXPECT_NEAR(ed[0], -3.0, 1e-9);
  EXPECT_NEAR(ed[1], -2.0, 1e-9);
}

TEST(ObserverStep, ExactCopyMatchesPlantStep) {
  const auto f = blade_observer();
  Grid g;
  const PlantDiscretization disc(f.spec, g);
  const Observer obs(disc, f.g);
  PlantState p = smooth_state(g.Nx, 0.3);
  for (int k = 0; k < 50; ++k) {
    const PlantState pn = disc.step(p, 0.4);
    const PlantState on = obs.step(p, disc.measure(p), disc.measure(pn), 0.4);
    ASSERT_EQ((on.xi - pn.xi).cwiseAbs().maxCoeff(), 0.0);
    ASSERT_EQ((on.eta - pn.eta).cwiseAbs().maxCoeff(), 0.0);
    ASSERT_EQ((on.u - pn.u).cwiseAbs().maxCoeff(), 0.0);
    ASSERT_EQ((on.X - pn.X).norm(), 0.0);
    ASSERT_EQ((on.d - pn.d).norm(), 0.0);
    ASSERT_EQ(on.z, pn.z);
    p = pn;
  }
}

TEST(ObserverStep, ErrorDynamicsIndependentOfPlant) {
  // zero plant: the observer trace is the (sign-flipped) error system; with a nonzero plant the
  // difference observer - plant must follow the same trajectory.
  const auto f = blade_observer();
  Grid g;
  const PlantDiscretization disc(f.spec, g);
  const Observer obs(disc, f.g);
  const PlantState e0 = smooth_state(g.Nx, 1.1);
  PlantState zero = PlantState::zeros(g.Nx, 1, 2), err = e0;
  PlantState plant = smooth_state(g.Nx, 0.2), o = plant;
  o.xi += e0.xi;
  o.eta += e0.eta;
  o.u += e0.u;
  o.X += e0.X;
  o.d += e0.d;
  o.z += e0.z;
  double worst = 0.0;
  for (int k = 0; k < 300; ++k) {
    const double U = 0.1 * std::sin(0.01 * k);
    err = obs.step(err, disc.measure(zero), disc.measure(zero), 0.0);
    const PlantState pn = disc.step(plant, U);
    o = obs.step(o, disc.measure(plant), disc.measure(pn), U);
    plant = pn;
    const PlantState diff = state_difference(o, plant);
    worst = std::max({worst, (diff.xi - err.xi).cwiseAbs().maxCoeff(), (diff.eta - err.eta).cwiseAbs().maxCoeff(),
                      (diff.u - err.u).cwiseAbs().maxCoeff(), (diff.X - err.X).norm(), (diff.d - err.d).norm(),
                      std::abs(diff.z - err.z)});
  }
  EXPECT_LT(worst, 1e-9);
}

TEST(ErrorNorm, TrivialCases) {
  const PlantState p = smooth_state(21, 0.4);
  EXPECT_EQ(error_norm_Omega_e(p, p, 0.05), 0.0);
  const auto zero = PlantState::zeros(21, 1, 2);
  auto o = zero;
  o.z = 1.0;
  EXPECT_DOUBLE_EQ(error_norm_Omega_e(zero, o, 0.05), 1.0);
}

namespace {

ObserverKernelSet fabricated(int Nk, double psibar) {
  ObserverKernelSet os;
  os.x = unit_grid(Nk);
  os.psi = Mat::Zero(Nk, Nk);
  for (int i = 0; i < Nk; ++i)
    for (int j = 0; j <= i; ++j) os.psi(i, j) = psibar;
  os.phi = Mat::Zero(Nk, Nk);
  os.M = Vec(Nk);
  for (int i = 0; i < Nk; ++i) os.M(i) = 1.0 + os.x(i);
  os.L_z = 5.0;
  return os;
}

}  // namespace

TEST(ObserverTarget, ZeroKernelReduction) {
  auto spec = GeneralPlantSpec::zero_coupling();
  spec.eps2 = 1.3;
  spec.c2 = [](double x) { return 0.2 + x; };
  spec.D1 = [](double x) { return RowVec::Constant(1, x); };
  spec.D2 = [](double x) { return RowVec::Constant(1, 1.0 - x); };
  const auto os = fabricated(51, 0.0);
  const auto T = compute_observer_target_coeffs(spec, os);
  for (Eigen::Index i = 0; i < os.x.size(); ++i) {
    const double x = os.x(i);
    EXPECT_NEAR(T.N2(i, 0), 1.0 - x, 1e-14);
    EXPECT_NEAR(T.N1(i, 0), x, 1e-14);
    EXPECT_NEAR(T.G1(i), -os.M(i) * spec.c2(x) / spec.eps2, 1e-14);
  }
}

TEST(ObserverTarget, ConstantPsiResolvent) {
  auto spec = GeneralPlantSpec::zero_coupling();
  const double Dbar = 1.5, psibar = 0.5;
  spec.D2 = [=](double) { return RowVec::Constant(1, Dbar); };
  const auto os = fabricated(201, psibar);
  const auto T = compute_observer_target_coeffs(spec, os);
  double err = 0.0;
  for (Eigen::Index i = 0; i < os.x.size(); ++i) err = std::max(err, std::abs(T.N2(i, 0) - Dbar * std::exp(-psibar * os.x(i))));
  EXPECT_LT(err, 1e-6);
}
