#include "bladectl/plant.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace bladectl;

namespace {

double bump(double x) {
  if (x <= 0.5 || x >= 0.9) return 0.0;
  const double s = std::sin(M_PI * (x - 0.5) / 0.4);
  return s * s;
}

struct TransportRun {
  double err;
  PlantResidual res;
};

TransportRun transport_run(int Nx) {
  const auto spec = GeneralPlantSpec::zero_coupling();
  Grid g;
  g.Nx = Nx;
  g.dt = 0.5 * spec.eps2 / (Nx - 1);
  g.t_final = 0.3 * spec.eps2;
  PlantDiscretization disc(spec, g, HeatScheme::BackwardEuler);
  auto s0 = PlantState::zeros(Nx, 1, 2);
  const Vec x = unit_grid(Nx);
  for (int i = 0; i < Nx; ++i) s0.xi(i) = bump(x(i));
  const Trace tr = simulate(disc, s0, nullptr, RecordPlan{1});
  const PlantState& last = tr.states.back();
  double err = 0.0;
  for (int i = 0; i < Nx; ++i) err = std::max(err, std::abs(last.xi(i) - bump(x(i) + last.t / spec.eps2)));
  return {err, residual(spec, g, tr)};
}

}  // namespace

TEST(Transport, ShiftErrorIsFirstOrder) {
  const auto a = transport_run(81), b = transport_run(161), c = transport_run(321);
  EXPECT_LT(a.err, 10.0 / 80);
  EXPECT_GT(a.err / b.err, 1.5);
  EXPECT_LT(a.err / b.err, 2.6);
  EXPECT_GT(b.err / c.err, 1.5);
  EXPECT_LT(b.err / c.err, 2.6);
}

TEST(Transport, ResidualHalvesWithGrid) {
  const auto a = transport_run(81), b = transport_run(161);
  EXPECT_GT(a.res.xi, 0.0);
  const double ratio = a.res.xi / b.res.xi;
  EXPECT_GT(ratio, 1.5);
  EXPECT_LT(ratio, 3.0);
}

TEST(Heat, SineModeAtReferenceSteps) {
  const auto spec = GeneralPlantSpec::zero_coupling();
  Grid g;
  g.Nx = 21;
  g.dt = 1e-3;
  g.t_final = 0.2;
  PlantDiscretization disc(spec, g);
  auto s0 = PlantState::zeros(g.Nx, 1, 2);
  const Vec x = unit_grid(g.Nx);
  for (int i = 0; i < g.Nx; ++i) s0.u(i) = std::sin(M_PI * x(i));
  const Trace tr = simulate(disc, s0, nullptr, RecordPlan{g.steps()});
  const PlantState& last = tr.states.back();
  ASSERT_NEAR(last.t, 0.2, 1e-12);
  Vec e(g.Nx);
  for (int i = 0; i < g.Nx; ++i) e(i) = last.u(i) - std::exp(-spec.kappa0 * M_PI * M_PI * 0.2) * std::sin(M_PI * x(i));
  EXPECT_LE(std::sqrt(trapz(e.cwiseAbs2(), g.dx())), 1e-3);
}

TEST(Disturbance, NormConserved) {
  const auto spec = GeneralPlantSpec::zero_coupling();
  Grid g;
  PlantDiscretization disc(spec, g);
  auto s0 = PlantState::zeros(g.Nx, 1, 2);
  s0.d << 7400.0, 7400.0;
  const Trace tr = simulate(disc, s0, nullptr);
  const double n0 = s0.d.norm();
  double worst = 0.0;
  for (const auto& d : tr.d) worst = std::max(worst, std::abs(d.norm() - n0));
  EXPECT_LE(worst / n0, 1e-9);
}

TEST(Simulate, ZeroDataGivesZeroTrace) {
  const auto spec = GeneralPlantSpec::zero_coupling();
  Grid g;
  g.t_final = 0.5;
  PlantDiscretization disc(spec, g);
  const Trace tr = simulate(disc, PlantState::zeros(g.Nx, 1, 2), nullptr, RecordPlan{1});
  ASSERT_FALSE(tr.diverged);
  for (const auto& s : tr.states) {
    EXPECT_EQ(s.xi.cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(s.eta.cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(s.u.cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(s.z, 0.0);
  }
  const PlantResidual r = residual(spec, g, tr);
  EXPECT_EQ(r.xi + r.eta + r.heat + r.X + r.d + r.z, 0.0);
}

TEST(Cfl, CoarseTimeStepRejected) {
  const auto spec = GeneralPlantSpec::zero_coupling();
  Grid g;
  g.dt = 1.0;
  EXPECT_THROW(PlantDiscretization::check_cfl(spec, g, HeatScheme::Explicit), Error);
}
