#include "bladectl/kernels.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace bladectl;

namespace {

RowVec zeroK() { return RowVec::Zero(1); }

double lower_max(const Mat& M) {
  double m = 0.0;
  for (Eigen::Index i = 0; i < M.rows(); ++i)
    for (Eigen::Index j = 0; j <= i; ++j) m = std::max(m, std::abs(M(i, j)));
  return m;
}

}  // namespace

TEST(SeriesKernels, ZeroForcingLeavesOnlyUpsilon) {
  auto spec = GeneralPlantSpec::zero_coupling();
  spec.G2 = [](double) { return RowVec::Unit(2, 0); };
  const KernelSet ks = solve_control_kernels_series(spec, zeroK(), 10);
  EXPECT_EQ(lower_max(ks.k), 0.0);
  EXPECT_EQ(lower_max(ks.l), 0.0);
  EXPECT_EQ(ks.p.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(ks.gamma.cwiseAbs().maxCoeff(), 0.0);
  // G2 = e1 and Ad the rotation generator: int_0^x e1 exp(eps2 Ad (x-s)) ds in closed form
  const double w = M_PI * spec.eps2;
  double err = 0.0;
  for (Eigen::Index i = 0; i < ks.x.size(); ++i) {
    const double x = ks.x(i);
    err = std::max(err, std::abs(ks.Upsilon(i, 0) - std::sin(w * x) / w));
    err = std::max(err, std::abs(ks.Upsilon(i, 1) - (1.0 - std::cos(w * x)) / w));
  }
  EXPECT_LT(err, 1e-8);
}

TEST(SeriesKernels, ConstantC2DiagonalIdentity) {
  auto spec = GeneralPlantSpec::zero_coupling();
  spec.eps1 = 0.8;
  spec.eps2 = 1.3;
  const double cbar = 0.7;
  spec.c2 = [=](double) { return cbar; };
  const KernelSet ks = solve_control_kernels_series(spec, zeroK(), 10);
  double err = 0.0;
  for (Eigen::Index i = 0; i < ks.x.size(); ++i)
    err = std::max(err, std::abs(ks.l(i, i) + spec.eps1 * cbar / (spec.eps1 + spec.eps2)));
  EXPECT_LT(err, 1e-12);
}

TEST(IterativeKernels, ZeroCouplingStopsImmediately) {
  const auto spec = GeneralPlantSpec::zero_coupling();
  const KernelSet ks = solve_control_kernels_iterative(spec, zeroK(), 400, 1e-8);
  EXPECT_EQ(lower_max(ks.k), 0.0);
  EXPECT_EQ(lower_max(ks.l), 0.0);
  EXPECT_EQ(ks.p.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_LE(ks.term_norms.size(), 2u);
}

TEST(ParabolicKernel, ZeroForcing) {
  const auto spec = GeneralPlantSpec::zero_coupling();
  const PSolution S = solve_p(spec, Mat::Zero(101, 101), 32);
  EXPECT_EQ(S.p.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(S.py0.cwiseAbs().maxCoeff(), 0.0);
}

TEST(ParabolicKernel, UnitMuSineCoefficientsClosedForm) {
  auto spec = GeneralPlantSpec::zero_coupling();
  spec.eps2 = 1.2;
  spec.kappa0 = 0.9;
  spec.mu2 = [](double) { return 1.0; };
  const int Nk = 101, Nf = 8;
  const PSolution S = solve_p(spec, Mat::Zero(Nk, Nk), Nf);
  const Vec x = unit_grid(Nk);
  double err = 0.0;
  for (int n = 1; n <= Nf; ++n) {
    const double lam = spec.eps2 * spec.kappa0 * n * n * M_PI * M_PI, w = n * M_PI;
    for (int i = 0; i < Nk; ++i) {
      // -2 e^{-lam x} int_0^x e^{lam s} sin(w s) ds
      const double xx = x(i);
      const double I = (std::exp(lam * xx) * (lam * std::sin(w * xx) - w * std::cos(w * xx)) + w) / (lam * lam + w * w);
      err = std::max(err, std::abs(S.coeff(i, n - 1) + 2.0 * std::exp(-lam * xx) * I));
    }
  }
  EXPECT_LT(err, 1e-9);
}

namespace {

KernelSet toy_set(int Nk, double kbar) {
  KernelSet ks;
  ks.x = unit_grid(Nk);
  ks.k = Mat::Zero(Nk, Nk);
  for (int i = 0; i < Nk; ++i)
    for (int j = 0; j <= i; ++j) ks.k(i, j) = kbar;
  ks.l = Mat::Zero(Nk, Nk);
  ks.p = Mat::Zero(Nk, Nk);
  ks.p_y = Mat::Zero(Nk, Nk);
  ks.gamma = Mat::Zero(Nk, 1);
  ks.Upsilon = Mat::Zero(Nk, 2);
  ks.py0 = Vec::Zero(Nk);
  ks.K = RowVec::Zero(1);
  return ks;
}

}  // namespace

TEST(InverseKernels, ZeroDirectGivesZeroInverse) {
  const auto spec = GeneralPlantSpec::zero_coupling();
  const InverseKernelSet iv = solve_inverse_kernels(spec, toy_set(101, 0.0));
  EXPECT_EQ(lower_max(iv.rho), 0.0);
  EXPECT_EQ(lower_max(iv.sigma), 0.0);
  EXPECT_EQ(iv.varrho.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(iv.lambda.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(iv.vartheta.cwiseAbs().maxCoeff(), 0.0);
}

TEST(InverseKernels, ConstantKernelResolvent) {
  const auto spec = GeneralPlantSpec::zero_coupling();
  const double kbar = 0.8;
  const int Nk = 801;
  const InverseKernelSet iv = solve_inverse_kernels(spec, toy_set(Nk, kbar));
  double err = 0.0;
  for (int i = 0; i < Nk; ++i)
    for (int j = 0; j <= i; ++j)
      err = std::max(err, std::abs(iv.rho(i, j) - kbar * std::exp(kbar * (iv.x(i) - iv.x(j)))));
  EXPECT_LT(err, 1e-6);
}

TEST(ObserverKernels, MClosedFormWithoutC1) {
  auto spec = GeneralPlantSpec::zero_coupling();
  spec.eps2 = 1.1;
  spec.c0 = 2.0 * 0.3 / 1.5;
  spec.q0 = 1.7;
  const double Lz = spec.c0 + 5.0;
  const ObserverKernelSet os = solve_observer_kernels(spec, Lz);
  double err = 0.0, scale = 0.0;
  for (Eigen::Index i = 0; i < os.x.size(); ++i) {
    const double ref = spec.eps2 * (Lz / spec.q0) * std::exp(spec.eps2 * spec.c0 * (1.0 - os.x(i)));
    err = std::max(err, std::abs(os.M(i) - ref));
    scale = std::max(scale, std::abs(ref));
  }
  EXPECT_LT(err, 1e-8 * scale);
}

TEST(ObserverKernels, PhiDiagonalIdentity) {
  auto spec = GeneralPlantSpec::zero_coupling();
  spec.c1 = [](double x) { return 0.4 + 0.2 * x; };
  const ObserverKernelSet os = solve_observer_kernels(spec, spec.c0 + 5.0);
  double err = 0.0;
  for (Eigen::Index i = 0; i < os.x.size(); ++i)
    err = std::max(err, std::abs(os.phi(i, i) - spec.eps1 * spec.c1(os.x(i)) / (spec.eps1 + spec.eps2)));
  EXPECT_LT(err, 1e-10);
}

TEST(KernelResidual, ZeroKernelsZeroResidual) {
  const auto spec = GeneralPlantSpec::zero_coupling();
  const KernelSet ks = solve_control_kernels_series(spec, zeroK(), 6);
  for (const auto& [name, v] : kernel_residual(spec, ks).entries) EXPECT_EQ(v, 0.0) << name;
}
