#pragma once

#include "bladectl/common.hpp"
#include "bladectl/kernels.hpp"
#include "bladectl/plant.hpp"

#include <complex>
#include <string>
#include <vector>

namespace bladectl {

// Ackermann placement for single-input pairs; returns K such that eig(A + B K) = desired.
RowVec place_poles(const Mat& A, const Mat& B, const std::vector<std::complex<double>>& desired);

// Coefficients of the target system (sampled on the kernel grid).
struct TargetCoeffs {
  Vec x;
  Mat F11, F12;  // lower triangle
  Mat F13;       // full square
  Mat D1, D2;    // Nk x n, Nk x m
};
TargetCoeffs compute_target_coeffs(const GeneralPlantSpec& spec, const KernelSet& ks, const InverseKernelSet& iv);

struct GainSet {
  Vec x;  // kernel grid
  RowVec K;
  double c1_acute = 10.0;
  // Dynamic-boundary gains.
  double h1 = 0, h2 = 0, h3 = 0, h4 = 0;
  RowVec h5, h6;
  Vec H7, H8, H9, H10;
  // Gains of the law in the original states.
  double n1 = 0, n2 = 0, n5 = 0, n6 = 0;
  RowVec n3, n4;
  Vec N7, N8, N9, N10;
  TargetCoeffs target;
};

// Boundary gains h1..h6, H7..H10 (independent of c1_acute).
void compute_h_gains(const GeneralPlantSpec& spec, const KernelSet& ks, const InverseKernelSet& iv, GainSet& g);
// Gains n1..n6, N7..N10 from the boundary gains.
void compute_n_gains(const GeneralPlantSpec& spec, const KernelSet& ks, GainSet& g);

GainSet synthesize_gains(const GeneralPlantSpec& spec, const KernelSet& ks, const InverseKernelSet& iv,
                         double c1_acute);

// State-feedback / output-feedback law evaluated on a plant grid of Nx nodes.
class ControlLaw {
public:
  ControlLaw(const GainSet& g, int Nx);
  // U from a full state.
  double U(const PlantState& s) const;
  // U from an observer state, with the measured xi(0,t) in the xi(0) channel.
  double U_of(const PlantState& obs, double xi0_measured) const;
  // Contribution of each term of U (same order as the law); sums to U(s).
  std::vector<std::pair<std::string, double>> terms(const PlantState& s) const;
  const GainSet& gains() const { return g_; }

private:
  GainSet g_;
  int Nx_;
  double dx_;
  Vec w7_, w8_, w9_, w10_;
};

// Second-order one-sided derivative at the right end.
double right_derivative(const Vec& f, double h);

struct C1Certificate {
  bool pass = false;
  double h = 0.0;       // smallest admissible h (bound value)
  double bound = 0.0;   // c1_acute must exceed this
  double lambda_min = 0.0;
  Mat P1, Q1;
  std::string message;
};
C1Certificate check_c1(const GeneralPlantSpec& spec, const RowVec& K, double c1_acute);

// Solves P M + M^T P = -Q.
Mat solve_lyapunov(const Mat& M, const Mat& Q);

// Writes gains_scalar.csv and gains_functions.csv into dir; returns the file names.
std::vector<std::string> export_gains_csv(const GainSet& g, const std::string& dir);

}  // namespace bladectl
