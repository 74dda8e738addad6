#pragma once

#include "bladectl/common.hpp"
#include "bladectl/plant.hpp"

#include <memory>
#include <string>
#include <vector>

namespace bladectl {

// Canonical coupled Goursat problem on the triangle {0 <= y <= x <= 1}:
//   K_x + K_y         = aK + int_y^x [FKK(z,y) K(x,z) + FKL(z,y) L(x,z)] dz + bKL(y) L(x,y)
//   L_x - theta L_y   = aL + int_y^x [FLK(z,y) K(x,z) + FLL(z,y) L(x,z)] dz + bLK(y) K(x,y)
//   L(x,x)            = Ldiag(x)
//   K(x,0)            = betaL L(x,0) + w(x) bw + int_0^x [gK K + gL L](x,y) dy + e(x)
//   w'(x)             = w Aw + int_0^x [K(x,y) DK(y) + L(x,y) DL(y)] dy + cL L(x,0) + cK K(x,0)
//                       + r(x) + extra(x),        w(0) = w0
// w is a row vector of length nw. Both the control kernels and (after a change of variables)
// the observer kernels are instances of this problem. Empty functions are zero.
struct GoursatProblem {
  double theta = 1.0;
  Fn2 aK, aL, FKK, FKL, FLK, FLL;
  Fn1 bKL, bLK, Ldiag;
  double betaL = 0.0;
  RowVec bw;  // length nw
  Fn1 gK, gL, e;
  Mat Aw;     // nw x nw
  RowFn DK, DL, r;
  RowVec cL, cK;
  RowVec w0;
  Mat extra;  // optional samples (Nk x nw) of the extra ODE forcing on the uniform kernel grid
  int nw() const { return static_cast<int>(w0.size()); }
};

// Chebyshev tensor representation of a Goursat solution (series method).
struct SeriesRep {
  int N = 0;
  Vec aK, aL;  // coefficients for T_a(2x-1) T_b(2y-1), a + b <= N
  Mat gw;      // (N+1) x nw coefficients of w
  double K(double x, double y) const;
  double L(double x, double y) const;
  RowVec w(double x) const;
};

struct GoursatSolution {
  Vec x;        // uniform kernel grid
  Mat K, L;     // lower-triangular samples (j <= i), zero above the diagonal
  Mat w;        // Nk x nw
  std::shared_ptr<SeriesRep> series;  // set by the series solver
  int iterations = 0;
  double last_term = 0.0;
  std::vector<double> term_norms;
  double lsq_residual = 0.0;
};

GoursatSolution solve_goursat_series(const GoursatProblem& P, int N, int Nk);

// Factored collocation system reused for repeated solves that differ only in P.extra.
class SeriesGoursatSolver {
public:
  SeriesGoursatSolver(const GoursatProblem& P, int N);
  ~SeriesGoursatSolver();
  GoursatSolution solve(const Mat& extra, int Nk);

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Successive approximations along characteristics. The optional callback refreshes P.extra
// from the current iterate (used for the parabolic coupling).
using ExtraUpdate = std::function<Mat(const Mat& K, const Mat& L)>;
GoursatSolution solve_goursat_iterative(GoursatProblem P, int Nk, int M_iter, double tol,
                                        const ExtraUpdate& update = {});

// PDE residuals of a Goursat solution on its grid (finite differences, interior nodes).
struct GoursatResidual {
  double pde_K = 0, pde_L = 0;  // RMS of the transport equations on the triangle interior
  double diag_L = 0;            // max |L(x,x) - Ldiag(x)|
  double bnd_K = 0;             // max boundary-row violation
  double ode = 0;               // RMS of the ODE row
  double w0 = 0;                // |w(0) - w0|
};
GoursatResidual goursat_residual(const GoursatProblem& P, const GoursatSolution& S);
// Residual of the series representation evaluated at random points (independent of the grid).
GoursatResidual goursat_series_residual(const GoursatProblem& P, const SeriesRep& R, int samples = 400);

enum class KernelMethod { Series, Iterative };

struct KernelOptions {
  KernelMethod method = KernelMethod::Series;
  int N = 10;                  // polynomial degree (series)
  int Nk = 201;                // kernel grid nodes
  int N_fourier = 64;          // sine modes for the parabolic kernel
  double tol = 1e-8;           // fixed-point / series truncation tolerance
  int max_sweeps = 50;         // parabolic coupling sweeps (series)
  int M_iter = 400;            // successive approximation terms (iterative)
  bool gamma_duplicate = false;     // include the repeated terms of the gamma equation literally
  bool upsilon_short_form = false;  // drop the k/l convolutions of G in the Upsilon equation
};

struct KernelSet {
  Vec x;
  Mat k, l;           // lower triangle
  Mat p, p_y;         // full square
  Mat gamma;          // Nk x n
  Mat Upsilon;        // Nk x m
  Vec py0;            // p_y(x,0)
  RowVec K;
  std::string method;
  int sweeps = 0;
  double fixed_point_change = 0.0;
  std::vector<double> term_norms;
  std::vector<std::string> warnings;
  std::shared_ptr<SeriesRep> series;
  GoursatProblem problem;  // the Goursat instance that was solved (extra filled in)
  double h() const { return x(1) - x(0); }
  int N() const { return static_cast<int>(x.size()) - 1; }
};

GoursatProblem control_goursat_problem(const GeneralPlantSpec& spec, const RowVec& K, bool gamma_duplicate);

KernelSet solve_control_kernels(const GeneralPlantSpec& spec, const RowVec& K, const KernelOptions& opt);
KernelSet solve_control_kernels_series(const GeneralPlantSpec& spec, const RowVec& K, int N,
                                       KernelOptions opt = {});
KernelSet solve_control_kernels_iterative(const GeneralPlantSpec& spec, const RowVec& K, int M_iter, double tol,
                                          KernelOptions opt = {});

// Parabolic kernel: forcing H on the grid (zero above the diagonal).
Mat parabolic_forcing(const GeneralPlantSpec& spec, const Mat& k, const Mat& l);

struct PSolution {
  Mat p, p_y;    // Nk x Nk
  Vec py0;       // p_y(x,0)
  Mat coeff;     // Nk x N_fourier sine coefficients A_n(x) of p(x,.)
  double tail = 0.0;  // sup contribution of the last five modes
  bool truncation_warning = false;
};
// Sine-series solution with the Dirac source handled by a quasi-static (Green's function) split.
PSolution solve_p(const GeneralPlantSpec& spec, const Mat& H, int N_fourier);
// Finite-difference (BDF2 in x) solution with the same split, used by the iterative method.
PSolution solve_p_fd(const GeneralPlantSpec& spec, const Mat& H);

// Upsilon by RK4; f_extra(x) returns the right-hand side besides eps2*Upsilon*Ad.
Mat integrate_upsilon(const GeneralPlantSpec& spec, const KernelSet& ks, bool short_form);

struct InverseKernelSet {
  Vec x;
  Mat rho, sigma;     // lower triangle
  Mat varrho;         // full square
  Mat lambda;         // Nk x n
  Mat vartheta;       // Nk x m
  Vec rho_y1, sigma_y1, varrho_y1;  // y-derivatives of the x = 1 traces
  double residual = 0.0;            // max violation of the resolvent relations
};
InverseKernelSet solve_inverse_kernels(const GeneralPlantSpec& spec, const KernelSet& direct);

struct ObserverKernelSet {
  Vec x;
  Mat psi, phi;  // samples on {0 <= y <= x <= 1}
  Vec M;
  double L_z = 0.0;
  std::shared_ptr<SeriesRep> series;  // in the swapped variables
  GoursatProblem problem;             // swapped-variable instance
  Vec psi_x0() const { return psi.col(0); }
  Vec phi_x0() const { return phi.col(0); }
  Vec psi_1y() const { return psi.row(psi.rows() - 1).transpose(); }
  Vec phi_1y() const { return phi.row(phi.rows() - 1).transpose(); }
};
GoursatProblem observer_goursat_problem(const GeneralPlantSpec& spec, double L_z);
ObserverKernelSet solve_observer_kernels(const GeneralPlantSpec& spec, double L_z, const KernelOptions& opt = {});

// Residual report of each defining equation.
struct KernelResidualReport {
  std::vector<std::pair<std::string, double>> entries;
  double get(const std::string& name) const;
};
KernelResidualReport kernel_residual(const GeneralPlantSpec& spec, const KernelSet& ks);
KernelResidualReport observer_kernel_residual(const GeneralPlantSpec& spec, const ObserverKernelSet& os);

// CSV dump (x, y, value) of a lower-triangular or square kernel.
void write_kernel_csv(const std::string& path, const Vec& x, const Mat& K, bool lower_only);

}  // namespace bladectl
