#pragma once

#include "bladectl/common.hpp"

#include <map>
#include <optional>
#include <string>

namespace bladectl {

// Coefficient bundle of the general coupled transport / heat / ODE plant.
// Scalar coefficient functions live on [0,1]; kernels f_ij on [0,1]^2.
// Empty std::function members are treated as identically zero.
struct GeneralPlantSpec {
  double eps1 = 1.0, eps2 = 1.0;   // transport time constants
  double c0 = 0.0, c1s = 0.0;      // z-ODE constants
  double q0 = 1.0, q1 = 1.0;       // right boundary constants
  double kappa0 = 1.0;             // heat diffusivity
  Mat A = Mat::Zero(1, 1);         // n x n
  Mat B = Mat::Ones(1, 1);         // n x 1
  Mat C = Mat::Ones(1, 1);         // 1 x n
  Mat p2 = Mat::Zero(1, 1);        // 1 x n
  Mat Ad = Mat::Zero(2, 2);        // m x m
  Mat q = Mat::Ones(1, 2);         // 1 x m
  Fn1 c1, c2, g1, g2, mu1, mu2;
  RowFn D1, D2, G1, G2;            // 1 x n (D) and 1 x m (G)
  Fn2 f11, f12, f13, f21, f22, f23;

  int n() const { return static_cast<int>(A.rows()); }
  int m() const { return static_cast<int>(Ad.rows()); }
  double theta() const { return eps2 / eps1; }

  // Safe evaluators (zero when the coefficient is absent).
  double ev(const Fn1& f, double x) const { return f ? f(x) : 0.0; }
  double ev(const Fn2& f, double x, double y) const { return f ? f(x, y) : 0.0; }
  RowVec evD(const RowFn& f, double x) const { return f ? f(x) : RowVec::Zero(n()); }
  RowVec evG(const RowFn& f, double x) const { return f ? f(x) : RowVec::Zero(m()); }

  // Structural checks: positivity, q1 != 0, dimensions, controllability/observability and
  // the imaginary-axis spectrum of Ad.
  void validate(bool check_assumptions = true) const;

  // A spec with every coupling zero (n = 1, m = 2 by default).
  static GeneralPlantSpec zero_coupling(int n = 1, int m = 2);
};

struct Grid {
  int Nx = 21;            // node count
  double dt = 1e-3;
  double t_final = 5.0;
  double dx() const { return 1.0 / (Nx - 1); }
  int steps() const { return static_cast<int>(std::llround(t_final / dt)); }
};

enum class HeatScheme { Explicit, BackwardEuler };

// Transport update: first-order upwind (default) or a semi-Lagrangian step with cubic
// interpolation at the feet of the characteristics (same explicit source treatment).
enum class TransportScheme { Upwind, SemiLagrangian };

struct PlantState {
  double t = 0.0;
  double z = 0.0;
  Vec xi, eta, u;  // Nx samples
  Vec X, d;        // n and m
  static PlantState zeros(int Nx, int n, int m);
};

bool is_finite(const PlantState& s);

// Boundary data produced by the plant and consumed by the observer.
struct Measurements {
  double xi0 = 0.0;  // xi(0,t)
  double u0 = 0.0;   // u(0,t)
  double CX = 0.0;   // C X(t)
};

// Explicit upwind discretization of the general plant on a fixed grid.  The same object is
// reused by the observer (which adds output-injection terms through the hooks below).
class PlantDiscretization {
public:
  PlantDiscretization(const GeneralPlantSpec& spec, const Grid& grid,
                      HeatScheme heat = HeatScheme::Explicit);

  const GeneralPlantSpec& spec() const { return spec_; }
  const Grid& grid() const { return grid_; }
  const Vec& x() const { return x_; }
  TransportScheme transport_scheme() const { return transport_scheme_; }
  void set_transport_scheme(TransportScheme t) { transport_scheme_ = t; }

  // Checks the transport CFL (and the explicit-heat bound when relevant); throws on violation.
  static void check_cfl(const GeneralPlantSpec& spec, const Grid& grid, HeatScheme heat);

  // In-domain source terms of the xi and eta equations (everything except the transport term).
  void sources(const PlantState& s, Vec& Sxi, Vec& Seta) const;

  // Transport update of the interior nodes given the sources (boundary nodes left untouched).
  void transport(const PlantState& s, const Vec& Sxi, const Vec& Seta, Vec& xi_new, Vec& eta_new) const;

  // Heat update with the new left boundary value u0_new (right end held at zero).
  Vec heat(const Vec& u, double u0_new) const;

  // One full plant step with control input U.
  PlantState step(const PlantState& s, double U) const;

  // Measurements available to the observer.
  Measurements measure(const PlantState& s) const;

  // Exact propagators over dt: exp(A dt), dt*phi1(A dt), exp(Ad dt), dt*phi1(Ad dt).
  const Mat& eA() const { return eA_; }
  const Mat& pA() const { return pA_; }
  const Mat& eAd() const { return eAd_; }
  const Mat& pAd() const { return pAd_; }

  // Trapezoid Volterra matrices (row i integrates over [0, x_i]).
  const Mat& V(const std::string& name) const { return V_.at(name); }

  // Sampled coefficient columns.
  const Vec& c1() const { return c1_; }
  const Vec& c2() const { return c2_; }

private:
  GeneralPlantSpec spec_;
  Grid grid_;
  HeatScheme heat_;
  TransportScheme transport_scheme_ = TransportScheme::Upwind;
  Vec x_;
  std::map<std::string, Mat> V_;
  Vec c1_, c2_, g1_, g2_, mu1_, mu2_;
  Mat D1_, D2_, G1_, G2_;  // Nx x n, Nx x m
  Mat eA_, pA_, eAd_, pAd_;
  Eigen::PartialPivLU<Mat> heat_lu_;
};

// Field snapshot of a simulation.
struct Snapshot {
  double t;
  Vec xi, eta, u;
};

struct Trace {
  std::vector<double> t, z, U;
  std::vector<Vec> X, d;
  std::map<std::string, std::vector<double>> series;  // named scalar series (norms, ...)
  std::vector<PlantState> states;                     // strided full states
  bool diverged = false;
  std::string divergence_message;
};

// Control law handle: receives the current plant state, returns U.
using Controller = std::function<double(const PlantState&)>;

struct RecordPlan {
  int state_stride = 0;  // 0: keep no full states; k: keep every k-th step (and the last)
};

// Iterates step() up to grid.t_final. On divergence returns the partial trace with the flag set.
Trace simulate(const PlantDiscretization& disc, const PlantState& initial, const Controller& controller,
               const RecordPlan& plan = {});

// Discrete residuals of each plant equation evaluated on consecutive stored states.
struct PlantResidual {
  double xi = 0, eta = 0, heat = 0, X = 0, d = 0, z = 0;
};
PlantResidual residual(const GeneralPlantSpec& spec, const Grid& grid, const Trace& trace);

// CSV export: one scalar-series file plus per-field snapshot files (x,value). Returns written
// file names relative to dir.
std::vector<std::string> export_trace_csv(const Trace& trace, const std::string& dir,
                                          const std::string& prefix = "");

}  // namespace bladectl
