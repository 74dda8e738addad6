#pragma once

#include "bladectl/common.hpp"
#include "bladectl/control.hpp"
#include "bladectl/kernels.hpp"
#include "bladectl/model_beam.hpp"
#include "bladectl/observer.hpp"
#include "bladectl/plant.hpp"

#include <optional>
#include <string>
#include <vector>

namespace bladectl {

// Squared-norm pieces shared by the Lyapunov-type functionals.
struct NormParts {
  double z = 0, xi = 0, eta = 0, u = 0, X = 0, d = 0;
};
NormParts norm_parts(const PlantState& s, double dx);

// |z|^2 + |xi|_H1^2 + |eta|_H1^2 + |X|^2 + |u|_H1^2.
double omega0(const PlantState& s, double dx);
// Plant and observer pieces of the output-feedback functional.
double omega_a(const PlantState& plant, const ObserverState& obs, double dx);

struct DecayFit {
  double rate = 0.0;       // slope of log(series)
  double intercept = 0.0;
  double r2 = 0.0;
  int samples = 0;
  bool clipped = false;    // some samples were <= 0 and clipped at 1e-300
};
// Least-squares fit of log(v) = a + rate t over t in [t0, t1].
DecayFit fit_decay(const std::vector<double>& t, const std::vector<double>& v, double t0, double t1);
// Same, on the running envelope: the maximum of |v| over consecutive bins of width `bin`.
DecayFit fit_envelope(const std::vector<double>& t, const std::vector<double>& v, double t0, double t1,
                      double bin);

// Kernel samples on a plant grid (exact subsampling when the grids nest, bilinear otherwise).
Mat sample_kernel(const Mat& K, int Nx);
Mat sample_rows(const Mat& F, int Nx);

// Backstepping map on a plant grid with trapezoid quadrature.  The inverse is the exact
// inverse of the discrete forward map, i.e. the inverse transformation whose kernels are the
// discrete resolvents of the sampled direct kernels.
class BacksteppingTransform {
public:
  BacksteppingTransform(const KernelSet& ks, int Nx);
  Vec forward(const PlantState& s) const;
  Vec inverse(const Vec& beta, const Vec& eta, const Vec& u, const Vec& X, const Vec& d) const;
  int Nx() const { return Nx_; }

private:
  int Nx_;
  Mat Wk_, Wl_, Wp_, gamma_, ups_;
  Mat I_minus_Wk_;
};

Vec apply_backstepping(const PlantState& s, const KernelSet& ks);
// Inverse map with the continuous inverse kernels (accurate to the quadrature order).
Vec apply_inverse(const Vec& beta, const Vec& eta, const Vec& u, const Vec& X, const Vec& d,
                  const InverseKernelSet& iv);

// Observer-error transformation to the target variables (Y~, alpha~, beta~).
struct ErrorTargetState {
  double Y = 0.0;
  Vec alpha, beta;
};
class ObserverErrorTransform {
public:
  ObserverErrorTransform(const ObserverKernelSet& os, int Nx);
  ErrorTargetState to_target(const PlantState& err) const;

private:
  int Nx_;
  Mat I_plus_Wpsi_, Wphi_;
  RowVec wM_;
};

// Residuals of the target equations along a sequence of consecutive simulation states.
struct TargetResidual {
  double interior_rms = 0.0;  // eps2 beta_t - beta_x
  double boundary_rms = 0.0;  // beta_t(1) + c1_acute beta(1)
  int samples = 0;
};
TargetResidual target_residual(const std::vector<PlantState>& states, double dt, const BacksteppingTransform& T,
                               double eps2, double c1_acute);

struct ErrorTargetResidual {
  double alpha0_max = 0.0;    // |alpha~(0,t)|
  double beta_rms = 0.0, alpha_rms = 0.0, Y_rms = 0.0;
  int samples = 0;
};
ErrorTargetResidual observer_target_residual(const GeneralPlantSpec& spec, const std::vector<PlantState>& errors,
                                             double dt, const ObserverKernelSet& os,
                                             const ObserverTargetCoeffs& coeffs);

// Time series of the functionals along a trace (uses the stored states).
struct NormReport {
  std::vector<double> t, omega0, omega_e, omega_a;
  std::vector<double> PE_bending, PE_shear, KE_trans, KE_rot, disk, energy_total;
};
NormReport norm_report(const Trace& plant, const Trace* observer, double dx, const DimensionlessParams* phys,
                       const GeneralPlantSpec& spec);

// Pass/fail rows of a verification suite.
struct CheckRow {
  std::string check;
  double value = 0.0;
  double threshold = 0.0;
  bool pass = false;
};
struct VerifyReport {
  std::string suite;
  std::vector<CheckRow> rows;
  bool pass() const;
  void add(const std::string& check, double value, double threshold, bool pass);
  // Adds a row that passes when value <= threshold.
  void add_le(const std::string& check, double value, double threshold);
  void write_csv(const std::string& path) const;
};

// Artifacts a suite may need; absent ones make the corresponding suite fail with a Config error.
struct VerifyContext {
  const GeneralPlantSpec* spec = nullptr;
  const KernelSet* kernels = nullptr;
  const InverseKernelSet* inverse = nullptr;
  const GainSet* gains = nullptr;
  const ObserverKernelSet* observer_kernels = nullptr;
  const ObserverGainSet* observer_gains = nullptr;
  Grid grid;
  HeatScheme heat = HeatScheme::Explicit;
};
// Suites: kernels, transforms, target, observer-target, convergence.
VerifyReport verify_suite(const std::string& name, const VerifyContext& ctx);
const std::vector<std::string>& verify_suite_names();

// Smooth random states satisfying the plant boundary relations (deterministic in seed).
PlantState random_smooth_state(const GeneralPlantSpec& spec, int Nx, unsigned long seed);

}  // namespace bladectl
