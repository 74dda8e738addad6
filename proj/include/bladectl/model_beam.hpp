#pragma once

#include "bladectl/common.hpp"
#include "bladectl/plant.hpp"

#include <cmath>
#include <limits>

namespace bladectl {

// Physical blade / disk / thermal / aerodynamic constants (defaults: the rotor of the
// reference application).
struct PhysicalBeamParams {
  double E_star = 200e9;       // Pa
  double G_star = 77.5e9;      // Pa
  double rho_star = 7833.0;    // kg/m^3
  double A_star = 0.005;       // m^2
  double I_star = 0.00013876;  // m^4
  double k_prime = 0.53066;
  double L_star = 1.0;         // m
  double R_star = 0.5;         // m
  double J_star = 23.4375;     // kg m^2
  double alpha0 = 1.18e-5;     // 1/K
  double S0 = 7400.0;          // W/m^2
  double beta_star = 0.0897;   // m
  double c_star = 5.0;         // disk damping (negative damping allowed)
  double kappa_acute = 1.0;
  double k1 = 1.0, k2 = 1.0;
  double Q1 = 1.0, Q2 = 1.0;
  double omega_d = 0.0;
  // Dimensionless thermal moment coefficient; NaN -> derived from a rectangular section.
  double I0 = std::numeric_limits<double>::quiet_NaN();
  // Time-scale frequency omega_0 [rad/s]; NaN -> first clamped-free Euler-Bernoulli frequency.
  double omega0 = std::numeric_limits<double>::quiet_NaN();
  // Direct override of eps = rho/(k' G); NaN -> computed from omega0.
  double eps_override = std::numeric_limits<double>::quiet_NaN();
  Mat Ad = (Mat(2, 2) << 0.0, M_PI, -M_PI, 0.0).finished();
  Mat q_row = Mat::Ones(1, 2);
  Vec d0 = Vec::Constant(2, 7400.0);
  // Profile of the disturbance/X terms in the eta equation: true -> 1/phi2 (default), false -> 1/phi1.
  bool eta_disturbance_phi2 = true;

  void validate() const;
};

struct DimensionlessParams {
  double eps = 0, a = 0, b = 0, eps1 = 0, eps2 = 0, s = 0;  // s = sqrt(eps)
  double I = 0, A = 0, G = 0, R = 0, rho = 0, J = 0, c = 0, I0 = 0, mu = 0;
  double omega0 = 0;  // rad/s used for the time scaling
  double k1 = 0, k2 = 0, Q1 = 0, Q2 = 0, kappa = 0, omega_d = 0;
  double S0_over_beta = 0;
  double phi1(double x) const { return std::exp((k1 - s * k2) * x / (2 * s)); }
  double phi2(double x) const { return std::exp(-(k1 + s * k2) * x / (2 * s)); }
  // Rescaling factor applied to eta so that the left boundary has unit xi(0) coefficient.
  double r() const { return (s - Q2) / (s + Q2); }
};

DimensionlessParams nondimensionalize(const PhysicalBeamParams& p);

// phi1, phi2 sampled on the given nodes.
std::pair<Vec, Vec> riemann_profiles(const DimensionlessParams& d, double k1, double k2, const Vec& x);

GeneralPlantSpec build_general_spec(const DimensionlessParams& d, const PhysicalBeamParams& p);

// Inner-loop input cancelling Phi(0,t): inputs are Phi_x(0), varpi_y and DeltaT_y samples on a
// uniform grid.
double inner_loop_u1(double b, double I0, double Phi_x0, const Vec& varpi_y, const Vec& dT_y);

struct PhysicalFields {
  Vec varpi, varpi_t, varpi_x, Phi;
  double PE_bending = 0, PE_shear = 0, KE_trans = 0, KE_rot = 0, disk = 0;
  bool remark_formula_used = true;  // false when Q1 == 0 and the fallback was used
  double total() const { return PE_bending + PE_shear + KE_trans + KE_rot + disk; }
};

// Reconstructs displacement, rotation and energies from a general-form state (eta rescaled).
PhysicalFields reconstruct_physical(const PlantState& s, const DimensionlessParams& d,
                                    const GeneralPlantSpec& spec);

}  // namespace bladectl
