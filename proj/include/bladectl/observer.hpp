#pragma once

#include "bladectl/common.hpp"
#include "bladectl/control.hpp"
#include "bladectl/kernels.hpp"
#include "bladectl/plant.hpp"

#include <complex>
#include <vector>

namespace bladectl {

struct ObserverGainSet {
  Vec x;  // kernel grid
  double L_z = 0.0;
  Vec L_x;  // n
  Vec L_d;  // m
  double Gamma_z = 0.0;
  Vec Gamma_eta, Gamma_xi;
};

// Default observer poles: {-2} for a scalar X, {-2,-3} for a two-dimensional d.
std::vector<std::complex<double>> default_observer_poles(int dim);

ObserverGainSet synthesize_observer_gains(const GeneralPlantSpec& spec, const ObserverKernelSet& os,
                                          const std::vector<std::complex<double>>& poles_x,
                                          const std::vector<std::complex<double>>& poles_d);

// The observer shares PlantState as its state type (hatted quantities).
using ObserverState = PlantState;

// Observer integrator: the plant discretization plus output-error injections.
class Observer {
public:
  Observer(const PlantDiscretization& disc, const ObserverGainSet& g);
  // One step from t_n to t_{n+1}.  `now` holds the measurements at t_n (injections), `next`
  // those at t_{n+1} (the measured left boundary of eta-hat).
  ObserverState step(const ObserverState& obs, const Measurements& now, const Measurements& next,
                     double U) const;
  const ObserverGainSet& gains() const { return g_; }

private:
  const PlantDiscretization& disc_;
  ObserverGainSet g_;
  Vec Geta_, Gxi_;  // injection profiles on the plant grid
};

// |z~|^2 + |eta~|_H1^2 + |xi~|_H1^2 + |X~|^2 + |u~|_H1^2 + |d~|^2.
double error_norm_Omega_e(const PlantState& plant, const ObserverState& obs, double dx);

// Difference obs - plant (all fields).
PlantState state_difference(const ObserverState& obs, const PlantState& plant);

// Coefficients of the observer-error target system (sampled on the kernel grid).
struct ObserverTargetCoeffs {
  Vec x;
  Vec G1, G3;
  Mat S11, S13, S21, S23;  // lower triangle
  Mat N1, N2;              // Nk x n
  Mat N3, N4;              // Nk x m
  RowVec intMN2, intMN4;   // int_0^1 M N_2 / eps2, int_0^1 M N_4 / eps2
};
ObserverTargetCoeffs compute_observer_target_coeffs(const GeneralPlantSpec& spec, const ObserverKernelSet& os);

// Output-feedback closed loop: plant -> measurements -> observer -> law.
struct OutputFeedbackOptions {
  RecordPlan plan;
  double noise_amplitude = 0.0;  // additive uniform measurement noise
  unsigned long noise_seed = 7;
};
struct OutputFeedbackTrace {
  Trace plant, observer;
  std::vector<double> Omega_e;
  std::vector<double> U_full;  // the law evaluated on the true plant state (comparison only)
};
OutputFeedbackTrace simulate_output_feedback(const PlantDiscretization& disc, const Observer& obs_model,
                                             const ControlLaw& law, const PlantState& plant0,
                                             const ObserverState& obs0, const OutputFeedbackOptions& opt = {});

}  // namespace bladectl
