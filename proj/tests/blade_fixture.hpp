#pragma once

#include "bladectl/control.hpp"
#include "bladectl/kernels.hpp"
#include "bladectl/model_beam.hpp"

namespace bladectl::fixture {

// Blade with a weak thermal moment: kernels are resolved by the degree-10 series.
inline GeneralPlantSpec weak_thermal_blade(double I0 = 1e-6) {
  PhysicalBeamParams p;
  p.I0 = I0;
  return build_general_spec(nondimensionalize(p), p);
}

struct Synthesized {
  GeneralPlantSpec spec;
  RowVec K;
  KernelSet ks;
  InverseKernelSet iv;
  GainSet g;
};

inline Synthesized synthesize_blade(const GeneralPlantSpec& spec, int Nk = 201, int N = 10) {
  Synthesized s{spec, place_poles(spec.A, spec.B, {{-2.0, 0.0}}), {}, {}, {}};
  KernelOptions o;
  o.Nk = Nk;
  s.ks = solve_control_kernels_series(spec, s.K, N, o);
  s.iv = solve_inverse_kernels(spec, s.ks);
  s.g = synthesize_gains(spec, s.ks, s.iv, 10.0);
  return s;
}

}  // namespace bladectl::fixture
