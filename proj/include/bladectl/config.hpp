#pragma once

#include "bladectl/kernels.hpp"
#include "bladectl/model_beam.hpp"
#include "bladectl/plant.hpp"

#include <optional>
#include <string>
#include <vector>

namespace bladectl {

enum class Scenario { OpenLoop, StateFeedback, OutputFeedback };
std::string scenario_name(Scenario s);
Scenario parse_scenario(const std::string& text);

// Initial profile: a constant plus sums of a*sin(b*pi*x), or the literal "compatible" (heat
// profile linear between the left boundary value and zero).
struct Profile {
  double constant = 0.0;
  std::vector<std::pair<double, double>> sines;  // (a, b)
  bool compatible = false;
  Vec sample(const Vec& x) const;
  static Profile parse(const std::string& text);
};

struct RunConfig {
  Scenario scenario = Scenario::OutputFeedback;

  // Plant: physical blade parameters or a general spec with constant coefficients.
  bool physical = true;
  PhysicalBeamParams phys;
  GeneralPlantSpec general = GeneralPlantSpec::zero_coupling();

  Grid grid;
  HeatScheme heat = HeatScheme::Explicit;
  TransportScheme transport = TransportScheme::Upwind;

  std::vector<double> K_poles{-2.0};
  double c1_acute = 10.0;
  std::optional<double> L_z;  // default c0 + 5
  std::vector<double> observer_poles_x, observer_poles_d;  // empty: defaults

  KernelOptions kernels;

  bool disturbance = true;
  std::optional<Vec> d0;  // default: the physical d0 (general plant: zeros)

  Profile xi0, eta0, u0;
  double z0 = 1.0;
  Vec X0 = Vec::Constant(1, 2.0);

  // Observer initial condition as offsets from the plant initial condition.
  Profile xi_offset, eta_offset;
  double z_offset = 0.0;
  Vec X_offset = Vec::Constant(1, 1.0);
  std::optional<Vec> d_offset;  // default: equal to d0

  std::string out_dir = "out";
  int snapshot_stride = 500;  // steps between field snapshots
  int norm_stride = 10;       // steps between norm samples

  GeneralPlantSpec build_spec() const;
  Vec initial_d(const GeneralPlantSpec& spec) const;
};

// Parses sectioned key-value text; `source` names the input in error messages.
// Overrides are section.key -> value pairs applied after the file.
using ConfigOverrides = std::vector<std::pair<std::string, std::string>>;
RunConfig parse_config(const std::string& text, const std::string& source = "<config>",
                       const ConfigOverrides& overrides = {});
RunConfig load_config(const std::string& path, const ConfigOverrides& overrides = {});

// Required keys, in section.key form.
const std::vector<std::string>& required_config_keys();

}  // namespace bladectl
