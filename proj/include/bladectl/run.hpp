#pragma once

#include "bladectl/config.hpp"
#include "bladectl/control.hpp"
#include "bladectl/diagnostics.hpp"
#include "bladectl/observer.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace bladectl {

// Everything synthesized from a configuration.
struct Synthesis {
  GeneralPlantSpec spec;
  std::optional<DimensionlessParams> dimless;
  RowVec K;
  KernelSet kernels;
  InverseKernelSet inverse;
  GainSet gains;
  bool has_observer = false;
  ObserverKernelSet observer_kernels;
  ObserverGainSet observer_gains;
};

// Builds the plant, kernels, gains and (optionally) the observer.
Synthesis synthesize(const RunConfig& c, bool with_observer);

PlantState initial_plant_state(const RunConfig& c, const GeneralPlantSpec& spec);
ObserverState initial_observer_state(const RunConfig& c, const GeneralPlantSpec& spec, const PlantState& plant);

struct ScenarioResult {
  Trace plant;
  std::optional<Trace> observer;
  std::vector<double> Omega_e;  // every step (output feedback only)
  NormReport norms;             // at the norm stride
  bool diverged = false;
  std::string message;
};
ScenarioResult run_scenario(const RunConfig& c, const Synthesis& syn);

// Output directory bookkeeping: every written file is listed with its sha-256 and row count.
class Manifest {
public:
  explicit Manifest(std::string dir);
  const std::string& dir() const { return dir_; }
  void add(const std::string& name);
  void add(const std::vector<std::string>& names);
  // Writes MANIFEST; stage/message describe a failure (empty on success).
  void write(const std::string& stage = "", const std::string& message = "") const;

private:
  std::string dir_;
  std::vector<std::string> files_;
};

std::string sha256_file(const std::string& path);

// Subcommands; each returns the process exit status and writes its artifacts under c.out_dir.
int cmd_simulate(const RunConfig& c, std::ostream& log);
int cmd_kernels(const RunConfig& c, std::ostream& log);
int cmd_verify(const RunConfig& c, const std::vector<std::string>& suites, std::ostream& log);
int cmd_export_gains(const RunConfig& c, std::ostream& log);

}  // namespace bladectl
