#include "bladectl/run.hpp"

#include <CLI11.hpp>

#include <iostream>

using namespace bladectl;

namespace {

struct Common {
  std::string config;
  std::string scenario, t_final, dt, dx, out, disturbance;

  void attach(CLI::App* app) {
    app->add_option("-c,--config", config, "configuration file")->required()->check(CLI::ExistingFile);
    app->add_option("--scenario", scenario, "open-loop | state-feedback | output-feedback");
    app->add_option("--t-final", t_final, "final time");
    app->add_option("--dt", dt, "time step");
    app->add_option("--dx", dx, "space step");
    app->add_option("--out", out, "output directory");
    app->add_option("--disturbance", disturbance, "on | off");
  }

  ConfigOverrides overrides() const {
    ConfigOverrides o;
    auto put = [&](const char* key, const std::string& v) {
      if (!v.empty()) o.emplace_back(key, v);
    };
    put("scenario.mode", scenario);
    put("grid.t_final", t_final);
    put("grid.dt", dt);
    put("grid.dx", dx);
    put("output.dir", out);
    put("scenario.disturbance", disturbance);
    return o;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"backstepping boundary control of a thermal slender Timoshenko blade"};
  app.require_subcommand(1);

  Common sim, ker, ver, gains;
  std::vector<std::string> suites;
  auto* s = app.add_subcommand("simulate", "run a scenario and export traces");
  auto* k = app.add_subcommand("kernels", "solve kernels, export them with residuals");
  auto* v = app.add_subcommand("verify", "run verification suites");
  auto* g = app.add_subcommand("export-gains", "export control and observer gains");
  sim.attach(s);
  ker.attach(k);
  ver.attach(v);
  gains.attach(g);
  v->add_option("--suite", suites, "kernels, transforms, target, observer-target, convergence (repeatable)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*s) return cmd_simulate(load_config(sim.config, sim.overrides()), std::cerr);
    if (*k) return cmd_kernels(load_config(ker.config, ker.overrides()), std::cerr);
    if (*v) return cmd_verify(load_config(ver.config, ver.overrides()), suites, std::cerr);
    if (*g) return cmd_export_gains(load_config(gains.config, gains.overrides()), std::cerr);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
