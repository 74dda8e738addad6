#include "bladectl/run.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
using namespace bladectl;

namespace {

ConfigOverrides to_overrides(const std::map<std::string, std::string>& m) {
  return ConfigOverrides(m.begin(), m.end());
}

py::dict scenario_dict(const ScenarioResult& r) {
  py::dict d;
  std::vector<double> absX;
  for (const auto& X : r.plant.X) absX.push_back(X.norm());
  d["t"] = r.plant.t;
  d["U"] = r.plant.U;
  d["z"] = r.plant.z;
  d["absX"] = absX;
  d["norm_t"] = r.norms.t;
  d["omega0"] = r.norms.omega0;
  d["energy_total"] = r.norms.energy_total;
  d["Omega_e"] = r.Omega_e;
  d["diverged"] = r.diverged;
  return d;
}

}  // namespace

PYBIND11_MODULE(_bladectl, m) {
  m.doc() = "Backstepping boundary control of a thermal slender Timoshenko blade";

  py::register_exception<Error>(m, "BladeError");

  py::class_<RunConfig>(m, "RunConfig")
      .def_property_readonly("scenario", [](const RunConfig& c) { return scenario_name(c.scenario); })
      .def_property_readonly("dt", [](const RunConfig& c) { return c.grid.dt; })
      .def_property_readonly("dx", [](const RunConfig& c) { return c.grid.dx(); })
      .def_property_readonly("Nx", [](const RunConfig& c) { return c.grid.Nx; })
      .def_property_readonly("t_final", [](const RunConfig& c) { return c.grid.t_final; })
      .def_readonly("c1_acute", &RunConfig::c1_acute)
      .def_readonly("disturbance", &RunConfig::disturbance)
      .def_readonly("out_dir", &RunConfig::out_dir);

  m.def("load_config", [](const std::string& path, const std::map<std::string, std::string>& overrides) {
    return load_config(path, to_overrides(overrides));
  }, py::arg("path"), py::arg("overrides") = std::map<std::string, std::string>{});
  m.def("parse_config", [](const std::string& text, const std::map<std::string, std::string>& overrides) {
    return parse_config(text, "<string>", to_overrides(overrides));
  }, py::arg("text"), py::arg("overrides") = std::map<std::string, std::string>{});
  m.def("required_config_keys", &required_config_keys);

  m.def("run_scenario", [](const RunConfig& c) {
    py::gil_scoped_release release;
    Synthesis syn;
    if (c.scenario == Scenario::OpenLoop) {
      syn.spec = c.build_spec();
      if (c.physical) syn.dimless = nondimensionalize(c.phys);
    } else {
      syn = synthesize(c, c.scenario == Scenario::OutputFeedback);
    }
    const ScenarioResult r = run_scenario(c, syn);
    py::gil_scoped_acquire acquire;
    return scenario_dict(r);
  }, py::arg("config"), "Synthesize (if needed) and simulate; returns the series as lists.");

  auto command = [](int (*fn)(const RunConfig&, std::ostream&)) {
    return [fn](const RunConfig& c) {
      std::ostringstream log;
      const int code = fn(c, log);
      return py::make_tuple(code, log.str());
    };
  };
  m.def("simulate", command(&cmd_simulate), py::arg("config"), "Full pipeline with CSV export; (exit code, log).");
  m.def("kernels", command(&cmd_kernels), py::arg("config"));
  m.def("export_gains", command(&cmd_export_gains), py::arg("config"));
  m.def("verify", [](const RunConfig& c, const std::vector<std::string>& suites) {
    std::ostringstream log;
    const int code = cmd_verify(c, suites, log);
    return py::make_tuple(code, log.str());
  }, py::arg("config"), py::arg("suites") = std::vector<std::string>{});

  m.def("nondimensionalize", []() {
    const DimensionlessParams d = nondimensionalize(PhysicalBeamParams{});
    py::dict r;
    r["eps"] = d.eps;
    r["G"] = d.G;
    r["A"] = d.A;
    r["b"] = d.b;
    r["I0"] = d.I0;
    r["omega0"] = d.omega0;
    return r;
  }, "Dimensionless groups of the default blade.");

  m.def("place_poles", [](const Mat& A, const Mat& B, const std::vector<std::complex<double>>& poles) {
    return Vec(place_poles(A, B, poles).transpose());
  });
  m.def("fit_decay", [](const std::vector<double>& t, const std::vector<double>& v, double t0, double t1) {
    const DecayFit f = fit_decay(t, v, t0, t1);
    return py::make_tuple(f.rate, f.r2);
  });
  m.def("sha256_file", &sha256_file);
}
