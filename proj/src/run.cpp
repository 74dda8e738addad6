#include "bladectl/run.hpp"

#include <openssl/evp.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace bladectl {

namespace fs = std::filesystem;

namespace {

std::vector<std::complex<double>> as_poles(const std::vector<double>& v) {
  std::vector<std::complex<double>> p;
  for (double r : v) p.emplace_back(r, 0.0);
  return p;
}

}  // namespace

Synthesis synthesize(const RunConfig& c, bool with_observer) {
  Synthesis syn;
  syn.spec = c.build_spec();
  if (c.physical) syn.dimless = nondimensionalize(c.phys);
  syn.K = place_poles(syn.spec.A, syn.spec.B, as_poles(c.K_poles));
  syn.kernels = solve_control_kernels(syn.spec, syn.K, c.kernels);
  syn.inverse = solve_inverse_kernels(syn.spec, syn.kernels);
  syn.gains = synthesize_gains(syn.spec, syn.kernels, syn.inverse, c.c1_acute);
  if (with_observer) {
    const double Lz = c.L_z.value_or(syn.spec.c0 + 5.0);
    syn.observer_kernels = solve_observer_kernels(syn.spec, Lz, c.kernels);
    const auto px = c.observer_poles_x.empty() ? default_observer_poles(syn.spec.n()) : as_poles(c.observer_poles_x);
    const auto pd = c.observer_poles_d.empty() ? default_observer_poles(syn.spec.m()) : as_poles(c.observer_poles_d);
    syn.observer_gains = synthesize_observer_gains(syn.spec, syn.observer_kernels, px, pd);
    syn.has_observer = true;
  }
  return syn;
}

namespace {

Vec heat_profile(const Profile& p, const Vec& x, double left) {
  if (!p.compatible) return p.sample(x);
  return left * (Vec::Ones(x.size()) - x);
}

}  // namespace

PlantState initial_plant_state(const RunConfig& c, const GeneralPlantSpec& spec) {
  const int Nx = c.grid.Nx;
  const Vec x = unit_grid(Nx);
  PlantState s = PlantState::zeros(Nx, spec.n(), spec.m());
  s.z = c.z0;
  s.X = c.X0;
  s.d = c.initial_d(spec);
  s.xi = c.xi0.sample(x);
  s.eta = c.eta0.sample(x);
  s.u = heat_profile(c.u0, x, (spec.q * s.d)(0) + (spec.p2 * s.X)(0));
  return s;
}

ObserverState initial_observer_state(const RunConfig& c, const GeneralPlantSpec& spec, const PlantState& plant) {
  const Vec x = unit_grid(c.grid.Nx);
  ObserverState o = plant;
  o.z += c.z_offset;
  o.X += c.X_offset;
  o.d += c.d_offset ? *c.d_offset : (c.physical ? c.phys.d0 : Vec::Zero(spec.m()));
  o.xi += c.xi_offset.sample(x);
  o.eta += c.eta_offset.sample(x);
  if (c.u0.compatible) o.u = heat_profile(c.u0, x, (spec.q * o.d)(0) + (spec.p2 * o.X)(0));
  return o;
}

ScenarioResult run_scenario(const RunConfig& c, const Synthesis& syn) {
  PlantDiscretization disc(syn.spec, c.grid, c.heat);
  disc.set_transport_scheme(c.transport);
  const PlantState s0 = initial_plant_state(c, syn.spec);
  const RecordPlan plan{c.norm_stride};
  ScenarioResult r;
  if (c.scenario == Scenario::OutputFeedback) {
    if (!syn.has_observer) fail(ErrorKind::Config, "output feedback requires the observer block");
    const ControlLaw law(syn.gains, c.grid.Nx);
    const Observer obs(disc, syn.observer_gains);
    OutputFeedbackOptions opt;
    opt.plan = plan;
    OutputFeedbackTrace of =
        simulate_output_feedback(disc, obs, law, s0, initial_observer_state(c, syn.spec, s0), opt);
    r.plant = std::move(of.plant);
    r.observer = std::move(of.observer);
    r.Omega_e = std::move(of.Omega_e);
  } else if (c.scenario == Scenario::StateFeedback) {
    const ControlLaw law(syn.gains, c.grid.Nx);
    r.plant = simulate(disc, s0, [&law](const PlantState& s) { return law.U(s); }, plan);
  } else {
    r.plant = simulate(disc, s0, nullptr, plan);
  }
  r.diverged = r.plant.diverged;
  r.message = r.plant.divergence_message;
  r.norms = norm_report(r.plant, r.observer ? &*r.observer : nullptr, c.grid.dx(),
                        syn.dimless ? &*syn.dimless : nullptr, syn.spec);
  return r;
}

std::string sha256_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail(ErrorKind::Config, "cannot read " + path);
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  std::vector<char> buf(1 << 16);
  while (f) {
    f.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (f.gcount() > 0) EVP_DigestUpdate(ctx, buf.data(), static_cast<size_t>(f.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return os.str();
}

Manifest::Manifest(std::string dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

void Manifest::add(const std::string& name) { files_.push_back(name); }

void Manifest::add(const std::vector<std::string>& names) {
  for (const auto& n : names) add(n);
}

void Manifest::write(const std::string& stage, const std::string& message) const {
  std::ofstream f(fs::path(dir_) / "MANIFEST");
  if (!f) fail(ErrorKind::Config, "cannot write MANIFEST in " + dir_);
  if (stage.empty())
    f << "# status: ok\n";
  else
    f << "# status: failed at stage " << stage << ": " << message << "\n";
  f << "# name sha256 rows\n";
  for (const auto& name : files_) {
    const std::string path = (fs::path(dir_) / name).string();
    std::ifstream in(path);
    long lines = 0;
    std::string line;
    while (std::getline(in, line)) ++lines;
    f << name << ' ' << sha256_file(path) << ' ' << std::max(0L, lines - 1) << '\n';
  }
}

namespace {

std::ofstream open_csv(const std::string& dir, const std::string& name) {
  std::ofstream f(fs::path(dir) / name);
  if (!f) fail(ErrorKind::Config, "cannot write " + name + " in " + dir);
  f << std::setprecision(12);
  return f;
}

// Keeps the recorded states that fall on the snapshot stride (and the last one).
Trace with_snapshots(const Trace& tr, const RunConfig& c) {
  Trace out = tr;
  out.states.clear();
  for (size_t k = 0; k < tr.states.size(); ++k) {
    const long step = std::lround(tr.states[k].t / c.grid.dt);
    if (step % c.snapshot_stride == 0 || k + 1 == tr.states.size()) out.states.push_back(tr.states[k]);
  }
  return out;
}

std::string write_norms(const std::string& dir, const NormReport& n, const Trace& plant) {
  auto f = open_csv(dir, "norms.csv");
  const bool obs = !n.omega_e.empty(), en = !n.energy_total.empty();
  f << "t,omega0,sup_xi";
  if (obs) f << ",omega_e,omega_a";
  if (en) f << ",PE_bending,PE_shear,KE_trans,KE_rot,disk,energy_total";
  f << '\n';
  for (size_t k = 0; k < n.t.size(); ++k) {
    f << n.t[k] << ',' << n.omega0[k] << ',' << plant.states[k].xi.cwiseAbs().maxCoeff();
    if (obs) f << ',' << n.omega_e[k] << ',' << n.omega_a[k];
    if (en)
      f << ',' << n.PE_bending[k] << ',' << n.PE_shear[k] << ',' << n.KE_trans[k] << ',' << n.KE_rot[k] << ','
        << n.disk[k] << ',' << n.energy_total[k];
    f << '\n';
  }
  return "norms.csv";
}

std::string write_omega_e(const std::string& dir, const ScenarioResult& r) {
  auto f = open_csv(dir, "omega_e.csv");
  f << "t,omega_e\n";
  for (size_t k = 0; k < r.Omega_e.size(); ++k) f << r.plant.t[k] << ',' << r.Omega_e[k] << '\n';
  return "omega_e.csv";
}

std::string write_summary(const std::string& dir, const RunConfig& c, const ScenarioResult& r) {
  auto f = open_csv(dir, "summary.csv");
  f << "key,value\n";
  const double T = r.plant.t.empty() ? 0.0 : r.plant.t.back();
  const double t0 = 0.2 * c.grid.t_final;
  f << "scenario," << scenario_name(c.scenario) << '\n';
  f << "disturbance," << (c.disturbance ? "on" : "off") << '\n';
  f << "Nx," << c.grid.Nx << "\ndt," << c.grid.dt << "\nt_final," << c.grid.t_final << '\n';
  f << "t_reached," << T << "\ndiverged," << (r.diverged ? 1 : 0) << '\n';
  if (r.plant.t.empty()) return "summary.csv";
  f << "absX_initial," << r.plant.X.front().norm() << "\nabsX_final," << r.plant.X.back().norm() << '\n';
  f << "sup_xi_initial," << r.plant.states.front().xi.cwiseAbs().maxCoeff() << '\n';
  f << "sup_xi_final," << r.plant.states.back().xi.cwiseAbs().maxCoeff() << '\n';
  auto fit_rows = [&](const std::string& name, const DecayFit& fit) {
    f << name << "_rate," << fit.rate << '\n' << name << "_r2," << fit.r2 << '\n';
  };
  auto guarded = [&](const std::string& name, auto&& fn) {
    try {
      fit_rows(name, fn());
    } catch (const Error&) {
      f << name << "_rate,nan\n" << name << "_r2,nan\n";
    }
  };
  std::vector<double> absX;
  for (const auto& X : r.plant.X) absX.push_back(X.norm());
  guarded("absX_envelope", [&] { return fit_envelope(r.plant.t, absX, t0, T, 0.25); });
  f << "omega0_initial," << r.norms.omega0.front() << "\nomega0_final," << r.norms.omega0.back() << '\n';
  guarded("omega0", [&] { return fit_decay(r.norms.t, r.norms.omega0, t0, T); });
  if (!r.Omega_e.empty()) {
    f << "omega_e_initial," << r.Omega_e.front() << "\nomega_e_final," << r.Omega_e.back() << '\n';
    guarded("omega_e", [&] { return fit_decay(r.plant.t, r.Omega_e, t0, T); });
  }
  if (!r.norms.energy_total.empty()) {
    double emax = 0.0;
    for (double e : r.norms.energy_total) emax = std::max(emax, e);
    f << "energy_final," << r.norms.energy_total.back() << "\nenergy_max," << emax << '\n';
  }
  return "summary.csv";
}

template <class F>
int guarded_command(Manifest& man, std::string& stage, std::ostream& log, F&& body) {
  try {
    const int code = body();
    man.write();
    return code;
  } catch (const Error& e) {
    log << "error (" << stage << "): " << e.what() << '\n';
    man.write(stage, e.what());
    return e.exit_code();
  } catch (const std::exception& e) {
    log << "error (" << stage << "): " << e.what() << '\n';
    man.write(stage, e.what());
    return 1;
  }
}

void write_kernel_files(const Synthesis& syn, Manifest& man) {
  const std::string& dir = man.dir();
  const KernelSet& ks = syn.kernels;
  auto path = [&](const std::string& n) { return (fs::path(dir) / n).string(); };
  write_kernel_csv(path("kernel_k.csv"), ks.x, ks.k, true);
  write_kernel_csv(path("kernel_l.csv"), ks.x, ks.l, true);
  write_kernel_csv(path("kernel_p.csv"), ks.x, ks.p, false);
  man.add(std::vector<std::string>{"kernel_k.csv", "kernel_l.csv", "kernel_p.csv"});
  {
    auto f = open_csv(dir, "kernel_functions.csv");
    f << "x";
    for (int i = 0; i < ks.gamma.cols(); ++i) f << ",gamma" << i;
    for (int i = 0; i < ks.Upsilon.cols(); ++i) f << ",Upsilon" << i;
    f << ",p_y0\n";
    for (int r = 0; r < ks.x.size(); ++r) {
      f << ks.x(r);
      for (int i = 0; i < ks.gamma.cols(); ++i) f << ',' << ks.gamma(r, i);
      for (int i = 0; i < ks.Upsilon.cols(); ++i) f << ',' << ks.Upsilon(r, i);
      f << ',' << (ks.py0.size() ? ks.py0(r) : 0.0) << '\n';
    }
    man.add("kernel_functions.csv");
  }
  {
    auto f = open_csv(dir, "kernel_residuals.csv");
    f << "check,value\n";
    for (const auto& [n, v] : kernel_residual(syn.spec, ks).entries) f << n << ',' << v << '\n';
    f << "inverse_resolvent," << syn.inverse.residual << '\n';
    if (syn.has_observer)
      for (const auto& [n, v] : observer_kernel_residual(syn.spec, syn.observer_kernels).entries)
        f << "observer_" << n << ',' << v << '\n';
    man.add("kernel_residuals.csv");
  }
  if (syn.has_observer) {
    const ObserverKernelSet& os = syn.observer_kernels;
    write_kernel_csv(path("observer_kernel_psi.csv"), os.x, os.psi, true);
    write_kernel_csv(path("observer_kernel_phi.csv"), os.x, os.phi, true);
    auto f = open_csv(dir, "observer_kernel_M.csv");
    f << "x,M\n";
    for (int r = 0; r < os.x.size(); ++r) f << os.x(r) << ',' << os.M(r) << '\n';
    man.add(std::vector<std::string>{"observer_kernel_psi.csv", "observer_kernel_phi.csv", "observer_kernel_M.csv"});
  }
}

void write_observer_gains(const Synthesis& syn, Manifest& man) {
  const ObserverGainSet& g = syn.observer_gains;
  {
    auto f = open_csv(man.dir(), "observer_gains_scalar.csv");
    f << std::setprecision(15) << "name,value\n";
    f << "L_z," << g.L_z << "\nGamma_z," << g.Gamma_z << '\n';
    for (int i = 0; i < g.L_x.size(); ++i) f << "L_x_" << i << ',' << g.L_x(i) << '\n';
    for (int i = 0; i < g.L_d.size(); ++i) f << "L_d_" << i << ',' << g.L_d(i) << '\n';
  }
  {
    auto f = open_csv(man.dir(), "observer_gains_functions.csv");
    f << std::setprecision(15) << "x,Gamma_eta,Gamma_xi\n";
    for (int r = 0; r < g.x.size(); ++r) f << g.x(r) << ',' << g.Gamma_eta(r) << ',' << g.Gamma_xi(r) << '\n';
  }
  man.add(std::vector<std::string>{"observer_gains_scalar.csv", "observer_gains_functions.csv"});
}

}  // namespace

int cmd_simulate(const RunConfig& c, std::ostream& log) {
  Manifest man(c.out_dir);
  std::string stage = "synthesis";
  return guarded_command(man, stage, log, [&]() -> int {
    const bool ctrl = c.scenario != Scenario::OpenLoop;
    Synthesis syn;
    if (ctrl) {
      log << "synthesizing kernels and gains\n";
      syn = synthesize(c, c.scenario == Scenario::OutputFeedback);
    } else {
      syn.spec = c.build_spec();
      if (c.physical) syn.dimless = nondimensionalize(c.phys);
    }
    stage = "simulation";
    log << "simulating " << scenario_name(c.scenario) << " to t=" << c.grid.t_final << '\n';
    const ScenarioResult r = run_scenario(c, syn);
    stage = "export";
    man.add(export_trace_csv(with_snapshots(r.plant, c), c.out_dir));
    if (r.observer) man.add(export_trace_csv(with_snapshots(*r.observer, c), c.out_dir, "hat_"));
    man.add(write_norms(c.out_dir, r.norms, r.plant));
    if (!r.Omega_e.empty()) man.add(write_omega_e(c.out_dir, r));
    man.add(write_summary(c.out_dir, c, r));
    if (r.diverged) {
      log << "divergence: " << r.message << '\n';
      man.write("simulation", r.message);
      return static_cast<int>(ErrorKind::Divergence);
    }
    return 0;
  });
}

int cmd_kernels(const RunConfig& c, std::ostream& log) {
  Manifest man(c.out_dir);
  std::string stage = "synthesis";
  return guarded_command(man, stage, log, [&]() -> int {
    const Synthesis syn = synthesize(c, true);
    stage = "export";
    write_kernel_files(syn, man);
    log << "kernels written to " << c.out_dir << '\n';
    return 0;
  });
}

int cmd_export_gains(const RunConfig& c, std::ostream& log) {
  Manifest man(c.out_dir);
  std::string stage = "synthesis";
  return guarded_command(man, stage, log, [&]() -> int {
    const Synthesis syn = synthesize(c, true);
    stage = "export";
    man.add(export_gains_csv(syn.gains, c.out_dir));
    write_observer_gains(syn, man);
    log << "gains written to " << c.out_dir << '\n';
    return 0;
  });
}

int cmd_verify(const RunConfig& c, const std::vector<std::string>& suites, std::ostream& log) {
  Manifest man(c.out_dir);
  std::string stage = "synthesis";
  return guarded_command(man, stage, log, [&]() -> int {
    const std::vector<std::string> names = suites.empty() ? verify_suite_names() : suites;
    for (const auto& n : names)
      if (std::find(verify_suite_names().begin(), verify_suite_names().end(), n) == verify_suite_names().end())
        fail(ErrorKind::Config, "unknown verify suite '" + n + "'");
    const Synthesis syn = synthesize(c, true);
    VerifyContext ctx;
    ctx.spec = &syn.spec;
    ctx.kernels = &syn.kernels;
    ctx.inverse = &syn.inverse;
    ctx.gains = &syn.gains;
    ctx.observer_kernels = &syn.observer_kernels;
    ctx.observer_gains = &syn.observer_gains;
    ctx.grid = c.grid;
    ctx.heat = c.heat;
    stage = "verify";
    bool all = true;
    for (const auto& n : names) {
      const VerifyReport rep = verify_suite(n, ctx);
      const std::string file = "verify_" + n + ".csv";
      rep.write_csv((fs::path(c.out_dir) / file).string());
      man.add(file);
      log << n << ": " << (rep.pass() ? "pass" : "FAIL") << '\n';
      for (const auto& row : rep.rows)
        if (!row.pass) log << "  " << row.check << " = " << row.value << " (threshold " << row.threshold << ")\n";
      all = all && rep.pass();
    }
    return all ? 0 : 1;
  });
}

}  // namespace bladectl
