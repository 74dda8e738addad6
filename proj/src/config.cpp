#include "bladectl/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <regex>
#include <set>
#include <sstream>

namespace bladectl {

std::string scenario_name(Scenario s) {
  switch (s) {
    case Scenario::OpenLoop: return "open-loop";
    case Scenario::StateFeedback: return "state-feedback";
    case Scenario::OutputFeedback: return "output-feedback";
  }
  return "?";
}

Scenario parse_scenario(const std::string& text) {
  if (text == "open-loop") return Scenario::OpenLoop;
  if (text == "state-feedback") return Scenario::StateFeedback;
  if (text == "output-feedback") return Scenario::OutputFeedback;
  fail(ErrorKind::Config, "scenario must be open-loop, state-feedback or output-feedback (got '" + text + "')");
}

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::string strip_spaces(const std::string& s) {
  std::string r;
  for (char c : s)
    if (!std::isspace(static_cast<unsigned char>(c))) r += c;
  return r;
}

double to_number(const std::string& field, const std::string& text) {
  const std::string t = trim(text);
  try {
    size_t used = 0;
    const double v = std::stod(t, &used);
    if (used == t.size() && std::isfinite(v)) return v;
  } catch (const std::exception&) {
  }
  fail(ErrorKind::Config, field + ": '" + text + "' is not a finite number");
}

// Entries separated by ',' or blanks.
std::vector<double> to_list(const std::string& field, std::string text) {
  std::replace(text.begin(), text.end(), ',', ' ');
  std::vector<double> v;
  std::string item;
  std::stringstream ss(text);
  while (ss >> item) v.push_back(to_number(field, item));
  if (v.empty()) fail(ErrorKind::Config, field + ": empty list");
  return v;
}

Vec to_vec(const std::string& field, const std::string& text) {
  const auto v = to_list(field, text);
  return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
}

// Rows separated by ';', entries by ',' or blanks.
Mat to_mat(const std::string& field, const std::string& text) {
  std::vector<std::vector<double>> rows;
  std::string row;
  std::stringstream ss(text);
  while (std::getline(ss, row, ';')) {
    std::replace(row.begin(), row.end(), ',', ' ');
    std::stringstream rs(row);
    std::vector<double> r;
    std::string tok;
    while (rs >> tok) r.push_back(to_number(field, tok));
    if (!r.empty()) rows.push_back(r);
  }
  if (rows.empty()) fail(ErrorKind::Config, field + ": empty matrix");
  Mat M(rows.size(), rows[0].size());
  for (size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows[0].size()) fail(ErrorKind::Config, field + ": ragged matrix rows");
    for (size_t j = 0; j < rows[i].size(); ++j) M(i, j) = rows[i][j];
  }
  return M;
}

bool to_bool(const std::string& field, const std::string& text) {
  const std::string t = trim(text);
  if (t == "on" || t == "true" || t == "yes" || t == "1") return true;
  if (t == "off" || t == "false" || t == "no" || t == "0") return false;
  fail(ErrorKind::Config, field + ": expected on/off (got '" + text + "')");
}

int to_int(const std::string& field, const std::string& text) {
  const double v = to_number(field, text);
  if (v != std::floor(v) || std::abs(v) > 1e9) fail(ErrorKind::Config, field + ": expected an integer");
  return static_cast<int>(v);
}

}  // namespace

Profile Profile::parse(const std::string& text) {
  Profile p;
  const std::string t = strip_spaces(text);
  if (t == "compatible") {
    p.compatible = true;
    return p;
  }
  if (t.empty()) fail(ErrorKind::Config, "empty profile");
  // Split on top-level + / - signs (not inside parentheses, not exponent signs).
  std::vector<std::string> terms;
  std::string cur;
  int depth = 0;
  for (size_t i = 0; i < t.size(); ++i) {
    const char c = t[i];
    if (c == '(') ++depth;
    if (c == ')') --depth;
    const bool exponent = i > 0 && (t[i - 1] == 'e' || t[i - 1] == 'E') && i > 1 && std::isdigit(t[i - 2]);
    if ((c == '+' || c == '-') && depth == 0 && i > 0 && !exponent) {
      terms.push_back(cur);
      cur.clear();
    }
    cur += c;
  }
  terms.push_back(cur);
  static const std::regex sine(R"(([+-]?[0-9.eE+-]*)\*?sin\(([0-9.eE+-]*)\*?pi\*x\))");
  for (const auto& term : terms) {
    std::smatch m;
    if (std::regex_match(term, m, sine)) {
      const std::string a = m[1].str(), b = m[2].str();
      double av = 1.0;
      if (a == "-")
        av = -1.0;
      else if (!a.empty() && a != "+")
        av = to_number("profile", a);
      const double bv = b.empty() ? 1.0 : to_number("profile", b);
      p.sines.emplace_back(av, bv);
    } else {
      p.constant += to_number("profile term", term);
    }
  }
  return p;
}

Vec Profile::sample(const Vec& x) const {
  Vec v = Vec::Constant(x.size(), constant);
  for (const auto& [a, b] : sines)
    for (Eigen::Index i = 0; i < x.size(); ++i) v(i) += a * std::sin(b * M_PI * x(i));
  return v;
}

GeneralPlantSpec RunConfig::build_spec() const {
  if (physical) return build_general_spec(nondimensionalize(phys), phys);
  return general;
}

Vec RunConfig::initial_d(const GeneralPlantSpec& spec) const {
  if (!disturbance) return Vec::Zero(spec.m());
  if (d0) return *d0;
  return physical ? phys.d0 : Vec::Zero(spec.m());
}

const std::vector<std::string>& required_config_keys() {
  static const std::vector<std::string> keys{"scenario.mode", "grid.dx", "grid.dt", "grid.t_final",
                                             "control.c1_acute"};
  return keys;
}

namespace {

using Setter = std::function<void(RunConfig&, const std::string& field, const std::string& value)>;

Fn1 const_fn(double v) {
  if (v == 0.0) return {};
  return [v](double) { return v; };
}
Fn2 const_fn2(double v) {
  if (v == 0.0) return {};
  return [v](double, double) { return v; };
}
RowFn const_row(const Vec& v) {
  if (v.cwiseAbs().maxCoeff() == 0.0) return {};
  const RowVec r = v.transpose();
  return [r](double) { return r; };
}

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> t;
    auto num = [](double RunConfig::*m) {
      return [m](RunConfig& c, const std::string& f, const std::string& v) { c.*m = to_number(f, v); };
    };
    auto phys = [](double PhysicalBeamParams::*m) {
      return [m](RunConfig& c, const std::string& f, const std::string& v) { c.phys.*m = to_number(f, v); };
    };
    auto gen = [](double GeneralPlantSpec::*m) {
      return [m](RunConfig& c, const std::string& f, const std::string& v) { c.general.*m = to_number(f, v); };
    };
    auto genmat = [](Mat GeneralPlantSpec::*m) {
      return [m](RunConfig& c, const std::string& f, const std::string& v) { c.general.*m = to_mat(f, v); };
    };
    auto genfn = [](Fn1 GeneralPlantSpec::*m) {
      return [m](RunConfig& c, const std::string& f, const std::string& v) { c.general.*m = const_fn(to_number(f, v)); };
    };
    auto genfn2 = [](Fn2 GeneralPlantSpec::*m) {
      return [m](RunConfig& c, const std::string& f, const std::string& v) { c.general.*m = const_fn2(to_number(f, v)); };
    };
    auto genrow = [](RowFn GeneralPlantSpec::*m) {
      return [m](RunConfig& c, const std::string& f, const std::string& v) { c.general.*m = const_row(to_vec(f, v)); };
    };

    t["scenario.mode"] = [](RunConfig& c, const std::string&, const std::string& v) {
      c.scenario = parse_scenario(trim(v));
    };
    t["scenario.disturbance"] = [](RunConfig& c, const std::string& f, const std::string& v) {
      c.disturbance = to_bool(f, v);
    };
    t["plant.model"] = [](RunConfig& c, const std::string& f, const std::string& v) {
      const std::string m = trim(v);
      if (m == "physical")
        c.physical = true;
      else if (m == "general")
        c.physical = false;
      else
        fail(ErrorKind::Config, f + ": expected physical or general (got '" + v + "')");
    };

    for (const auto& [k, m] : std::vector<std::pair<std::string, double PhysicalBeamParams::*>>{
             {"E_star", &PhysicalBeamParams::E_star},       {"G_star", &PhysicalBeamParams::G_star},
             {"rho_star", &PhysicalBeamParams::rho_star},   {"A_star", &PhysicalBeamParams::A_star},
             {"I_star", &PhysicalBeamParams::I_star},       {"k_prime", &PhysicalBeamParams::k_prime},
             {"L_star", &PhysicalBeamParams::L_star},       {"R_star", &PhysicalBeamParams::R_star},
             {"J_star", &PhysicalBeamParams::J_star},       {"alpha0", &PhysicalBeamParams::alpha0},
             {"S0", &PhysicalBeamParams::S0},               {"beta_star", &PhysicalBeamParams::beta_star},
             {"c_star", &PhysicalBeamParams::c_star},       {"kappa_acute", &PhysicalBeamParams::kappa_acute},
             {"k1", &PhysicalBeamParams::k1},               {"k2", &PhysicalBeamParams::k2},
             {"Q1", &PhysicalBeamParams::Q1},               {"Q2", &PhysicalBeamParams::Q2},
             {"omega_d", &PhysicalBeamParams::omega_d},     {"I0", &PhysicalBeamParams::I0},
             {"omega0", &PhysicalBeamParams::omega0},       {"eps", &PhysicalBeamParams::eps_override}})
      t["physical." + k] = phys(m);
    t["physical.Ad"] = [](RunConfig& c, const std::string& f, const std::string& v) { c.phys.Ad = to_mat(f, v); };
    t["physical.q"] = [](RunConfig& c, const std::string& f, const std::string& v) { c.phys.q_row = to_mat(f, v); };
    t["physical.eta_disturbance_profile"] = [](RunConfig& c, const std::string& f, const std::string& v) {
      const std::string m = trim(v);
      if (m != "phi1" && m != "phi2") fail(ErrorKind::Config, f + ": expected phi1 or phi2");
      c.phys.eta_disturbance_phi2 = m == "phi2";
    };

    for (const auto& [k, m] : std::vector<std::pair<std::string, double GeneralPlantSpec::*>>{
             {"eps1", &GeneralPlantSpec::eps1}, {"eps2", &GeneralPlantSpec::eps2}, {"c0", &GeneralPlantSpec::c0},
             {"c1s", &GeneralPlantSpec::c1s},   {"q0", &GeneralPlantSpec::q0},     {"q1", &GeneralPlantSpec::q1},
             {"kappa0", &GeneralPlantSpec::kappa0}})
      t["general." + k] = gen(m);
    for (const auto& [k, m] : std::vector<std::pair<std::string, Mat GeneralPlantSpec::*>>{
             {"A", &GeneralPlantSpec::A}, {"B", &GeneralPlantSpec::B}, {"C", &GeneralPlantSpec::C},
             {"p2", &GeneralPlantSpec::p2}, {"Ad", &GeneralPlantSpec::Ad}, {"q", &GeneralPlantSpec::q}})
      t["general." + k] = genmat(m);
    for (const auto& [k, m] : std::vector<std::pair<std::string, Fn1 GeneralPlantSpec::*>>{
             {"c1", &GeneralPlantSpec::c1}, {"c2", &GeneralPlantSpec::c2}, {"g1", &GeneralPlantSpec::g1},
             {"g2", &GeneralPlantSpec::g2}, {"mu1", &GeneralPlantSpec::mu1}, {"mu2", &GeneralPlantSpec::mu2}})
      t["general." + k] = genfn(m);
    for (const auto& [k, m] : std::vector<std::pair<std::string, Fn2 GeneralPlantSpec::*>>{
             {"f11", &GeneralPlantSpec::f11}, {"f12", &GeneralPlantSpec::f12}, {"f13", &GeneralPlantSpec::f13},
             {"f21", &GeneralPlantSpec::f21}, {"f22", &GeneralPlantSpec::f22}, {"f23", &GeneralPlantSpec::f23}})
      t["general." + k] = genfn2(m);
    for (const auto& [k, m] : std::vector<std::pair<std::string, RowFn GeneralPlantSpec::*>>{
             {"D1", &GeneralPlantSpec::D1}, {"D2", &GeneralPlantSpec::D2}, {"G1", &GeneralPlantSpec::G1},
             {"G2", &GeneralPlantSpec::G2}})
      t["general." + k] = genrow(m);

    t["grid.dx"] = [](RunConfig& c, const std::string& f, const std::string& v) {
      const double dx = to_number(f, v);
      if (!(dx > 0 && dx <= 0.5)) fail(ErrorKind::Config, f + ": must lie in (0, 0.5]");
      const double n = 1.0 / dx;
      if (std::abs(n - std::round(n)) > 1e-9 * n) fail(ErrorKind::Config, f + ": 1/dx must be an integer");
      c.grid.Nx = static_cast<int>(std::lround(n)) + 1;
    };
    t["grid.dt"] = [](RunConfig& c, const std::string& f, const std::string& v) { c.grid.dt = to_number(f, v); };
    t["grid.t_final"] = [](RunConfig& c, const std::string& f, const std::string& v) {
      c.grid.t_final = to_number(f, v);
    };
    t["grid.heat"] = [](RunConfig& c, const std::string& f, const std::string& v) {
      const std::string m = trim(v);
      if (m == "explicit")
        c.heat = HeatScheme::Explicit;
      else if (m == "backward-euler")
        c.heat = HeatScheme::BackwardEuler;
      else
        fail(ErrorKind::Config, f + ": expected explicit or backward-euler");
    };
    t["grid.transport"] = [](RunConfig& c, const std::string& f, const std::string& v) {
      const std::string m = trim(v);
      if (m == "upwind")
        c.transport = TransportScheme::Upwind;
      else if (m == "semi-lagrangian")
        c.transport = TransportScheme::SemiLagrangian;
      else
        fail(ErrorKind::Config, f + ": expected upwind or semi-lagrangian");
    };

    t["control.K_poles"] = [](RunConfig& c, const std::string& f, const std::string& v) { c.K_poles = to_list(f, v); };
    t["control.c1_acute"] = num(&RunConfig::c1_acute);
    t["observer.L_z"] = [](RunConfig& c, const std::string& f, const std::string& v) { c.L_z = to_number(f, v); };
    t["observer.poles_x"] = [](RunConfig& c, const std::string& f, const std::string& v) {
      c.observer_poles_x = to_list(f, v);
    };
    t["observer.poles_d"] = [](RunConfig& c, const std::string& f, const std::string& v) {
      c.observer_poles_d = to_list(f, v);
    };

    t["kernels.method"] = [](RunConfig& c, const std::string& f, const std::string& v) {
      const std::string m = trim(v);
      if (m == "series")
        c.kernels.method = KernelMethod::Series;
      else if (m == "iterative")
        c.kernels.method = KernelMethod::Iterative;
      else
        fail(ErrorKind::Config, f + ": expected series or iterative");
    };
    t["kernels.N"] = [](RunConfig& c, const std::string& f, const std::string& v) { c.kernels.N = to_int(f, v); };
    t["kernels.Nk"] = [](RunConfig& c, const std::string& f, const std::string& v) { c.kernels.Nk = to_int(f, v); };
    t["kernels.N_fourier"] = [](RunConfig& c, const std::string& f, const std::string& v) {
      c.kernels.N_fourier = to_int(f, v);
    };
    t["kernels.tol"] = [](RunConfig& c, const std::string& f, const std::string& v) { c.kernels.tol = to_number(f, v); };
    t["kernels.M_iter"] = [](RunConfig& c, const std::string& f, const std::string& v) {
      c.kernels.M_iter = to_int(f, v);
    };
    t["kernels.max_sweeps"] = [](RunConfig& c, const std::string& f, const std::string& v) {
      c.kernels.max_sweeps = to_int(f, v);
    };
    t["kernels.gamma_duplicate"] = [](RunConfig& c, const std::string& f, const std::string& v) {
      c.kernels.gamma_duplicate = to_bool(f, v);
    };

    t["disturbance.d0"] = [](RunConfig& c, const std::string& f, const std::string& v) { c.d0 = to_vec(f, v); };

    auto prof = [](Profile RunConfig::*m) {
      return [m](RunConfig& c, const std::string& f, const std::string& v) {
        try {
          c.*m = Profile::parse(v);
        } catch (const Error& e) {
          fail(ErrorKind::Config, f + ": " + e.what());
        }
      };
    };
    t["initial.xi"] = prof(&RunConfig::xi0);
    t["initial.eta"] = prof(&RunConfig::eta0);
    t["initial.u"] = prof(&RunConfig::u0);
    t["initial.z"] = num(&RunConfig::z0);
    t["initial.X"] = [](RunConfig& c, const std::string& f, const std::string& v) { c.X0 = to_vec(f, v); };
    t["observer_initial.xi_offset"] = prof(&RunConfig::xi_offset);
    t["observer_initial.eta_offset"] = prof(&RunConfig::eta_offset);
    t["observer_initial.z_offset"] = num(&RunConfig::z_offset);
    t["observer_initial.X_offset"] = [](RunConfig& c, const std::string& f, const std::string& v) {
      c.X_offset = to_vec(f, v);
    };
    t["observer_initial.d_offset"] = [](RunConfig& c, const std::string& f, const std::string& v) {
      c.d_offset = to_vec(f, v);
    };

    t["output.dir"] = [](RunConfig& c, const std::string&, const std::string& v) { c.out_dir = trim(v); };
    t["output.snapshot_stride"] = [](RunConfig& c, const std::string& f, const std::string& v) {
      c.snapshot_stride = to_int(f, v);
    };
    t["output.norm_stride"] = [](RunConfig& c, const std::string& f, const std::string& v) {
      c.norm_stride = to_int(f, v);
    };
    return t;
  }();
  return table;
}

void check_invariants(const RunConfig& c) {
  if (!(c.grid.t_final > 0)) fail(ErrorKind::Config, "grid.t_final: must be positive");
  if (!(c.grid.dt > 0)) fail(ErrorKind::Config, "grid.dt: must be positive");
  if (!(c.c1_acute > 0)) fail(ErrorKind::Config, "control.c1_acute: must be positive");
  if (c.snapshot_stride < 1) fail(ErrorKind::Config, "output.snapshot_stride: must be at least 1");
  if (c.norm_stride < 1) fail(ErrorKind::Config, "output.norm_stride: must be at least 1");
  if (c.kernels.N < 1) fail(ErrorKind::Config, "kernels.N: must be at least 1");
  if (c.kernels.Nk < 5) fail(ErrorKind::Config, "kernels.Nk: must be at least 5");
  GeneralPlantSpec spec;
  try {
    if (c.physical) c.phys.validate();
    spec = c.build_spec();
    spec.validate(false);
  } catch (const Error& e) {
    fail(ErrorKind::Config, std::string(c.physical ? "physical" : "general") + ": " + e.what());
  }
  if (static_cast<int>(c.K_poles.size()) != spec.n())
    fail(ErrorKind::Config, "control.K_poles: expected " + std::to_string(spec.n()) + " poles");
  if (c.X0.size() != spec.n()) fail(ErrorKind::Config, "initial.X: expected " + std::to_string(spec.n()) + " entries");
  if (c.X_offset.size() != spec.n())
    fail(ErrorKind::Config, "observer_initial.X_offset: expected " + std::to_string(spec.n()) + " entries");
  if (c.d0 && c.d0->size() != spec.m())
    fail(ErrorKind::Config, "disturbance.d0: expected " + std::to_string(spec.m()) + " entries");
  if (c.d_offset && c.d_offset->size() != spec.m())
    fail(ErrorKind::Config, "observer_initial.d_offset: expected " + std::to_string(spec.m()) + " entries");
  if (!c.observer_poles_x.empty() && static_cast<int>(c.observer_poles_x.size()) != spec.n())
    fail(ErrorKind::Config, "observer.poles_x: expected " + std::to_string(spec.n()) + " poles");
  if (!c.observer_poles_d.empty() && static_cast<int>(c.observer_poles_d.size()) != spec.m())
    fail(ErrorKind::Config, "observer.poles_d: expected " + std::to_string(spec.m()) + " poles");
  if (c.xi0.compatible || c.eta0.compatible)
    fail(ErrorKind::Config, "initial.xi/initial.eta: 'compatible' applies to initial.u only");
  try {
    PlantDiscretization::check_cfl(spec, c.grid, c.heat);
  } catch (const Error& e) {
    fail(ErrorKind::Config, std::string("grid.dt: ") + e.what());
  }
}

}  // namespace

RunConfig parse_config(const std::string& text, const std::string& source, const ConfigOverrides& overrides) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    fail(ErrorKind::Config, source + ":" + std::to_string(e.line()) + ": " + e.message());
  }
  std::set<std::string> seen;
  RunConfig c;
  c.u0.compatible = true;
  c.xi0 = Profile::parse("2*sin(2*pi*x)");
  c.eta0 = c.xi0;
  c.xi_offset = Profile::parse("sin(2*pi*x)");
  c.eta_offset = c.xi_offset;
  const auto& table = setters();
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty())
      fail(ErrorKind::Config, source + ": key '" + section + "' must belong to a section");
    for (const auto& [key, value] : body) {
      const std::string field = section + "." + key;
      const auto it = table.find(field);
      if (it == table.end()) fail(ErrorKind::Config, source + ": unknown field '" + field + "'");
      it->second(c, field, value.data());
      seen.insert(field);
    }
  }
  for (const auto& [field, value] : overrides) {
    const auto it = table.find(field);
    if (it == table.end()) fail(ErrorKind::Config, "override: unknown field '" + field + "'");
    it->second(c, field, value);
    seen.insert(field);
  }
  std::vector<std::string> missing;
  for (const auto& k : required_config_keys())
    if (!seen.count(k)) missing.push_back(k);
  if (!missing.empty()) {
    std::string msg = source + ": missing required fields:";
    for (const auto& k : missing) msg += " " + k;
    fail(ErrorKind::Config, msg);
  }
  if (!c.physical && !c.d0) c.d0 = Vec::Zero(c.general.m());
  check_invariants(c);
  return c;
}

RunConfig load_config(const std::string& path, const ConfigOverrides& overrides) {
  std::ifstream f(path);
  if (!f) fail(ErrorKind::Config, "cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str(), path, overrides);
}

}  // namespace bladectl
