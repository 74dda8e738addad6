#include "bladectl/plant.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace bladectl {

namespace {

Mat volterra(const Fn2& f, const Vec& x) {
  const int n = static_cast<int>(x.size());
  const double h = x(1) - x(0);
  Mat V = Mat::Zero(n, n);
  if (!f) return V;
  for (int i = 1; i < n; ++i) {
    for (int j = 0; j <= i; ++j) {
      const double w = (j == 0 || j == i) ? 0.5 * h : h;
      V(i, j) = w * f(x(i), x(j));
    }
  }
  return V;
}

Vec sample(const Fn1& f, const Vec& x) {
  Vec v = Vec::Zero(x.size());
  if (f)
    for (Eigen::Index i = 0; i < x.size(); ++i) v(i) = f(x(i));
  return v;
}

Mat sample_rows(const RowFn& f, const Vec& x, int cols) {
  Mat M = Mat::Zero(x.size(), cols);
  if (f)
    for (Eigen::Index i = 0; i < x.size(); ++i) M.row(i) = f(x(i));
  return M;
}

}  // namespace

bool is_finite(const PlantState& s) {
  return std::isfinite(s.z) && s.xi.allFinite() && s.eta.allFinite() && s.u.allFinite() && s.X.allFinite() &&
         s.d.allFinite();
}

void GeneralPlantSpec::validate(bool check_assumptions) const {
  if (!(eps1 > 0)) fail(ErrorKind::Validation, "eps1 must be positive");
  if (!(eps2 > 0)) fail(ErrorKind::Validation, "eps2 must be positive");
  if (!(kappa0 > 0)) fail(ErrorKind::Validation, "kappa0 must be positive");
  if (q1 == 0.0) fail(ErrorKind::Validation, "q1 must be nonzero");
  const int nn = n(), mm = m();
  if (A.cols() != nn || B.rows() != nn || B.cols() != 1 || C.rows() != 1 || C.cols() != nn || p2.cols() != nn ||
      p2.rows() != 1)
    fail(ErrorKind::Validation, "inconsistent ODE dimensions (A, B, C, p2)");
  if (Ad.cols() != mm || q.rows() != 1 || q.cols() != mm)
    fail(ErrorKind::Validation, "inconsistent disturbance dimensions (Ad, q)");
  if (!check_assumptions) return;
  if (!is_controllable(A, B)) fail(ErrorKind::Validation, "the pair (A,B) is not controllable");
  if (!is_observable(A, C)) fail(ErrorKind::Validation, "the pair (A,C) is not observable");
  if (mm > 0) {
    if (!is_observable(Ad, q)) fail(ErrorKind::Validation, "the pair (Ad,q) is not observable");
    Eigen::EigenSolver<Mat> es(Ad);
    if ((es.eigenvalues().real().array().abs() > 1e-9).any())
      fail(ErrorKind::Validation, "Ad must have its spectrum on the imaginary axis");
  }
}

GeneralPlantSpec GeneralPlantSpec::zero_coupling(int n, int m) {
  GeneralPlantSpec s;
  s.A = Mat::Zero(n, n);
  s.B = Mat::Zero(n, 1);
  s.B(n - 1, 0) = 1.0;
  s.C = Mat::Zero(1, n);
  s.C(0, 0) = 1.0;
  if (n > 1)
    for (int i = 0; i + 1 < n; ++i) s.A(i, i + 1) = 1.0;
  s.p2 = Mat::Zero(1, n);
  s.Ad = Mat::Zero(m, m);
  if (m == 2) s.Ad << 0, M_PI, -M_PI, 0;
  s.q = Mat::Ones(1, m);
  return s;
}

PlantState PlantState::zeros(int Nx, int n, int m) {
  PlantState s;
  s.xi = Vec::Zero(Nx);
  s.eta = Vec::Zero(Nx);
  s.u = Vec::Zero(Nx);
  s.X = Vec::Zero(n);
  s.d = Vec::Zero(m);
  return s;
}

void PlantDiscretization::check_cfl(const GeneralPlantSpec& spec, const Grid& grid, HeatScheme heat) {
  if (grid.Nx < 3) fail(ErrorKind::Validation, "grid.Nx must be at least 3");
  if (!(grid.dt > 0)) fail(ErrorKind::Validation, "grid.dt must be positive");
  const double dx = grid.dx();
  const double lim = std::min(spec.eps1, spec.eps2) * dx;
  if (grid.dt > lim * (1 + 1e-12)) {
    std::ostringstream os;
    os << "CFL violation: dt=" << grid.dt << " exceeds min(eps1,eps2)*dx=" << lim;
    fail(ErrorKind::Validation, os.str());
  }
  if (heat == HeatScheme::Explicit && spec.kappa0 * grid.dt / (dx * dx) > 0.5 + 1e-12) {
    std::ostringstream os;
    os << "explicit heat stability violation: kappa0*dt/dx^2=" << spec.kappa0 * grid.dt / (dx * dx) << " > 1/2";
    fail(ErrorKind::Validation, os.str());
  }
}

PlantDiscretization::PlantDiscretization(const GeneralPlantSpec& spec, const Grid& grid, HeatScheme heat)
    : spec_(spec), grid_(grid), heat_(heat) {
  check_cfl(spec, grid, heat);
  x_ = unit_grid(grid.Nx);
  V_["f11"] = volterra(spec.f11, x_);
  V_["f12"] = volterra(spec.f12, x_);
  V_["f13"] = volterra(spec.f13, x_);
  V_["f21"] = volterra(spec.f21, x_);
  V_["f22"] = volterra(spec.f22, x_);
  V_["f23"] = volterra(spec.f23, x_);
  c1_ = sample(spec.c1, x_);
  c2_ = sample(spec.c2, x_);
  g1_ = sample(spec.g1, x_);
  g2_ = sample(spec.g2, x_);
  mu1_ = sample(spec.mu1, x_);
  mu2_ = sample(spec.mu2, x_);
  D1_ = sample_rows(spec.D1, x_, spec.n());
  D2_ = sample_rows(spec.D2, x_, spec.n());
  G1_ = sample_rows(spec.G1, x_, spec.m());
  G2_ = sample_rows(spec.G2, x_, spec.m());
  std::tie(eA_, pA_) = expm_phi1(spec.A * grid.dt);
  pA_ *= grid.dt;
  std::tie(eAd_, pAd_) = expm_phi1(spec.Ad * grid.dt);
  pAd_ *= grid.dt;
  if (heat == HeatScheme::BackwardEuler) {
    const int ni = grid.Nx - 2;
    const double r = spec.kappa0 * grid.dt / (grid.dx() * grid.dx());
    Mat M = Mat::Zero(ni, ni);
    for (int i = 0; i < ni; ++i) {
      M(i, i) = 1 + 2 * r;
      if (i > 0) M(i, i - 1) = -r;
      if (i + 1 < ni) M(i, i + 1) = -r;
    }
    heat_lu_.compute(M);
  }
}

void PlantDiscretization::sources(const PlantState& s, Vec& Sxi, Vec& Seta) const {
  const double xi0 = s.xi(0);
  Sxi = c2_.cwiseProduct(s.eta) + D2_ * s.X + V_.at("f22") * s.xi + g2_ * xi0 + V_.at("f21") * s.eta +
        mu2_.cwiseProduct(s.u) + V_.at("f23") * s.u + G2_ * s.d;
  Seta = c1_.cwiseProduct(s.xi) + D1_ * s.X + V_.at("f12") * s.xi + g1_ * xi0 + V_.at("f11") * s.eta +
         mu1_.cwiseProduct(s.u) + V_.at("f13") * s.u + G1_ * s.d;
}

void PlantDiscretization::transport(const PlantState& s, const Vec& Sxi, const Vec& Seta, Vec& xi_new,
                                    Vec& eta_new) const {
  const int N = grid_.Nx - 1;
  const double dt = grid_.dt, dx = grid_.dx();
  xi_new = s.xi;
  eta_new = s.eta;
  const double a2 = dt / spec_.eps2, a1 = dt / spec_.eps1;
  if (transport_scheme_ == TransportScheme::SemiLagrangian) {
    for (int i = 0; i < N; ++i) xi_new(i) = interp_cubic_uniform(s.xi, x_(i) + a2) + a2 * Sxi(i);
    for (int i = 1; i <= N; ++i) eta_new(i) = interp_cubic_uniform(s.eta, x_(i) - a1) + a1 * Seta(i);
    return;
  }
  for (int i = 0; i < N; ++i) xi_new(i) = s.xi(i) + a2 * ((s.xi(i + 1) - s.xi(i)) / dx + Sxi(i));
  for (int i = 1; i <= N; ++i) eta_new(i) = s.eta(i) + a1 * (-(s.eta(i) - s.eta(i - 1)) / dx + Seta(i));
}

Vec PlantDiscretization::heat(const Vec& u, double u0_new) const {
  const int N = grid_.Nx - 1;
  const double dx = grid_.dx();
  const double r = spec_.kappa0 * grid_.dt / (dx * dx);
  Vec un = Vec::Zero(N + 1);
  if (heat_ == HeatScheme::Explicit) {
    for (int i = 1; i < N; ++i) un(i) = u(i) + r * (u(i + 1) - 2 * u(i) + u(i - 1));
  } else {
    Vec rhs = u.segment(1, N - 1);
    rhs(0) += r * u0_new;
    un.segment(1, N - 1) = heat_lu_.solve(rhs);
  }
  un(0) = u0_new;
  un(N) = 0.0;
  return un;
}

PlantState PlantDiscretization::step(const PlantState& s, double U) const {
  const int N = grid_.Nx - 1;
  const double dt = grid_.dt;
  Vec Sxi, Seta;
  sources(s, Sxi, Seta);
  PlantState n;
  n.t = s.t + dt;
  transport(s, Sxi, Seta, n.xi, n.eta);
  // ODE and disturbance updates (exact exponentials, xi(0) held over the step)
  n.d = eAd_ * s.d;
  n.X = eA_ * s.X + pA_ * (spec_.B * s.xi(0));
  n.z = s.z + dt * (spec_.c0 * s.z + spec_.c1s * s.xi(N) + U);
  // heat
  const double u0 = (spec_.q * n.d)(0) + (spec_.p2 * n.X)(0);
  n.u = heat(s.u, u0);
  // boundary conditions
  n.xi(N) = -spec_.q1 * n.eta(N) + spec_.q0 * n.z;
  n.eta(0) = n.xi(0) + (spec_.C * n.X)(0);
  return n;
}

Measurements PlantDiscretization::measure(const PlantState& s) const {
  return {s.xi(0), s.u(0), (spec_.C * s.X)(0)};
}

Trace simulate(const PlantDiscretization& disc, const PlantState& initial, const Controller& controller,
               const RecordPlan& plan) {
  Trace tr;
  PlantState s = initial;
  const int steps = disc.grid().steps();
  auto record = [&](const PlantState& st, double U, int k) {
    tr.t.push_back(st.t);
    tr.z.push_back(st.z);
    tr.U.push_back(U);
    tr.X.push_back(st.X);
    tr.d.push_back(st.d);
    if (plan.state_stride > 0 && (k % plan.state_stride == 0 || k == steps)) tr.states.push_back(st);
  };
  for (int k = 0; k <= steps; ++k) {
    const double U = controller ? controller(s) : 0.0;
    record(s, U, k);
    if (k == steps) break;
    s = disc.step(s, U);
    if (!is_finite(s)) {
      tr.diverged = true;
      std::ostringstream os;
      os << "non-finite state at t=" << s.t;
      tr.divergence_message = os.str();
      break;
    }
  }
  return tr;
}

PlantResidual residual(const GeneralPlantSpec& spec, const Grid& grid, const Trace& trace) {
  if (trace.states.size() < 3) fail(ErrorKind::Validation, "residual needs at least 3 stored states");
  PlantDiscretization disc(spec, grid, HeatScheme::BackwardEuler);  // sources only
  PlantResidual r;
  const int N = grid.Nx - 1;
  const double dx = grid.dx();
  const auto& S = trace.states;
  auto acc = [](double& a, double v) { a = std::max(a, std::abs(v)); };
  for (size_t k = 1; k + 1 < S.size(); ++k) {
    const double dt2 = S[k + 1].t - S[k - 1].t;
    Vec Sxi, Seta;
    disc.sources(S[k], Sxi, Seta);
    for (int i = 1; i < N; ++i) {
      acc(r.xi, spec.eps2 * (S[k + 1].xi(i) - S[k - 1].xi(i)) / dt2 - (S[k].xi(i + 1) - S[k].xi(i - 1)) / (2 * dx) -
                    Sxi(i));
      acc(r.eta, spec.eps1 * (S[k + 1].eta(i) - S[k - 1].eta(i)) / dt2 +
                     (S[k].eta(i + 1) - S[k].eta(i - 1)) / (2 * dx) - Seta(i));
      acc(r.heat, (S[k + 1].u(i) - S[k - 1].u(i)) / dt2 -
                      spec.kappa0 * (S[k].u(i + 1) - 2 * S[k].u(i) + S[k].u(i - 1)) / (dx * dx));
    }
    r.X = std::max(r.X, ((S[k + 1].X - S[k - 1].X) / dt2 - spec.A * S[k].X - spec.B * S[k].xi(0))
                            .cwiseAbs()
                            .maxCoeff());
    r.d = std::max(r.d, ((S[k + 1].d - S[k - 1].d) / dt2 - spec.Ad * S[k].d).cwiseAbs().maxCoeff());
  }
  return r;
}

namespace {
std::string stamp(double t) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(6) << t;
  return os.str();
}
}  // namespace

std::vector<std::string> export_trace_csv(const Trace& trace, const std::string& dir, const std::string& prefix) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  std::vector<std::string> files;
  {
    const std::string name = prefix + "series.csv";
    std::ofstream f(fs::path(dir) / name);
    f << std::setprecision(12);
    const size_t n = trace.t.empty() ? 0 : trace.X.front().size();
    f << "t,z,absX";
    for (size_t i = 0; i < n; ++i) f << ",X" << i;
    f << ",U";
    for (const auto& [k, v] : trace.series) f << "," << k;
    f << "\n";
    for (size_t r = 0; r < trace.t.size(); ++r) {
      f << trace.t[r] << "," << trace.z[r] << "," << trace.X[r].norm();
      for (size_t i = 0; i < n; ++i) f << "," << trace.X[r](i);
      f << "," << trace.U[r];
      for (const auto& [k, v] : trace.series) f << "," << (r < v.size() ? v[r] : NAN);
      f << "\n";
    }
    files.push_back(name);
  }
  for (const auto& s : trace.states) {
    const Vec x = unit_grid(static_cast<int>(s.xi.size()));
    const std::pair<const char*, const Vec*> fields[] = {{"xi", &s.xi}, {"eta", &s.eta}, {"u", &s.u}};
    for (const auto& [nm, v] : fields) {
      const std::string name = prefix + nm + "_t" + stamp(s.t) + ".csv";
      std::ofstream f(fs::path(dir) / name);
      f << std::setprecision(12) << "x,value\n";
      for (Eigen::Index i = 0; i < x.size(); ++i) f << x(i) << "," << (*v)(i) << "\n";
      files.push_back(name);
    }
  }
  return files;
}

}  // namespace bladectl
