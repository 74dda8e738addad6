#include "bladectl/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <random>

namespace bladectl {

NormParts norm_parts(const PlantState& s, double dx) {
  NormParts p;
  p.z = s.z * s.z;
  p.xi = h1_norm_sq(s.xi, dx);
  p.eta = h1_norm_sq(s.eta, dx);
  p.u = h1_norm_sq(s.u, dx);
  p.X = s.X.squaredNorm();
  p.d = s.d.squaredNorm();
  return p;
}

double omega0(const PlantState& s, double dx) {
  const NormParts p = norm_parts(s, dx);
  return p.z + p.xi + p.eta + p.X + p.u;
}

double omega_a(const PlantState& plant, const ObserverState& obs, double dx) {
  const NormParts p = norm_parts(plant, dx);
  const NormParts o = norm_parts(obs, dx);
  return p.eta + o.eta + p.xi + o.xi + p.z + o.z + p.X + o.X + o.d;
}

DecayFit fit_decay(const std::vector<double>& t, const std::vector<double>& v, double t0, double t1) {
  DecayFit f;
  std::vector<double> ts, ys;
  for (size_t k = 0; k < t.size() && k < v.size(); ++k) {
    if (t[k] < t0 - 1e-12 || t[k] > t1 + 1e-12) continue;
    double y = v[k];
    if (!(y > 0)) {
      y = 1e-300;
      f.clipped = true;
    }
    ts.push_back(t[k]);
    ys.push_back(std::log(y));
  }
  f.samples = static_cast<int>(ts.size());
  if (f.samples < 2) fail(ErrorKind::Validation, "decay fit needs at least two samples in the window");
  double mt = 0, my = 0;
  for (int k = 0; k < f.samples; ++k) {
    mt += ts[k];
    my += ys[k];
  }
  mt /= f.samples;
  my /= f.samples;
  double stt = 0, sty = 0, syy = 0;
  for (int k = 0; k < f.samples; ++k) {
    stt += (ts[k] - mt) * (ts[k] - mt);
    sty += (ts[k] - mt) * (ys[k] - my);
    syy += (ys[k] - my) * (ys[k] - my);
  }
  f.rate = stt > 0 ? sty / stt : 0.0;
  f.intercept = my - f.rate * mt;
  // A flat series is fitted exactly by a constant.
  f.r2 = syy > 0 ? (sty * sty) / (stt * syy) : 1.0;
  return f;
}

DecayFit fit_envelope(const std::vector<double>& t, const std::vector<double>& v, double t0, double t1,
                      double bin) {
  std::vector<double> te, ve;
  size_t k = 0;
  while (k < t.size() && t[k] < t0 - 1e-12) ++k;
  while (k < t.size() && t[k] <= t1 + 1e-12) {
    const double start = t[k];
    double best = -1.0, tbest = t[k];
    while (k < t.size() && t[k] < start + bin - 1e-12 && t[k] <= t1 + 1e-12) {
      if (std::abs(v[k]) > best) {
        best = std::abs(v[k]);
        tbest = t[k];
      }
      ++k;
    }
    te.push_back(tbest);
    ve.push_back(best);
  }
  return fit_decay(te, ve, t0, t1);
}

Mat sample_kernel(const Mat& K, int Nx) {
  const int Nk = static_cast<int>(K.rows());
  if (Nk == Nx) return K;
  if ((Nk - 1) % (Nx - 1) == 0) {
    const int r = (Nk - 1) / (Nx - 1);
    Mat S(Nx, Nx);
    for (int i = 0; i < Nx; ++i)
      for (int j = 0; j < Nx; ++j) S(i, j) = K(i * r, j * r);
    return S;
  }
  return resample2(K, Nx);
}

Mat sample_rows(const Mat& F, int Nx) {
  const int Nk = static_cast<int>(F.rows());
  Mat S(Nx, F.cols());
  if (Nk == Nx) return F;
  const Vec x = unit_grid(Nx);
  for (Eigen::Index c = 0; c < F.cols(); ++c) {
    if ((Nk - 1) % (Nx - 1) == 0) {
      const int r = (Nk - 1) / (Nx - 1);
      for (int i = 0; i < Nx; ++i) S(i, c) = F(i * r, c);
    } else {
      const Vec col = F.col(c);
      for (int i = 0; i < Nx; ++i) S(i, c) = interp_cubic_uniform(col, x(i));
    }
  }
  return S;
}

namespace {

// Volterra trapezoid matrix: row i integrates over [0, x_i].
Mat volterra_weights(const Mat& K) {
  const int n = static_cast<int>(K.rows());
  const double h = 1.0 / (n - 1);
  Mat W = Mat::Zero(n, n);
  for (int i = 1; i < n; ++i)
    for (int j = 0; j <= i; ++j) W(i, j) = ((j == 0 || j == i) ? 0.5 * h : h) * K(i, j);
  return W;
}

// Fredholm trapezoid matrix over [0, 1].
Mat fredholm_weights(const Mat& K) {
  const int n = static_cast<int>(K.rows());
  const Vec w = trapz_weights(n, 1.0 / (n - 1));
  return K * w.asDiagonal();
}

Vec sample_fn(const Fn1& f, const Vec& x) {
  Vec v = Vec::Zero(x.size());
  if (f)
    for (Eigen::Index i = 0; i < x.size(); ++i) v(i) = f(x(i));
  return v;
}

}  // namespace

BacksteppingTransform::BacksteppingTransform(const KernelSet& ks, int Nx) : Nx_(Nx) {
  Wk_ = volterra_weights(sample_kernel(ks.k, Nx));
  Wl_ = volterra_weights(sample_kernel(ks.l, Nx));
  Wp_ = fredholm_weights(sample_kernel(ks.p, Nx));
  gamma_ = sample_rows(ks.gamma, Nx);
  ups_ = sample_rows(ks.Upsilon, Nx);
  I_minus_Wk_ = Mat::Identity(Nx, Nx) - Wk_;
}

Vec BacksteppingTransform::forward(const PlantState& s) const {
  if (s.xi.size() != Nx_) fail(ErrorKind::Validation, "state grid does not match the transform grid");
  return I_minus_Wk_ * s.xi + gamma_ * s.X - Wl_ * s.eta - Wp_ * s.u + ups_ * s.d;
}

Vec BacksteppingTransform::inverse(const Vec& beta, const Vec& eta, const Vec& u, const Vec& X, const Vec& d) const {
  const Vec rhs = beta - gamma_ * X + Wl_ * eta + Wp_ * u - ups_ * d;
  return I_minus_Wk_.triangularView<Eigen::Lower>().solve(rhs);
}

Vec apply_backstepping(const PlantState& s, const KernelSet& ks) {
  return BacksteppingTransform(ks, static_cast<int>(s.xi.size())).forward(s);
}

Vec apply_inverse(const Vec& beta, const Vec& eta, const Vec& u, const Vec& X, const Vec& d,
                  const InverseKernelSet& iv) {
  const int Nx = static_cast<int>(beta.size());
  const Mat Wr = volterra_weights(sample_kernel(iv.rho, Nx));
  const Mat Ws = volterra_weights(sample_kernel(iv.sigma, Nx));
  const Mat Wv = fredholm_weights(sample_kernel(iv.varrho, Nx));
  return beta - sample_rows(iv.lambda, Nx) * X + Wr * beta + Ws * eta + Wv * u - sample_rows(iv.vartheta, Nx) * d;
}

ObserverErrorTransform::ObserverErrorTransform(const ObserverKernelSet& os, int Nx) : Nx_(Nx) {
  I_plus_Wpsi_ = Mat::Identity(Nx, Nx) + volterra_weights(sample_kernel(os.psi, Nx));
  Wphi_ = volterra_weights(sample_kernel(os.phi, Nx));
  const Vec M = sample_rows(os.M, Nx);
  wM_ = trapz_weights(Nx, 1.0 / (Nx - 1)).cwiseProduct(M).transpose();
}

ErrorTargetState ObserverErrorTransform::to_target(const PlantState& e) const {
  if (e.xi.size() != Nx_) fail(ErrorKind::Validation, "state grid does not match the transform grid");
  ErrorTargetState t;
  t.beta = I_plus_Wpsi_.triangularView<Eigen::Lower>().solve(e.xi);
  t.alpha = e.eta - Wphi_ * t.beta;
  t.Y = e.z - wM_.dot(t.beta);
  return t;
}

TargetResidual target_residual(const std::vector<PlantState>& states, double dt, const BacksteppingTransform& T,
                               double eps2, double c1_acute) {
  TargetResidual r;
  if (states.size() < 2) fail(ErrorKind::Validation, "target residual needs at least two consecutive states");
  const int Nx = T.Nx();
  const int N = Nx - 1;
  const double dx = 1.0 / N;
  Vec prev = T.forward(states[0]);
  double si = 0.0, sb = 0.0;
  long ni = 0;
  for (size_t k = 1; k < states.size(); ++k) {
    const Vec next = T.forward(states[k]);
    for (int i = 0; i < N; ++i) {
      const double res = eps2 * (next(i) - prev(i)) / dt - (prev(i + 1) - prev(i)) / dx;
      si += res * res;
      ++ni;
    }
    const double rb = (next(N) - prev(N)) / dt + c1_acute * prev(N);
    sb += rb * rb;
    prev = next;
  }
  r.samples = static_cast<int>(states.size() - 1);
  r.interior_rms = std::sqrt(si / ni);
  r.boundary_rms = std::sqrt(sb / r.samples);
  return r;
}

ErrorTargetResidual observer_target_residual(const GeneralPlantSpec& spec, const std::vector<PlantState>& errors,
                                             double dt, const ObserverKernelSet& os,
                                             const ObserverTargetCoeffs& cf) {
  ErrorTargetResidual r;
  if (errors.size() < 2) fail(ErrorKind::Validation, "error-target residual needs at least two states");
  const int Nx = static_cast<int>(errors[0].xi.size());
  const int N = Nx - 1;
  const double dx = 1.0 / N;
  const Vec x = unit_grid(Nx);
  const ObserverErrorTransform T(os, Nx);
  const Mat W21 = volterra_weights(sample_kernel(cf.S21, Nx)), W23 = volterra_weights(sample_kernel(cf.S23, Nx));
  const Mat W11 = volterra_weights(sample_kernel(cf.S11, Nx)), W13 = volterra_weights(sample_kernel(cf.S13, Nx));
  const Mat N1 = sample_rows(cf.N1, Nx), N2 = sample_rows(cf.N2, Nx), N3 = sample_rows(cf.N3, Nx),
            N4 = sample_rows(cf.N4, Nx);
  const Vec c2 = sample_fn(spec.c2, x), mu1 = sample_fn(spec.mu1, x), mu2 = sample_fn(spec.mu2, x);
  const Vec w = trapz_weights(Nx, dx);
  const Vec wG1 = w.cwiseProduct(sample_rows(cf.G1, Nx)), wG3 = w.cwiseProduct(sample_rows(cf.G3, Nx));
  const double kY = os.L_z * spec.q1 / spec.q0;
  ErrorTargetState prev = T.to_target(errors[0]);
  double sb = 0, sa = 0, sy = 0;
  long nb = 0, na = 0;
  r.alpha0_max = std::abs(prev.alpha(0));
  for (size_t k = 1; k < errors.size(); ++k) {
    const PlantState& e = errors[k - 1];
    const ErrorTargetState next = T.to_target(errors[k]);
    r.alpha0_max = std::max(r.alpha0_max, std::abs(next.alpha(0)));
    const Vec Sb = W21 * prev.alpha + c2.cwiseProduct(prev.alpha) + W23 * e.u + mu2.cwiseProduct(e.u) + N2 * e.X +
                   N4 * e.d;
    const Vec Sa = W11 * prev.alpha + W13 * e.u + mu1.cwiseProduct(e.u) + N1 * e.X + N3 * e.d;
    for (int i = 0; i < N; ++i) {
      const double res = spec.eps2 * (next.beta(i) - prev.beta(i)) / dt - (prev.beta(i + 1) - prev.beta(i)) / dx - Sb(i);
      sb += res * res;
      ++nb;
    }
    for (int i = 1; i <= N; ++i) {
      const double res = spec.eps1 * (next.alpha(i) - prev.alpha(i)) / dt + (prev.alpha(i) - prev.alpha(i - 1)) / dx - Sa(i);
      sa += res * res;
      ++na;
    }
    const double Yrhs = (spec.c0 - os.L_z) * prev.Y - cf.intMN4.dot(e.d) + wG3.dot(e.u) + wG1.dot(prev.alpha) -
                        cf.intMN2.dot(e.X) + kY * prev.alpha(N);
    const double ry = (next.Y - prev.Y) / dt - Yrhs;
    sy += ry * ry;
    prev = next;
  }
  r.samples = static_cast<int>(errors.size() - 1);
  r.beta_rms = std::sqrt(sb / nb);
  r.alpha_rms = std::sqrt(sa / na);
  r.Y_rms = std::sqrt(sy / r.samples);
  return r;
}

NormReport norm_report(const Trace& plant, const Trace* observer, double dx, const DimensionlessParams* phys,
                       const GeneralPlantSpec& spec) {
  NormReport r;
  const bool with_obs = observer && observer->states.size() == plant.states.size();
  for (size_t k = 0; k < plant.states.size(); ++k) {
    const PlantState& s = plant.states[k];
    r.t.push_back(s.t);
    r.omega0.push_back(omega0(s, dx));
    if (with_obs) {
      r.omega_e.push_back(error_norm_Omega_e(s, observer->states[k], dx));
      r.omega_a.push_back(omega_a(s, observer->states[k], dx));
    }
    if (phys) {
      const PhysicalFields f = reconstruct_physical(s, *phys, spec);
      r.PE_bending.push_back(f.PE_bending);
      r.PE_shear.push_back(f.PE_shear);
      r.KE_trans.push_back(f.KE_trans);
      r.KE_rot.push_back(f.KE_rot);
      r.disk.push_back(f.disk);
      r.energy_total.push_back(f.total());
    }
  }
  return r;
}

bool VerifyReport::pass() const {
  return std::all_of(rows.begin(), rows.end(), [](const CheckRow& r) { return r.pass; });
}

void VerifyReport::add(const std::string& check, double value, double threshold, bool ok) {
  rows.push_back({check, value, threshold, ok});
}

void VerifyReport::add_le(const std::string& check, double value, double threshold) {
  add(check, value, threshold, std::isfinite(value) && value <= threshold);
}

void VerifyReport::write_csv(const std::string& path) const {
  std::ofstream f(path);
  if (!f) fail(ErrorKind::Config, "cannot write " + path);
  f << "suite,check,value,threshold,verdict\n" << std::setprecision(10);
  for (const auto& r : rows)
    f << suite << ',' << r.check << ',' << r.value << ',' << r.threshold << ',' << (r.pass ? "pass" : "fail") << '\n';
}

const std::vector<std::string>& verify_suite_names() {
  static const std::vector<std::string> names{"kernels", "transforms", "target", "observer-target", "convergence"};
  return names;
}

PlantState random_smooth_state(const GeneralPlantSpec& spec, int Nx, unsigned long seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  const Vec x = unit_grid(Nx);
  PlantState s = PlantState::zeros(Nx, spec.n(), spec.m());
  auto smooth = [&]() {
    const double a0 = U(rng), a1 = U(rng), a2 = U(rng), b1 = U(rng), b2 = U(rng);
    Vec f(Nx);
    for (int i = 0; i < Nx; ++i)
      f(i) = a0 + a1 * std::sin(M_PI * x(i)) + a2 * std::sin(2 * M_PI * x(i)) + b1 * std::cos(M_PI * x(i)) +
             b2 * x(i) * x(i);
    return f;
  };
  for (int k = 0; k < spec.n(); ++k) s.X(k) = U(rng);
  for (int k = 0; k < spec.m(); ++k) s.d(k) = U(rng);
  s.xi = smooth();
  const Vec r = smooth();
  const double eta0 = s.xi(0) + (spec.C * s.X)(0);
  s.eta = r + (eta0 - r(0)) * (Vec::Ones(Nx) - x);
  const Vec v = smooth();
  const double u0 = (spec.q * s.d)(0) + (spec.p2 * s.X)(0);
  for (int i = 0; i < Nx; ++i) s.u(i) = v(i) * x(i) * (1 - x(i)) + u0 * (1 - x(i));
  s.z = (s.xi(Nx - 1) + spec.q1 * s.eta(Nx - 1)) / spec.q0;
  return s;
}

namespace {

void need(bool ok, const std::string& what) {
  if (!ok) fail(ErrorKind::Config, "verify suite is missing a prerequisite artifact: " + what);
}

// Boundary identities are imposed exactly; equation residuals are finite-difference estimates.
bool is_boundary_identity(const std::string& check) {
  for (const char* key : {"diagonal", "boundary", "terminal", "gamma0", "upsilon0"})
    if (check.find(key) != std::string::npos) return true;
  return false;
}

double kernel_scale(const KernelSet& ks) {
  return std::max({1.0, ks.k.cwiseAbs().maxCoeff(), ks.l.cwiseAbs().maxCoeff()});
}

std::vector<PlantState> run_all_states(const PlantDiscretization& disc, const PlantState& s0, const Controller& c) {
  const Trace tr = simulate(disc, s0, c, RecordPlan{1});
  if (tr.diverged) fail(ErrorKind::Divergence, tr.divergence_message);
  return tr.states;
}

// Adds a refinement-ratio row: passes when both levels are at round-off or the ratio is in [lo, hi].
void add_ratio(VerifyReport& rep, const std::string& name, double coarse, double fine, double scale, double lo,
               double hi) {
  const double tiny = 1e-10 * std::max(1.0, scale);
  if (coarse <= tiny && fine <= tiny) {
    rep.add(name, 0.0, lo, true);
    return;
  }
  const double ratio = fine > 0 ? coarse / fine : INFINITY;
  rep.add(name, ratio, lo, ratio >= lo && ratio <= hi);
}

// Smooth fields vanishing to second order at both ends, with X = d = z = 0: compatible with
// the boundary relations to first order.
PlantState random_bump_state(const GeneralPlantSpec& spec, int Nx, unsigned long seed) {
  PlantState s = random_smooth_state(spec, Nx, seed);
  const Vec x = unit_grid(Nx);
  for (int i = 0; i < Nx; ++i) {
    const double b = 16.0 * x(i) * x(i) * (1 - x(i)) * (1 - x(i));
    s.xi(i) = b * (1.0 + 0.5 * std::sin(3.0 * x(i) + 0.1 * seed));
    s.eta(i) = b * std::cos(2.0 * x(i));
    s.u(i) = b * x(i);
  }
  s.X.setZero();
  s.d.setZero();
  s.z = 0.0;
  return s;
}

Grid refined(const Grid& g) {
  Grid f = g;
  f.Nx = 2 * (g.Nx - 1) + 1;
  f.dt = g.dt / 2;
  return f;
}

}  // namespace

VerifyReport verify_suite(const std::string& name, const VerifyContext& ctx) {
  VerifyReport rep;
  rep.suite = name;
  need(ctx.spec != nullptr, "plant specification");
  const GeneralPlantSpec& spec = *ctx.spec;
  if (name == "kernels") {
    need(ctx.kernels != nullptr, "control kernels");
    const double scale = kernel_scale(*ctx.kernels);
    for (const auto& [check, value] : kernel_residual(spec, *ctx.kernels).entries)
      rep.add_le(check, value, is_boundary_identity(check) ? 1e-6 : 1e-2 * scale);
    if (ctx.inverse) rep.add_le("inverse_resolvent", ctx.inverse->residual, 1e-3 * scale);
    if (ctx.observer_kernels) {
      const double oscale = std::max({1.0, ctx.observer_kernels->psi.cwiseAbs().maxCoeff(),
                                      ctx.observer_kernels->phi.cwiseAbs().maxCoeff()});
      for (const auto& [check, value] : observer_kernel_residual(spec, *ctx.observer_kernels).entries)
        rep.add_le("observer_" + check, value, is_boundary_identity(check) ? 1e-6 : 1e-2 * oscale);
    }
  } else if (name == "transforms") {
    need(ctx.kernels != nullptr, "control kernels");
    const int Nx = ctx.grid.Nx;
    const BacksteppingTransform T(*ctx.kernels, Nx);
    const PlantState zero = PlantState::zeros(Nx, spec.n(), spec.m());
    rep.add_le("zero_state_maps_to_zero", T.forward(zero).cwiseAbs().maxCoeff(), 0.0);
    double worst = 0.0;
    for (unsigned long seed = 1; seed <= 50; ++seed) {
      const PlantState s = random_smooth_state(spec, Nx, seed);
      const Vec beta = T.forward(s);
      const Vec back = T.inverse(beta, s.eta, s.u, s.X, s.d);
      worst = std::max(worst, (back - s.xi).cwiseAbs().maxCoeff() / std::max(1e-300, s.xi.cwiseAbs().maxCoeff()));
    }
    rep.add_le("round_trip_relative_sup", worst, 1e-6);
    if (ctx.inverse) {
      // Continuous inverse kernels: agreement limited by the quadrature order.
      const PlantState s = random_smooth_state(spec, Nx, 99);
      const Vec back = apply_inverse(T.forward(s), s.eta, s.u, s.X, s.d, *ctx.inverse);
      rep.add("inverse_kernel_round_trip_relative_sup",
              (back - s.xi).cwiseAbs().maxCoeff() / std::max(1e-300, s.xi.cwiseAbs().maxCoeff()), 0.0, true);
    }
  } else if (name == "target") {
    need(ctx.kernels != nullptr && ctx.gains != nullptr, "control kernels and gains");
    Grid g = ctx.grid;
    g.t_final = std::min(g.t_final, 0.5);
    double ri[2], rb[2];
    for (int level = 0; level < 2; ++level) {
      const Grid gl = level == 0 ? g : refined(g);
      const PlantDiscretization disc(spec, gl, HeatScheme::BackwardEuler);
      const ControlLaw law(*ctx.gains, gl.Nx);
      const PlantState s0 = random_smooth_state(spec, gl.Nx, 4242);
      const auto states = run_all_states(disc, s0, [&](const PlantState& s) { return law.U(s); });
      const TargetResidual tr =
          target_residual(states, gl.dt, BacksteppingTransform(*ctx.kernels, gl.Nx), spec.eps2, ctx.gains->c1_acute);
      ri[level] = tr.interior_rms;
      rb[level] = tr.boundary_rms;
    }
    rep.add("interior_residual_coarse", ri[0], 0.0, true);
    rep.add("interior_residual_fine", ri[1], 0.0, true);
    rep.add("boundary_residual_coarse", rb[0], 0.0, true);
    rep.add("boundary_residual_fine", rb[1], 0.0, true);
    add_ratio(rep, "interior_refinement_ratio", ri[0], ri[1], 1.0, 1.5, 3.0);
    add_ratio(rep, "boundary_refinement_ratio", rb[0], rb[1], 1.0, 1.5, 3.0);
  } else if (name == "observer-target") {
    need(ctx.observer_kernels != nullptr && ctx.observer_gains != nullptr, "observer kernels and gains");
    const ObserverTargetCoeffs cf = compute_observer_target_coeffs(spec, *ctx.observer_kernels);
    Grid g = ctx.grid;
    g.t_final = std::min(g.t_final, 0.5);
    double a0 = 0.0, rb[2], ra[2], ry[2];
    for (int level = 0; level < 2; ++level) {
      const Grid gl = level == 0 ? g : refined(g);
      const PlantDiscretization disc(spec, gl, HeatScheme::BackwardEuler);
      const Observer obs(disc, *ctx.observer_gains);
      // Zero plant: the observer state equals the estimation error.
      const PlantState zero = PlantState::zeros(gl.Nx, spec.n(), spec.m());
      PlantState e = random_smooth_state(spec, gl.Nx, 777);
      const Measurements m = disc.measure(zero);
      std::vector<PlantState> errs{e};
      for (int k = 0; k < gl.steps(); ++k) {
        e = obs.step(e, m, m, 0.0);
        if (!is_finite(e)) fail(ErrorKind::Divergence, "observer error diverged");
        errs.push_back(e);
      }
      const ErrorTargetResidual r = observer_target_residual(spec, errs, gl.dt, *ctx.observer_kernels, cf);
      a0 = std::max(a0, r.alpha0_max);
      rb[level] = r.beta_rms;
      ra[level] = r.alpha_rms;
      ry[level] = r.Y_rms;
    }
    // alpha~(0) is the first step's imposed zero; the initial error need not satisfy it.
    rep.add("beta_residual_coarse", rb[0], 0.0, true);
    rep.add("alpha_residual_coarse", ra[0], 0.0, true);
    rep.add("Y_residual_coarse", ry[0], 0.0, true);
    add_ratio(rep, "beta_refinement_ratio", rb[0], rb[1], 1.0, 1.5, 3.0);
    add_ratio(rep, "alpha_refinement_ratio", ra[0], ra[1], 1.0, 1.5, 3.0);
    add_ratio(rep, "Y_refinement_ratio", ry[0], ry[1], 1.0, 1.5, 3.0);
  } else if (name == "convergence") {
    Grid g = ctx.grid;
    g.t_final = std::min(g.t_final, 0.5);
    std::vector<PlantState> finals;
    for (int level = 0; level < 3; ++level) {
      const PlantDiscretization disc(spec, g, HeatScheme::BackwardEuler);
      const Trace tr = simulate(disc, random_bump_state(spec, g.Nx, 31337), nullptr, RecordPlan{g.steps()});
      if (tr.diverged) fail(ErrorKind::Divergence, tr.divergence_message);
      finals.push_back(tr.states.back());
      g = refined(g);
    }
    auto diff = [&](const PlantState& a, const PlantState& b) {
      // L1 distance; b lives on the grid refined once from a.  Corners left by the boundary
      // couplings limit the sup-norm rate, not the L1 rate.
      const int n = static_cast<int>(a.xi.size());
      Vec e(n);
      for (int i = 0; i < n; ++i) e(i) = std::abs(a.xi(i) - b.xi(2 * i)) + std::abs(a.eta(i) - b.eta(2 * i));
      return trapz(e, 1.0 / (n - 1));
    };
    const double e1 = diff(finals[0], finals[1]);
    const double e2 = diff(finals[1], finals[2]);
    rep.add("self_difference_coarse", e1, 0.0, true);
    rep.add("self_difference_fine", e2, 0.0, true);
    add_ratio(rep, "richardson_ratio", e1, e2, 1.0, 1.5, 3.0);
  } else {
    fail(ErrorKind::Config, "unknown verify suite '" + name + "'");
  }
  return rep;
}

}  // namespace bladectl
