#include "bladectl/observer.hpp"

#include <cmath>
#include <random>
#include <sstream>

namespace bladectl {

std::vector<std::complex<double>> default_observer_poles(int dim) {
  std::vector<std::complex<double>> p;
  for (int k = 0; k < dim; ++k) p.emplace_back(-2.0 - k, 0.0);
  return p;
}

namespace {

// Dual placement: L such that eig(A - L C) = poles.
Vec dual_place(const Mat& A, const Mat& C, const std::vector<std::complex<double>>& poles, const char* what) {
  if (!is_observable(A, C)) fail(ErrorKind::Synthesis, std::string("pair ") + what + " is not observable");
  const RowVec K = place_poles(A.transpose(), C.transpose(), poles);
  const Vec L = -K.transpose();
  if (!is_hurwitz(A - L * C)) fail(ErrorKind::Synthesis, std::string("observer matrix for ") + what + " is not Hurwitz");
  return L;
}

}  // namespace

ObserverGainSet synthesize_observer_gains(const GeneralPlantSpec& spec, const ObserverKernelSet& os,
                                          const std::vector<std::complex<double>>& poles_x,
                                          const std::vector<std::complex<double>>& poles_d) {
  if (!(os.L_z > spec.c0))
    fail(ErrorKind::Synthesis, "L_z must exceed c0 (L_z = " + std::to_string(os.L_z) + ")");
  ObserverGainSet g;
  g.x = os.x;
  g.L_z = os.L_z;
  g.L_x = dual_place(spec.A, spec.C, poles_x, "(A, C)");
  g.L_d = dual_place(spec.Ad, spec.q, poles_d, "(Ad, q)");
  g.Gamma_z = os.M(0) / spec.eps2;
  const Eigen::Index Nk = os.x.size();
  g.Gamma_eta.resize(Nk);
  g.Gamma_xi.resize(Nk);
  for (Eigen::Index i = 0; i < Nk; ++i) {
    g.Gamma_eta(i) = spec.eps1 / spec.eps2 * os.phi(i, 0) + spec.ev(spec.g1, os.x(i));
    g.Gamma_xi(i) = os.psi(i, 0) + spec.ev(spec.g2, os.x(i));
  }
  return g;
}

Observer::Observer(const PlantDiscretization& disc, const ObserverGainSet& g) : disc_(disc), g_(g) {
  const int Nx = disc.grid().Nx;
  const Vec& x = disc.x();
  Geta_.resize(Nx);
  Gxi_.resize(Nx);
  for (int i = 0; i < Nx; ++i) {
    Geta_(i) = interp_cubic_uniform(g.Gamma_eta, x(i));
    Gxi_(i) = interp_cubic_uniform(g.Gamma_xi, x(i));
  }
}

ObserverState Observer::step(const ObserverState& s, const Measurements& now, const Measurements& next,
                             double U) const {
  const GeneralPlantSpec& spec = disc_.spec();
  const int N = disc_.grid().Nx - 1;
  const double dt = disc_.grid().dt;
  const double e0 = s.xi(0) - now.xi0;
  Vec Sxi, Seta;
  disc_.sources(s, Sxi, Seta);
  Sxi -= Gxi_ * e0;
  Seta -= Geta_ * e0;
  ObserverState n;
  n.t = s.t + dt;
  disc_.transport(s, Sxi, Seta, n.xi, n.eta);
  const double eu = s.u(0) - now.u0;
  const double ey = (spec.C * s.X)(0) - now.CX;
  n.d = disc_.eAd() * s.d + disc_.pAd() * (-g_.L_d * eu);
  n.X = disc_.eA() * s.X + disc_.pA() * (spec.B * now.xi0 - g_.L_x * ey);
  n.z = s.z + dt * (spec.c0 * s.z + spec.c1s * s.xi(N) - g_.Gamma_z * e0 + U);
  const double u0 = (spec.q * n.d)(0) + (spec.p2 * n.X)(0);
  n.u = disc_.heat(s.u, u0);
  n.xi(N) = -spec.q1 * n.eta(N) + spec.q0 * n.z;
  n.eta(0) = next.xi0 + next.CX;
  return n;
}

PlantState state_difference(const ObserverState& obs, const PlantState& plant) {
  PlantState e;
  e.t = plant.t;
  e.z = obs.z - plant.z;
  e.xi = obs.xi - plant.xi;
  e.eta = obs.eta - plant.eta;
  e.u = obs.u - plant.u;
  e.X = obs.X - plant.X;
  e.d = obs.d - plant.d;
  return e;
}

double error_norm_Omega_e(const PlantState& plant, const ObserverState& obs, double dx) {
  if (plant.xi.size() != obs.xi.size() || plant.X.size() != obs.X.size() || plant.d.size() != obs.d.size())
    fail(ErrorKind::Validation, "observer and plant states live on different grids");
  const PlantState e = state_difference(obs, plant);
  return e.z * e.z + h1_norm_sq(e.eta, dx) + h1_norm_sq(e.xi, dx) + e.X.squaredNorm() + h1_norm_sq(e.u, dx) +
         e.d.squaredNorm();
}

namespace {

// S(x,y) = f(x,y) - int_y^x S(z,y) psi(x,z) dz - c(y) psi(x,y), forward substitution in x per column.
Mat volterra_psi(const Mat& f, const Mat& psi, const Vec& c, double h) {
  const Eigen::Index Nk = f.rows();
  Mat S = Mat::Zero(Nk, Nk);
  for (Eigen::Index j = 0; j < Nk; ++j) {
    S(j, j) = f(j, j) - c(j) * psi(j, j);
    for (Eigen::Index i = j + 1; i < Nk; ++i) {
      double acc = 0.5 * h * S(j, j) * psi(i, j);
      for (Eigen::Index m = j + 1; m < i; ++m) acc += h * S(m, j) * psi(i, m);
      S(i, j) = (f(i, j) - c(j) * psi(i, j) - acc) / (1.0 + 0.5 * h * psi(i, i));
    }
  }
  return S;
}

// S(x,y) = f(x,y) - r int_y^x T(z,y) phi(x,z) dz - r c(y) phi(x,y) with T known.
Mat volterra_phi(const Mat& f, const Mat& T, const Mat& phi, const Vec& c, double r, double h) {
  const Eigen::Index Nk = f.rows();
  Mat S = Mat::Zero(Nk, Nk);
  for (Eigen::Index i = 0; i < Nk; ++i)
    for (Eigen::Index j = 0; j <= i; ++j) {
      double acc = 0.0;
      for (Eigen::Index m = j; m <= i && i > j; ++m) acc += ((m == j || m == i) ? 0.5 * h : h) * T(m, j) * phi(i, m);
      S(i, j) = f(i, j) - r * acc - r * c(j) * phi(i, j);
    }
  return S;
}

// N(x) = D(x) - int_0^x psi(x,y) N(y) dy (columnwise), forward substitution.
Mat volterra_self(const Mat& D, const Mat& psi, double h) {
  const Eigen::Index Nk = D.rows();
  Mat Nm = Mat::Zero(Nk, D.cols());
  for (Eigen::Index i = 0; i < Nk; ++i) {
    RowVec acc = RowVec::Zero(D.cols());
    for (Eigen::Index m = 0; m < i; ++m) acc += ((m == 0) ? 0.5 * h : h) * psi(i, m) * Nm.row(m);
    const double diag = i > 0 ? 0.5 * h * psi(i, i) : 0.0;
    Nm.row(i) = (D.row(i) - acc) / (1.0 + diag);
  }
  return Nm;
}

// N(x) = D(x) - r int_0^x phi(x,y) T(y) dy with T known.
Mat volterra_known(const Mat& D, const Mat& phi, const Mat& T, double r, double h) {
  const Eigen::Index Nk = D.rows();
  Mat Nm = D;
  for (Eigen::Index i = 1; i < Nk; ++i) {
    RowVec acc = RowVec::Zero(D.cols());
    for (Eigen::Index m = 0; m <= i; ++m) acc += ((m == 0 || m == i) ? 0.5 * h : h) * phi(i, m) * T.row(m);
    Nm.row(i) -= r * acc;
  }
  return Nm;
}

}  // namespace

ObserverTargetCoeffs compute_observer_target_coeffs(const GeneralPlantSpec& spec, const ObserverKernelSet& os) {
  const Eigen::Index Nk = os.x.size();
  const double h = 1.0 / (Nk - 1);
  const Vec& x = os.x;
  const double r = spec.eps1 / spec.eps2;
  ObserverTargetCoeffs T;
  T.x = x;
  Mat f11(Nk, Nk), f13(Nk, Nk), f21(Nk, Nk), f23(Nk, Nk);
  Vec c2(Nk), mu2(Nk);
  Mat D1(Nk, spec.n()), D2(Nk, spec.n()), G1(Nk, spec.m()), G2(Nk, spec.m());
  for (Eigen::Index i = 0; i < Nk; ++i) {
    for (Eigen::Index j = 0; j < Nk; ++j) {
      f11(i, j) = spec.ev(spec.f11, x(i), x(j));
      f13(i, j) = spec.ev(spec.f13, x(i), x(j));
      f21(i, j) = spec.ev(spec.f21, x(i), x(j));
      f23(i, j) = spec.ev(spec.f23, x(i), x(j));
    }
    c2(i) = spec.ev(spec.c2, x(i));
    mu2(i) = spec.ev(spec.mu2, x(i));
    D1.row(i) = spec.evD(spec.D1, x(i));
    D2.row(i) = spec.evD(spec.D2, x(i));
    G1.row(i) = spec.evG(spec.G1, x(i));
    G2.row(i) = spec.evG(spec.G2, x(i));
  }
  T.S21 = volterra_psi(f21, os.psi, c2, h);
  T.S23 = volterra_psi(f23, os.psi, mu2, h);
  T.S11 = volterra_phi(f11, T.S21, os.phi, c2, r, h);
  T.S13 = volterra_phi(f13, T.S23, os.phi, mu2, r, h);
  T.N2 = volterra_self(D2, os.psi, h);
  T.N4 = volterra_self(G2, os.psi, h);
  T.N1 = volterra_known(D1, os.phi, T.N2, r, h);
  T.N3 = volterra_known(G1, os.phi, T.N4, r, h);
  T.G1.resize(Nk);
  T.G3.resize(Nk);
  for (Eigen::Index j = 0; j < Nk; ++j) {
    double a1 = 0.0, a3 = 0.0;
    for (Eigen::Index m = j; m < Nk && j + 1 < Nk; ++m) {
      const double w = (m == j || m == Nk - 1) ? 0.5 * h : h;
      a1 += w * T.S21(m, j) * os.M(m);
      a3 += w * T.S23(m, j) * os.M(m);
    }
    T.G1(j) = -(os.M(j) * c2(j) + a1) / spec.eps2;
    T.G3(j) = -(os.M(j) * mu2(j) + a3) / spec.eps2;
  }
  const Vec w = trapz_weights(static_cast<int>(Nk), h);
  T.intMN2 = (w.cwiseProduct(os.M)).transpose() * T.N2 / spec.eps2;
  T.intMN4 = (w.cwiseProduct(os.M)).transpose() * T.N4 / spec.eps2;
  return T;
}

OutputFeedbackTrace simulate_output_feedback(const PlantDiscretization& disc, const Observer& obs_model,
                                             const ControlLaw& law, const PlantState& plant0,
                                             const ObserverState& obs0, const OutputFeedbackOptions& opt) {
  OutputFeedbackTrace tr;
  std::mt19937_64 rng(opt.noise_seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  auto measure = [&](const PlantState& s) {
    Measurements m = disc.measure(s);
    if (opt.noise_amplitude > 0) {
      m.xi0 += opt.noise_amplitude * uni(rng);
      m.u0 += opt.noise_amplitude * uni(rng);
      m.CX += opt.noise_amplitude * uni(rng);
    }
    return m;
  };
  const int steps = disc.grid().steps();
  const double dx = disc.grid().dx();
  const int stride = opt.plan.state_stride;
  auto record = [&](Trace& t, const PlantState& st, double U, int k) {
    t.t.push_back(st.t);
    t.z.push_back(st.z);
    t.U.push_back(U);
    t.X.push_back(st.X);
    t.d.push_back(st.d);
    if (stride > 0 && (k % stride == 0 || k == steps)) t.states.push_back(st);
  };
  PlantState s = plant0;
  ObserverState o = obs0;
  Measurements m = measure(s);
  for (int k = 0; k <= steps; ++k) {
    const double U = law.U_of(o, m.xi0);
    record(tr.plant, s, U, k);
    record(tr.observer, o, U, k);
    tr.Omega_e.push_back(error_norm_Omega_e(s, o, dx));
    tr.U_full.push_back(law.U(s));
    if (k == steps) break;
    const PlantState sn = disc.step(s, U);
    const Measurements mn = measure(sn);
    o = obs_model.step(o, m, mn, U);
    s = sn;
    m = mn;
    if (!is_finite(s) || !is_finite(o)) {
      std::ostringstream os;
      os << "non-finite state at t=" << s.t;
      tr.plant.diverged = tr.observer.diverged = true;
      tr.plant.divergence_message = tr.observer.divergence_message = os.str();
      break;
    }
  }
  return tr;
}

}  // namespace bladectl
