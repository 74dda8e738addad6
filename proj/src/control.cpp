#include "bladectl/control.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>

namespace bladectl {

namespace {

inline double tw(int m, int j, int i, double h) {
  if (i == j) return 0.0;
  return (m == j || m == i) ? 0.5 * h : h;
}

}  // namespace

RowVec place_poles(const Mat& A, const Mat& B, const std::vector<std::complex<double>>& desired) {
  const int n = static_cast<int>(A.rows());
  if (A.cols() != n || B.rows() != n || B.cols() != 1)
    fail(ErrorKind::Config, "pole placement needs square A and a single-input B");
  if (static_cast<int>(desired.size()) != n)
    fail(ErrorKind::Config, "pole placement needs exactly " + std::to_string(n) + " poles");
  if (!is_controllable(A, B)) fail(ErrorKind::Synthesis, "pair (A, B) is not controllable");
  // Characteristic polynomial of the desired spectrum.
  std::vector<std::complex<double>> c{1.0};
  double scale = 1.0;
  for (const auto& p : desired) {
    std::vector<std::complex<double>> nc(c.size() + 1, 0.0);
    for (size_t k = 0; k < c.size(); ++k) {
      nc[k] += c[k];
      nc[k + 1] -= p * c[k];
    }
    c = nc;
    scale = std::max(scale, std::abs(p));
  }
  for (const auto& ck : c)
    if (std::abs(ck.imag()) > 1e-9 * std::pow(scale, n))
      fail(ErrorKind::Config, "desired poles are not closed under complex conjugation");
  Mat Ctrb(n, n);
  Mat Ak = Mat::Identity(n, n);
  for (int k = 0; k < n; ++k) {
    Ctrb.col(k) = Ak * B;
    Ak = Ak * A;
  }
  // Delta(A) = A^n + c1 A^{n-1} + ... + cn I.
  Mat Delta = Mat::Zero(n, n);
  Mat P = Mat::Identity(n, n);
  for (int k = n; k >= 0; --k) {
    Delta += c[k].real() * P;
    P = P * A;
  }
  RowVec en = RowVec::Zero(n);
  en(n - 1) = 1.0;
  const RowVec Kack = en * Ctrb.inverse() * Delta;
  return -Kack;
}

TargetCoeffs compute_target_coeffs(const GeneralPlantSpec& s, const KernelSet& ks, const InverseKernelSet& iv) {
  TargetCoeffs t;
  const int Nk = static_cast<int>(ks.x.size());
  const double h = ks.h();
  const Vec& x = ks.x;
  t.x = x;
  t.F11 = Mat::Zero(Nk, Nk);
  t.F12 = Mat::Zero(Nk, Nk);
  t.F13 = Mat::Zero(Nk, Nk);
  t.D1 = Mat::Zero(Nk, s.n());
  t.D2 = Mat::Zero(Nk, s.m());
  Mat f12(Nk, Nk);
  for (int i = 0; i < Nk; ++i)
    for (int j = 0; j < Nk; ++j) f12(i, j) = s.ev(s.f12, x(i), x(j));
  for (int i = 0; i < Nk; ++i) {
    const double c1 = s.ev(s.c1, x(i));
    for (int j = 0; j <= i; ++j) {
      double a = 0, b = 0;
      for (int m = j; m <= i; ++m) {
        const double w = tw(m, j, i, h);
        a += w * f12(i, m) * iv.sigma(m, j);
        b += w * f12(i, m) * iv.rho(m, j);
      }
      t.F11(i, j) = s.ev(s.f11, x(i), x(j)) + a + c1 * iv.sigma(i, j);
      t.F12(i, j) = f12(i, j) + b + c1 * iv.rho(i, j);
    }
    for (int j = 0; j < Nk; ++j) {
      const double step = j < i ? 1.0 : (j == i ? 0.5 : 0.0);
      double a = 0;
      for (int m = 0; m <= i; ++m) a += tw(m, 0, i, h) * f12(i, m) * iv.varrho(m, j);
      t.F13(i, j) = step * s.ev(s.f13, x(i), x(j)) + a + c1 * iv.varrho(i, j);
    }
    RowVec d1 = s.evD(s.D1, x(i)) + s.ev(s.g1, x(i)) * ks.K - c1 * iv.lambda.row(i);
    RowVec d2 = s.evG(s.G1, x(i)) - c1 * iv.vartheta.row(i);
    for (int m = 0; m <= i; ++m) {
      const double w = tw(m, 0, i, h);
      d1 -= w * f12(i, m) * iv.lambda.row(m);
      d2 -= w * f12(i, m) * iv.vartheta.row(m);
    }
    t.D1.row(i) = d1;
    t.D2.row(i) = d2;
  }
  return t;
}

void compute_h_gains(const GeneralPlantSpec& s, const KernelSet& ks, const InverseKernelSet& iv, GainSet& g) {
  const int Nk = static_cast<int>(ks.x.size());
  const int N = Nk - 1;
  const double h = ks.h();
  const Vec& x = ks.x;
  if (iv.rho_y1.size() != Nk) fail(ErrorKind::Synthesis, "missing trace derivative rho_y(1,.)");
  if (iv.sigma_y1.size() != Nk) fail(ErrorKind::Synthesis, "missing trace derivative sigma_y(1,.)");
  if (iv.varrho_y1.size() != Nk) fail(ErrorKind::Synthesis, "missing trace derivative varrho_y(1,.)");
  const TargetCoeffs& t = g.target;
  const double e1 = s.eps1, e2 = s.eps2;
  const double a = s.c0 + s.q0 * s.c1s;
  const Vec wt = trapz_weights(Nk, h);
  const Vec sig1 = iv.sigma.row(N).transpose();
  const RowVec lam1 = iv.lambda.row(N);
  const RowVec th1 = iv.vartheta.row(N);
  const Mat Acl = s.A + s.B * ks.K;

  g.h1 = a - iv.rho(N, N) / e2;
  double sg1 = 0;
  for (int j = 0; j < Nk; ++j) sg1 += wt(j) * sig1(j) * s.ev(s.g1, x(j));
  g.h2 = iv.rho(N, 0) / e2 + (lam1 * s.B)(0, 0) - sg1 / e1;
  g.h3 = sig1(N) / e1 + s.q1 * s.c0;
  g.h4 = -sig1(0) / e1;
  RowVec sD1 = RowVec::Zero(s.n()), sD2 = RowVec::Zero(s.m());
  for (int j = 0; j < Nk; ++j) {
    sD1 += wt(j) * sig1(j) * t.D1.row(j);
    sD2 += wt(j) * sig1(j) * t.D2.row(j);
  }
  g.h5 = lam1 * Acl - sD1 / e1 - a * lam1;
  g.h6 = -sD2 / e1 - a * th1 + th1 * s.Ad;

  g.H7 = Vec(Nk);
  g.H8 = Vec(Nk);
  g.H9 = Vec(Nk);
  g.H10 = Vec(Nk);
  for (int j = 0; j < Nk; ++j) {
    double i12 = 0, i11 = 0, i13 = 0;
    for (int m = 0; m < Nk; ++m) {
      i13 += wt(m) * t.F13(m, j) * sig1(m);
      if (m >= j) {
        const double w = tw(m, j, N, h);
        i12 += w * t.F12(m, j) * sig1(m);
        i11 += w * t.F11(m, j) * sig1(m);
      }
    }
    g.H7(j) = a * iv.rho(N, j) + iv.rho_y1(j) / e2 - s.ev(s.c1, x(j)) * sig1(j) / e1 - i12 / e1;
    g.H8(j) = -iv.sigma_y1(j) / e1 - i11 / e1 + a * sig1(j);
    g.H9(j) = -i13 / e1 - sig1(j) * s.ev(s.mu1, x(j)) / e1 + a * iv.varrho(N, j);
    g.H10(j) = s.kappa0 * iv.varrho_y1(j);
  }
}

void compute_n_gains(const GeneralPlantSpec& s, const KernelSet& ks, GainSet& g) {
  if (s.q0 == 0.0) fail(ErrorKind::Synthesis, "q0 = 0: the input does not reach the boundary");
  const int Nk = static_cast<int>(ks.x.size());
  const int N = Nk - 1;
  const double h = ks.h();
  const Vec& x = ks.x;
  const Vec wt = trapz_weights(Nk, h);
  const double e1 = s.eps1, q0 = s.q0, q1 = s.q1;
  const double cc = g.c1_acute + g.h1;

  g.n1 = (-cc + q1 * s.ev(s.c1, 1.0) / e1) / q0;
  g.n2 = -g.h3 / q0;
  RowVec iH7g = RowVec::Zero(s.n()), iH7U = RowVec::Zero(s.m());
  for (int j = 0; j < Nk; ++j) {
    iH7g += wt(j) * g.H7(j) * ks.gamma.row(j);
    iH7U += wt(j) * g.H7(j) * ks.Upsilon.row(j);
  }
  g.n3 = (-cc * ks.gamma.row(N) + q1 * s.evD(s.D1, 1.0) / e1 - g.h2 * ks.gamma.row(0) - g.h4 * s.C.row(0) - g.h5 -
          iH7g) /
         q0;
  g.n4 = (-cc * ks.Upsilon.row(N) + q1 * s.evG(s.G1, 1.0) / e1 - g.h6 - iH7U - g.h2 * ks.Upsilon.row(0)) / q0;
  g.n5 = (q1 * s.ev(s.g1, 1.0) / e1 - g.h2 - g.h4) / q0;
  g.n6 = -q1 / (e1 * q0);
  g.N7 = Vec(Nk);
  g.N8 = Vec(Nk);
  g.N9 = Vec(Nk);
  g.N10 = Vec(Nk);
  for (int j = 0; j < Nk; ++j) {
    double ik = 0, il = 0, ip = 0;
    for (int m = 0; m < Nk; ++m) {
      ip += wt(m) * ks.p(m, j) * g.H7(m);
      if (m >= j) {
        const double w = tw(m, j, N, h);
        ik += w * ks.k(m, j) * g.H7(m);
        il += w * ks.l(m, j) * g.H7(m);
      }
    }
    g.N7(j) = (cc * ks.k(N, j) + q1 * s.ev(s.f12, 1.0, x(j)) / e1 - g.H7(j) + ik) / q0;
    g.N8(j) = (cc * ks.l(N, j) + q1 * s.ev(s.f11, 1.0, x(j)) / e1 - g.H8(j) + il) / q0;
    g.N9(j) = (cc * ks.p(N, j) + q1 * s.ev(s.f13, 1.0, x(j)) / e1 + ip - g.H9(j)) / q0;
    g.N10(j) = -g.H10(j) / q0;
  }
}

GainSet synthesize_gains(const GeneralPlantSpec& spec, const KernelSet& ks, const InverseKernelSet& iv,
                         double c1_acute) {
  if (!(c1_acute > 0)) fail(ErrorKind::Config, "c1_acute must be positive");
  if (!is_hurwitz(spec.A + spec.B * ks.K)) fail(ErrorKind::Synthesis, "A + B K is not Hurwitz");
  GainSet g;
  g.x = ks.x;
  g.K = ks.K;
  g.c1_acute = c1_acute;
  g.target = compute_target_coeffs(spec, ks, iv);
  compute_h_gains(spec, ks, iv, g);
  compute_n_gains(spec, ks, g);
  return g;
}

double right_derivative(const Vec& f, double h) {
  const int N = static_cast<int>(f.size()) - 1;
  return (3.0 * f(N) - 4.0 * f(N - 1) + f(N - 2)) / (2.0 * h);
}

ControlLaw::ControlLaw(const GainSet& g, int Nx) : g_(g), Nx_(Nx), dx_(1.0 / (Nx - 1)) {
  const Vec xp = unit_grid(Nx);
  const Vec w = trapz_weights(Nx, dx_);
  auto sample = [&](const Vec& f) {
    Vec r(Nx);
    for (int i = 0; i < Nx; ++i) r(i) = w(i) * interp_cubic_uniform(f, xp(i));
    return r;
  };
  w7_ = sample(g.N7);
  w8_ = sample(g.N8);
  w9_ = sample(g.N9);
  w10_ = sample(g.N10);
}

std::vector<std::pair<std::string, double>> ControlLaw::terms(const PlantState& s) const {
  const int N = Nx_ - 1;
  const Vec uy = gradient(s.u, dx_);
  return {{"n1*xi(1)", g_.n1 * s.xi(N)},
          {"n2*eta(1)", g_.n2 * s.eta(N)},
          {"n3*X", g_.n3.dot(s.X)},
          {"n4*d", g_.n4.dot(s.d)},
          {"n5*xi(0)", g_.n5 * s.xi(0)},
          {"n6*eta_x(1)", g_.n6 * right_derivative(s.eta, dx_)},
          {"int N7 xi", w7_.dot(s.xi)},
          {"int N8 eta", w8_.dot(s.eta)},
          {"int N9 u", w9_.dot(s.u)},
          {"int N10 u_y", w10_.dot(uy)}};
}

double ControlLaw::U(const PlantState& s) const {
  double u = 0.0;
  for (const auto& [n, v] : terms(s)) u += v;
  return u;
}

double ControlLaw::U_of(const PlantState& obs, double xi0_measured) const {
  // Hatted states everywhere except the n5 channel, which reads the measured xi(0,t).
  return U(obs) + g_.n5 * (xi0_measured - obs.xi(0));
}

Mat solve_lyapunov(const Mat& M, const Mat& Q) {
  const int n = static_cast<int>(M.rows());
  const Mat I = Mat::Identity(n, n);
  Mat Kr = Mat::Zero(n * n, n * n);
  // vec(P M) = (M^T kron I) vec(P), vec(M^T P) = (I kron M^T) vec(P)
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      Kr.block(i * n, j * n, n, n) += M(j, i) * I;
      Kr.block(i * n, j * n, n, n) += (i == j ? 1.0 : 0.0) * M.transpose();
    }
  Eigen::Map<const Vec> q(Q.data(), n * n);
  const Vec p = Kr.fullPivLu().solve(-q);
  Mat P = Eigen::Map<const Mat>(p.data(), n, n);
  return 0.5 * (P + P.transpose());
}

C1Certificate check_c1(const GeneralPlantSpec& spec, const RowVec& K, double c1_acute) {
  C1Certificate c;
  const Mat Acl = spec.A + spec.B * K;
  if (!is_hurwitz(Acl)) fail(ErrorKind::Synthesis, "A + B K is not Hurwitz; Lyapunov certificate impossible");
  const int n = spec.n();
  c.Q1 = Mat::Identity(n, n);
  c.P1 = solve_lyapunov(Acl, c.Q1);
  c.lambda_min = Eigen::SelfAdjointEigenSolver<Mat>(c.Q1).eigenvalues().minCoeff();
  const double pb = (c.P1 * spec.B).norm();
  c.h = 4.0 * pb * pb / c.lambda_min + c.lambda_min;
  c.bound = c.h * std::exp(1.0) / 2.0 + c.lambda_min / 2.0;
  if (!(c1_acute > 0)) {
    c.pass = false;
    c.message = "c1_acute must be positive";
  } else {
    c.pass = c1_acute > c.bound;
    c.message = c.pass ? "sufficient condition satisfied" : "sufficient condition not satisfied (advisory)";
  }
  return c;
}

std::vector<std::string> export_gains_csv(const GainSet& g, const std::string& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream f(dir + "/gains_scalar.csv");
    if (!f) fail(ErrorKind::Config, "cannot write gains to " + dir);
    f << "name,value\n" << std::setprecision(15);
    auto row = [&](const std::string& n, const RowVec& v) {
      if (v.size() == 1) {
        f << n << ',' << v(0) << '\n';
      } else {
        for (int i = 0; i < v.size(); ++i) f << n << '_' << i << ',' << v(i) << '\n';
      }
    };
    auto sc = [&](const std::string& n, double v) { f << n << ',' << v << '\n'; };
    row("K", g.K);
    sc("c1_acute", g.c1_acute);
    sc("h1", g.h1);
    sc("h2", g.h2);
    sc("h3", g.h3);
    sc("h4", g.h4);
    row("h5", g.h5);
    row("h6", g.h6);
    sc("n1", g.n1);
    sc("n2", g.n2);
    row("n3", g.n3);
    row("n4", g.n4);
    sc("n5", g.n5);
    sc("n6", g.n6);
  }
  {
    std::ofstream f(dir + "/gains_functions.csv");
    f << "y,H7,H8,H9,H10,N7,N8,N9,N10\n" << std::setprecision(15);
    for (int i = 0; i < g.x.size(); ++i)
      f << g.x(i) << ',' << g.H7(i) << ',' << g.H8(i) << ',' << g.H9(i) << ',' << g.H10(i) << ',' << g.N7(i) << ','
        << g.N8(i) << ',' << g.N9(i) << ',' << g.N10(i) << '\n';
  }
  return {"gains_scalar.csv", "gains_functions.csv"};
}

}  // namespace bladectl
