#include "bladectl/kernels.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>

namespace bladectl {

namespace {

bool has_p_coupling(const GeneralPlantSpec& s) {
  return (s.mu1 || s.mu2 || s.f13 || s.f23) && s.p2.cwiseAbs().maxCoeff() > 0.0;
}

double rel_change(const Mat& a, const Mat& b) {
  if (a.size() == 0) return 0.0;
  return (a - b).cwiseAbs().maxCoeff() / (1.0 + a.cwiseAbs().maxCoeff());
}

Mat extra_from_py0(const GeneralPlantSpec& s, const Vec& py0) {
  return -s.eps2 * s.kappa0 * py0 * s.p2.row(0);
}

// Trapezoid weight on row i of a lower-triangular Volterra integral over [x_j, x_i].
inline double tw(int m, int j, int i, double h) {
  if (i == j) return 0.0;
  return (m == j || m == i) ? 0.5 * h : h;
}

}  // namespace

GoursatProblem control_goursat_problem(const GeneralPlantSpec& s, const RowVec& K, bool gamma_duplicate) {
  const double th = s.theta();
  GoursatProblem P;
  P.theta = th;
  if (s.f22) {
    auto f22 = s.f22;
    P.aK = [f22](double x, double y) { return -f22(x, y); };
    P.FKK = f22;
  }
  if (s.f21) {
    auto f21 = s.f21;
    P.aL = [f21](double x, double y) { return -f21(x, y); };
    P.FLK = f21;
  }
  if (s.f12) {
    auto f12 = s.f12;
    P.FKL = [f12, th](double z, double y) { return th * f12(z, y); };
  }
  if (s.f11) {
    auto f11 = s.f11;
    P.FLL = [f11, th](double z, double y) { return th * f11(z, y); };
  }
  if (s.c1) {
    auto c1 = s.c1;
    P.bKL = [c1, th](double y) { return th * c1(y); };
  }
  P.bLK = s.c2;
  if (s.c2) {
    auto c2 = s.c2;
    const double e1 = s.eps1, e2 = s.eps2;
    P.Ldiag = [c2, e1, e2](double x) { return -e1 * c2(x) / (e1 + e2); };
  }
  P.betaL = th;
  P.bw = (-s.eps2 * s.B).transpose();
  P.gK = s.g2;
  if (s.g1) {
    auto g1 = s.g1;
    P.gL = [g1, th](double y) { return th * g1(y); };
  }
  if (s.g2) {
    auto g2 = s.g2;
    P.e = [g2](double x) { return -g2(x); };
  }
  P.Aw = s.eps2 * s.A;
  const double dup = gamma_duplicate ? 2.0 : 1.0;
  if (s.D2) {
    auto D2 = s.D2;
    P.DK = [D2](double y) { return RowVec(-D2(y)); };
    P.r = [D2, dup](double x) { return RowVec(dup * D2(x)); };
  }
  if (s.D1) {
    auto D1 = s.D1;
    P.DL = [D1, th, dup](double y) { return RowVec(-dup * th * D1(y)); };
  }
  P.cL = -dup * th * s.C.row(0);
  P.cK = RowVec::Zero(s.n());
  P.w0 = -K;
  return P;
}

Mat integrate_upsilon(const GeneralPlantSpec& s, const KernelSet& ks, bool short_form) {
  const int Nk = static_cast<int>(ks.x.size());
  const int m = s.m();
  const double h = ks.h();
  const double th = s.theta();
  Mat U = Mat::Zero(Nk, m);
  const bool has_G = s.G1 || s.G2;
  const bool has_p = ks.py0.size() == Nk && ks.py0.cwiseAbs().maxCoeff() > 0.0;
  if (!has_G && !has_p) return U;
  // Forcing samples f(x) = -eps2 kappa0 p_y(x,0) q + G2 - int k G2 - theta int l G1.
  Mat f(Nk, m);
  std::vector<double> gt, gw;
  gauss_legendre(20, gt, gw);
  for (int i = 0; i < Nk; ++i) {
    const double x = ks.x(i);
    RowVec fi = s.evG(s.G2, x);
    if (has_p) fi -= s.eps2 * s.kappa0 * ks.py0(i) * s.q.row(0);
    if (!short_form && i > 0) {
      if (ks.series) {
        for (size_t g = 0; g < gt.size(); ++g) {
          const double y = 0.5 * x * (gt[g] + 1.0), w = 0.5 * x * gw[g];
          fi -= w * (ks.series->K(x, y) * s.evG(s.G2, y) + th * ks.series->L(x, y) * s.evG(s.G1, y));
        }
      } else {
        for (int j = 0; j <= i; ++j) {
          const double w = tw(j, 0, i, h);
          fi -= w * (ks.k(i, j) * s.evG(s.G2, ks.x(j)) + th * ks.l(i, j) * s.evG(s.G1, ks.x(j)));
        }
      }
    }
    f.row(i) = fi;
  }
  auto F = [&](double x) {
    RowVec r(m);
    for (int k = 0; k < m; ++k) r(k) = interp_cubic_uniform(f.col(k), x);
    return r;
  };
  const Mat A = s.eps2 * s.Ad;
  for (int i = 0; i + 1 < Nk; ++i) {
    const double x = ks.x(i);
    const RowVec y = U.row(i);
    const RowVec k1 = y * A + F(x);
    const RowVec k2 = (y + 0.5 * h * k1) * A + F(x + 0.5 * h);
    const RowVec k3 = (y + 0.5 * h * k2) * A + F(x + 0.5 * h);
    const RowVec k4 = (y + h * k3) * A + F(x + h);
    U.row(i + 1) = y + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
  }
  return U;
}

namespace {

void finish_kernel_set(const GeneralPlantSpec& spec, KernelSet& ks, const GoursatSolution& S, const PSolution& ps,
                       const KernelOptions& opt) {
  ks.x = S.x;
  ks.k = S.K;
  ks.l = S.L;
  ks.gamma = S.w;
  ks.series = S.series;
  ks.p = ps.p;
  ks.p_y = ps.p_y;
  ks.py0 = ps.py0;
  if (ps.truncation_warning)
    ks.warnings.push_back("parabolic kernel: last five sine modes exceed 1e-6 of sup|p| (tail " +
                          std::to_string(ps.tail) + ")");
  ks.Upsilon = integrate_upsilon(spec, ks, opt.upsilon_short_form);
}

}  // namespace

KernelSet solve_control_kernels_series(const GeneralPlantSpec& spec, const RowVec& K, int N, KernelOptions opt) {
  if (K.size() != spec.n()) fail(ErrorKind::Config, "gain K has wrong dimension");
  KernelSet ks;
  ks.K = K;
  ks.method = "series";
  GoursatProblem P = control_goursat_problem(spec, K, opt.gamma_duplicate);
  SeriesGoursatSolver solver(P, N);
  const bool coupled = has_p_coupling(spec);
  Mat extra = Mat::Zero(opt.Nk, spec.n());
  GoursatSolution S;
  PSolution ps;
  bool converged = false;
  for (int sweep = 1; sweep <= opt.max_sweeps; ++sweep) {
    S = solver.solve(extra, opt.Nk);
    ps = solve_p(spec, parabolic_forcing(spec, S.K, S.L), opt.N_fourier);
    ks.sweeps = sweep;
    if (!coupled) {
      converged = true;
      break;
    }
    const Mat next = extra_from_py0(spec, ps.py0);
    ks.fixed_point_change = rel_change(next, extra);
    extra = next;
    if (!std::isfinite(ks.fixed_point_change)) fail(ErrorKind::Synthesis, "parabolic coupling sweep diverged");
    if (ks.fixed_point_change <= opt.tol) {
      converged = true;
      break;
    }
  }
  if (!converged)
    fail(ErrorKind::Synthesis, "parabolic coupling fixed point did not converge in " +
                                   std::to_string(opt.max_sweeps) + " sweeps (change " +
                                   std::to_string(ks.fixed_point_change) + ")");
  P.extra = extra;
  ks.problem = P;
  finish_kernel_set(spec, ks, S, ps, opt);
  return ks;
}

KernelSet solve_control_kernels_iterative(const GeneralPlantSpec& spec, const RowVec& K, int M_iter, double tol,
                                          KernelOptions opt) {
  if (K.size() != spec.n()) fail(ErrorKind::Config, "gain K has wrong dimension");
  KernelSet ks;
  ks.K = K;
  ks.method = "iterative";
  GoursatProblem P = control_goursat_problem(spec, K, opt.gamma_duplicate);
  ExtraUpdate upd;
  if (has_p_coupling(spec)) {
    upd = [&spec](const Mat& k, const Mat& l) {
      return extra_from_py0(spec, solve_p_fd(spec, parabolic_forcing(spec, k, l)).py0);
    };
  }
  GoursatSolution S = solve_goursat_iterative(P, opt.Nk, M_iter, tol, upd);
  ks.term_norms = S.term_norms;
  ks.sweeps = S.iterations;
  if (upd) P.extra = upd(S.K, S.L);
  ks.problem = P;
  const PSolution ps = solve_p_fd(spec, parabolic_forcing(spec, S.K, S.L));
  finish_kernel_set(spec, ks, S, ps, opt);
  return ks;
}

KernelSet solve_control_kernels(const GeneralPlantSpec& spec, const RowVec& K, const KernelOptions& opt) {
  if (opt.method == KernelMethod::Series) return solve_control_kernels_series(spec, K, opt.N, opt);
  return solve_control_kernels_iterative(spec, K, opt.M_iter, opt.tol, opt);
}

InverseKernelSet solve_inverse_kernels(const GeneralPlantSpec& spec, const KernelSet& ks) {
  const int Nk = static_cast<int>(ks.x.size());
  const int N = Nk - 1;
  const double h = ks.h();
  InverseKernelSet iv;
  iv.x = ks.x;
  const Mat& k = ks.k;
  iv.rho = Mat::Zero(Nk, Nk);
  // rho(x,y) = k(x,y) + int_y^x rho(x,s) k(s,y) ds, row by row, descending in y.
  for (int i = 0; i < Nk; ++i) {
    iv.rho(i, i) = k(i, i);
    for (int j = i - 1; j >= 0; --j) {
      double rest = 0.5 * h * iv.rho(i, i) * k(i, j);
      for (int s = j + 1; s < i; ++s) rest += h * iv.rho(i, s) * k(s, j);
      iv.rho(i, j) = (k(i, j) + rest) / (1.0 - 0.5 * h * k(j, j));
    }
  }
  const Mat& rho = iv.rho;
  iv.sigma = Mat::Zero(Nk, Nk);
  for (int i = 0; i < Nk; ++i)
    for (int j = 0; j <= i; ++j) {
      double s = ks.l(i, j);
      for (int m = j; m <= i; ++m) s += tw(m, j, i, h) * rho(i, m) * ks.l(m, j);
      iv.sigma(i, j) = s;
    }
  iv.varrho = ks.p;
  iv.lambda = ks.gamma;
  iv.vartheta = ks.Upsilon;
  for (int i = 1; i < Nk; ++i) {
    for (int m = 0; m <= i; ++m) {
      const double w = tw(m, 0, i, h);
      iv.varrho.row(i) += w * rho(i, m) * ks.p.row(m);
      iv.lambda.row(i) += w * rho(i, m) * ks.gamma.row(m);
      iv.vartheta.row(i) += w * rho(i, m) * ks.Upsilon.row(m);
    }
  }
  iv.rho_y1 = gradient(rho.row(N).transpose(), h);
  iv.sigma_y1 = gradient(iv.sigma.row(N).transpose(), h);
  iv.varrho_y1 = ks.p_y.row(N).transpose();
  for (int m = 0; m <= N; ++m) iv.varrho_y1 += tw(m, 0, N, h) * rho(N, m) * ks.p_y.row(m).transpose();
  // Independent check: the resolvent also satisfies rho = k + int_y^x k(x,s) rho(s,y) ds.
  double res = 0.0;
  for (int i = 0; i < Nk; ++i)
    for (int j = 0; j <= i; ++j) {
      double s = k(i, j);
      for (int m = j; m <= i; ++m) s += tw(m, j, i, h) * k(i, m) * rho(m, j);
      res = std::max(res, std::abs(s - rho(i, j)));
    }
  iv.residual = res;
  (void)spec;
  return iv;
}

GoursatProblem observer_goursat_problem(const GeneralPlantSpec& s, double L_z) {
  if (s.n() < 1) fail(ErrorKind::Config, "observer kernels need n >= 1");
  const double th = s.theta();
  GoursatProblem P;
  P.theta = th;
  // Swapped variables: psi(x,y) = K(1-y, 1-x), phi(x,y) = L(1-y, 1-x), M(x) = w(1-x).
  if (s.f22) {
    auto f = s.f22;
    P.aK = [f](double xb, double yb) { return f(1 - yb, 1 - xb); };
    P.FKK = [f](double z, double y) { return f(1 - y, 1 - z); };
  }
  if (s.f21) {
    auto f = s.f21;
    P.FKL = [f](double z, double y) { return f(1 - y, 1 - z); };
  }
  if (s.c2) {
    auto c2 = s.c2;
    P.bKL = [c2](double y) { return c2(1 - y); };
  }
  if (s.f12) {
    auto f = s.f12;
    P.aL = [f, th](double xb, double yb) { return th * f(1 - yb, 1 - xb); };
    P.FLK = [f, th](double z, double y) { return th * f(1 - y, 1 - z); };
  }
  if (s.f11) {
    auto f = s.f11;
    P.FLL = [f, th](double z, double y) { return th * f(1 - y, 1 - z); };
  }
  if (s.c1) {
    auto c1 = s.c1;
    const double e1 = s.eps1, e2 = s.eps2;
    P.bLK = [c1, th](double y) { return th * c1(1 - y); };
    P.Ldiag = [c1, e1, e2](double xb) { return e2 * c1(1 - xb) / (e1 + e2); };
  }
  P.betaL = -s.q1;
  P.bw = RowVec::Constant(1, s.q0);
  P.Aw = Mat::Constant(1, 1, s.eps2 * s.c0);
  P.cK = RowVec::Constant(1, s.eps2 * s.c1s);
  P.cL = RowVec::Zero(1);
  P.w0 = RowVec::Constant(1, s.eps2 * (L_z / s.q0 + s.c1s));
  return P;
}

ObserverKernelSet solve_observer_kernels(const GeneralPlantSpec& spec, double L_z, const KernelOptions& opt) {
  ObserverKernelSet os;
  os.L_z = L_z;
  os.problem = observer_goursat_problem(spec, L_z);
  GoursatSolution S;
  if (opt.method == KernelMethod::Series) {
    S = solve_goursat_series(os.problem, opt.N, opt.Nk);
    os.series = S.series;
  } else {
    S = solve_goursat_iterative(os.problem, opt.Nk, opt.M_iter, opt.tol);
  }
  const int Nk = opt.Nk, N = Nk - 1;
  os.x = S.x;
  os.psi = Mat::Zero(Nk, Nk);
  os.phi = Mat::Zero(Nk, Nk);
  os.M = Vec(Nk);
  for (int i = 0; i < Nk; ++i) {
    os.M(i) = S.w(N - i, 0);
    for (int j = 0; j <= i; ++j) {
      os.psi(i, j) = S.K(N - j, N - i);
      os.phi(i, j) = S.L(N - j, N - i);
    }
  }
  return os;
}

double KernelResidualReport::get(const std::string& name) const {
  for (const auto& [n, v] : entries)
    if (n == name) return v;
  fail(ErrorKind::Validation, "unknown residual entry " + name);
}

KernelResidualReport kernel_residual(const GeneralPlantSpec& spec, const KernelSet& ks) {
  KernelResidualReport r;
  const int Nk = static_cast<int>(ks.x.size());
  const int N = Nk - 1;
  const double h = ks.h();
  const double th = spec.theta();
  GoursatSolution S;
  S.x = ks.x;
  S.K = ks.k;
  S.L = ks.l;
  S.w = ks.gamma;
  const GoursatResidual g = goursat_residual(ks.problem, S);
  r.entries.push_back({"k_pde_rms", g.pde_K});
  r.entries.push_back({"l_pde_rms", g.pde_L});
  r.entries.push_back({"gamma_ode_rms", g.ode});
  // Boundary identities evaluated directly against the spec.
  double ldiag = 0.0, kb = 0.0;
  for (int i = 0; i < Nk; ++i) {
    const double x = ks.x(i);
    ldiag = std::max(ldiag, std::abs(ks.l(i, i) + spec.eps1 * spec.ev(spec.c2, x) / (spec.eps1 + spec.eps2)));
    double s = 0.0;
    for (int m = 0; m <= i; ++m)
      s += tw(m, 0, i, h) * (ks.k(i, m) * spec.ev(spec.g2, ks.x(m)) + th * ks.l(i, m) * spec.ev(spec.g1, ks.x(m)));
    const double rhs = th * ks.l(i, 0) - spec.eps2 * ks.gamma.row(i).dot(spec.B.col(0)) + s - spec.ev(spec.g2, x);
    kb = std::max(kb, std::abs(ks.k(i, 0) - rhs));
  }
  r.entries.push_back({"l_diagonal", ldiag});
  r.entries.push_back({"k_boundary", kb});
  r.entries.push_back({"gamma0", (ks.gamma.row(0) + ks.K).cwiseAbs().maxCoeff()});
  double pb = 0.0;
  for (int i = 0; i < Nk; ++i) pb = std::max({pb, std::abs(ks.p(i, 0)), std::abs(ks.p(i, N)), std::abs(ks.p(0, i))});
  r.entries.push_back({"p_boundary", pb});
  r.entries.push_back({"upsilon0", ks.Upsilon.rows() ? ks.Upsilon.row(0).cwiseAbs().maxCoeff() : 0.0});
  if (ks.series) {
    const GoursatResidual gs = goursat_series_residual(ks.problem, *ks.series);
    r.entries.push_back({"series_k_pde_rms", gs.pde_K});
    r.entries.push_back({"series_l_pde_rms", gs.pde_L});
    r.entries.push_back({"series_l_diagonal", gs.diag_L});
    r.entries.push_back({"series_k_boundary", gs.bnd_K});
    r.entries.push_back({"series_gamma_ode_rms", gs.ode});
  }
  return r;
}

KernelResidualReport observer_kernel_residual(const GeneralPlantSpec& spec, const ObserverKernelSet& os) {
  KernelResidualReport r;
  const int Nk = static_cast<int>(os.x.size());
  const int N = Nk - 1;
  // Swapped-variable Goursat residual.
  GoursatSolution S;
  S.x = os.x;
  S.K = Mat::Zero(Nk, Nk);
  S.L = Mat::Zero(Nk, Nk);
  S.w = Mat(Nk, 1);
  for (int i = 0; i < Nk; ++i) {
    S.w(i, 0) = os.M(N - i);
    for (int j = 0; j <= i; ++j) {
      S.K(i, j) = os.psi(N - j, N - i);
      S.L(i, j) = os.phi(N - j, N - i);
    }
  }
  const GoursatResidual g = goursat_residual(os.problem, S);
  r.entries.push_back({"psi_pde_rms", g.pde_K});
  r.entries.push_back({"phi_pde_rms", g.pde_L});
  r.entries.push_back({"M_ode_rms", g.ode});
  double pd = 0.0, pb = 0.0;
  for (int i = 0; i < Nk; ++i) {
    const double x = os.x(i);
    pd = std::max(pd, std::abs(os.phi(i, i) - spec.eps2 * spec.ev(spec.c1, x) / (spec.eps1 + spec.eps2)));
    pb = std::max(pb, std::abs(os.psi(N, i) - (-spec.q1 * os.phi(N, i) + spec.q0 * os.M(i))));
  }
  r.entries.push_back({"phi_diagonal", pd});
  r.entries.push_back({"psi_boundary", pb});
  r.entries.push_back({"M_terminal", std::abs(os.M(N) - spec.eps2 * (os.L_z / spec.q0 + spec.c1s))});
  if (os.series) {
    const GoursatResidual gs = goursat_series_residual(os.problem, *os.series);
    r.entries.push_back({"series_psi_pde_rms", gs.pde_K});
    r.entries.push_back({"series_phi_pde_rms", gs.pde_L});
    r.entries.push_back({"series_phi_diagonal", gs.diag_L});
    r.entries.push_back({"series_psi_boundary", gs.bnd_K});
  }
  return r;
}

void write_kernel_csv(const std::string& path, const Vec& x, const Mat& K, bool lower_only) {
  std::ofstream f(path);
  if (!f) fail(ErrorKind::Config, "cannot write " + path);
  f << "x,y,value\n" << std::setprecision(12);
  for (int i = 0; i < x.size(); ++i)
    for (int j = 0; j < x.size(); ++j) {
      if (lower_only && j > i) continue;
      f << x(i) << ',' << x(j) << ',' << K(i, j) << '\n';
    }
}

}  // namespace bladectl
