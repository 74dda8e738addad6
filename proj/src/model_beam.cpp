#include "bladectl/model_beam.hpp"

#include <cmath>
#include <sstream>

namespace bladectl {

namespace {
constexpr double kClampedFreeRoot = 1.875104068711961;  // first root of 1 + cos(x)cosh(x) = 0

void require_positive(double v, const char* name) {
  if (!(v > 0)) {
    std::ostringstream os;
    os << "physical parameter " << name << " must be positive (got " << v << ")";
    fail(ErrorKind::Validation, os.str());
  }
}
}  // namespace

void PhysicalBeamParams::validate() const {
  require_positive(E_star, "E_star");
  require_positive(G_star, "G_star");
  require_positive(rho_star, "rho_star");
  require_positive(A_star, "A_star");
  require_positive(I_star, "I_star");
  require_positive(k_prime, "k_prime");
  require_positive(L_star, "L_star");
  require_positive(kappa_acute, "kappa_acute");
  require_positive(J_star, "J_star");
  if (Ad.rows() != Ad.cols() || q_row.cols() != Ad.rows() || d0.size() != Ad.rows())
    fail(ErrorKind::Validation, "disturbance dimensions of Ad, q_row and d0 are inconsistent");
  Eigen::EigenSolver<Mat> es(Ad);
  if ((es.eigenvalues().real().array().abs() > 1e-9).any())
    fail(ErrorKind::Validation, "Ad must only have eigenvalues on the imaginary axis");
  // diagonalizability: eigenvector matrix must be well conditioned
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(es.eigenvectors());
  const auto sv = svd.singularValues();
  if (sv(sv.size() - 1) < 1e-8 * sv(0)) fail(ErrorKind::Validation, "Ad must be diagonalizable");
}

DimensionlessParams nondimensionalize(const PhysicalBeamParams& p) {
  p.validate();
  DimensionlessParams d;
  const double L = p.L_star, EI = p.E_star * p.I_star;
  d.A = p.A_star / (L * L);
  d.I = p.I_star / std::pow(L, 4);
  d.R = p.R_star / L;
  d.G = p.G_star * std::pow(L, 4) / EI;
  if (std::isfinite(p.eps_override)) {
    require_positive(p.eps_override, "eps_override");
    d.eps = p.eps_override;
    d.omega0 = std::sqrt(d.eps * p.k_prime * p.G_star / (p.rho_star * L * L));
  } else {
    d.omega0 = std::isfinite(p.omega0) ? p.omega0
                                       : kClampedFreeRoot * kClampedFreeRoot *
                                             std::sqrt(EI / (p.rho_star * p.A_star * std::pow(L, 4)));
    require_positive(d.omega0, "omega0");
    d.eps = p.rho_star * L * L * d.omega0 * d.omega0 / (p.k_prime * p.G_star);
  }
  d.rho = d.eps * p.k_prime * d.G;  // equals rho* L^6 omega0^2 / (E* I*)
  d.a = d.A * d.rho;
  d.b = std::sqrt(d.a / d.eps);
  d.s = std::sqrt(d.eps);
  d.eps1 = d.eps2 = d.s;
  d.mu = d.rho * d.I;
  d.c = p.c_star * d.omega0 * L / EI;
  d.J = p.J_star * d.omega0 * d.omega0 * L / EI;
  if (std::isfinite(p.I0)) {
    d.I0 = p.I0;
  } else {
    // rectangular section of height Lh with I* = A* Lh^2 / 12: int alpha0 y dA over the upper half
    const double Lh = std::sqrt(12.0 * p.I_star / p.A_star);
    d.I0 = p.alpha0 * p.A_star * Lh / (2.0 * p.I_star) * L;
  }
  d.k1 = p.k1;
  d.k2 = p.k2;
  d.Q1 = p.Q1;
  d.Q2 = p.Q2;
  d.kappa = p.kappa_acute;
  d.omega_d = p.omega_d;
  d.S0_over_beta = p.S0 / p.beta_star;
  if (std::abs(d.s - p.Q2) < 1e-9) fail(ErrorKind::Validation, "singular boundary: Q2 equals sqrt(eps)");
  if (std::abs(d.s + p.Q2) < 1e-9) fail(ErrorKind::Validation, "singular boundary rescaling: Q2 equals -sqrt(eps)");
  return d;
}

std::pair<Vec, Vec> riemann_profiles(const DimensionlessParams& d, double k1, double k2, const Vec& x) {
  if (!(d.eps > 0)) fail(ErrorKind::Validation, "eps must be positive");
  const double s = std::sqrt(d.eps);
  Vec p1(x.size()), p2(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    p1(i) = std::exp((k1 - s * k2) * x(i) / (2 * s));
    p2(i) = std::exp(-(k1 + s * k2) * x(i) / (2 * s));
  }
  return {p1, p2};
}

GeneralPlantSpec build_general_spec(const DimensionlessParams& d, const PhysicalBeamParams& p) {
  const double s = d.s, b = d.b, I0 = d.I0, k1 = d.k1, k2 = d.k2;
  if (std::abs(s - d.Q2) < 1e-9) fail(ErrorKind::Validation, "singular boundary: Q2 equals sqrt(eps)");
  const double r = d.r();
  auto phi1 = [=](double x) { return std::exp((k1 - s * k2) * x / (2 * s)); };
  auto phi2 = [=](double x) { return std::exp(-(k1 + s * k2) * x / (2 * s)); };
  const bool use_phi2 = p.eta_disturbance_phi2;
  auto phiD = [=](double x) { return use_phi2 ? phi2(x) : phi1(x); };
  const double SB = d.S0_over_beta;
  const Mat q = p.q_row;

  GeneralPlantSpec g;
  g.eps1 = g.eps2 = s;
  g.c2 = [=](double x) { return (k1 - s * k2) * phi1(x) / (2 * s * phi2(x)) / r; };
  g.c1 = [=](double x) { return r * (k1 + s * k2) * phi2(x) / (2 * s * phi1(x)); };
  g.f22 = [=](double x, double y) { return 0.5 * b * b * std::cosh(b * (x - y)) * phi2(y) / phi2(x); };
  g.f21 = [=](double x, double y) { return -0.5 * b * b * std::cosh(b * (x - y)) * phi1(y) / (phi2(x) * r); };
  g.f12 = [=](double x, double y) { return r * 0.5 * b * b * std::cosh(b * (x - y)) * phi2(y) / phi1(x); };
  g.f11 = [=](double x, double y) { return -0.5 * b * b * std::cosh(b * (x - y)) * phi1(y) / phi1(x); };
  if (I0 != 0.0) {
    g.mu2 = [=](double x) { return I0 / phi2(x); };
    g.mu1 = [=](double x) { return r * I0 / phi1(x); };
    g.f23 = [=](double x, double y) { return b * I0 * std::sinh(b * (x - y)) / phi2(x); };
    g.f13 = [=](double x, double y) { return r * b * I0 * std::sinh(b * (x - y)) / phi1(x); };
    g.D2 = [=](double x) { return RowVec::Constant(1, 2 * I0 * std::cosh(b * x) * SB / phi2(x)); };
    g.D1 = [=](double x) { return RowVec::Constant(1, r * 2 * I0 * std::cosh(b * x) * SB / phiD(x)); };
    g.G2 = [=](double x) { return RowVec(-2 * I0 * std::cosh(b * x) / phi2(x) * q.row(0)); };
    g.G1 = [=](double x) { return RowVec(-r * 2 * I0 * std::cosh(b * x) / phiD(x) * q.row(0)); };
  }
  g.q1 = phi1(1.0) / (phi2(1.0) * r);
  g.q0 = 2 * s * d.R / phi2(1.0);
  g.A = Mat::Constant(1, 1, d.Q1 / (s - d.Q2));
  g.B = Mat::Constant(1, 1, 1.0 / (s - d.Q2));
  g.C = Mat::Constant(1, 1, 2 * s * d.Q1 / (s + d.Q2));
  g.c0 = 2 * d.c / d.J;
  g.c1s = 0.0;
  g.kappa0 = d.kappa;
  g.p2 = Mat::Constant(1, 1, -SB);
  g.Ad = p.Ad;
  g.q = p.q_row;
  try {
    g.validate(true);
  } catch (const Error& e) {
    fail(ErrorKind::Validation, std::string("assumption violated: ") + e.what());
  }
  return g;
}

double inner_loop_u1(double b, double I0, double Phi_x0, const Vec& varpi_y, const Vec& dT_y) {
  const int n = static_cast<int>(varpi_y.size());
  const double h = 1.0 / (n - 1);
  Vec w(n);
  for (int i = 0; i < n; ++i) w(i) = std::cosh(b * (1.0 - i * h));
  return std::cosh(b) * Phi_x0 - b * b * trapz(w.cwiseProduct(varpi_y), h) - I0 * trapz(w.cwiseProduct(dT_y), h);
}

PhysicalFields reconstruct_physical(const PlantState& st, const DimensionlessParams& d, const GeneralPlantSpec& spec) {
  const int n = static_cast<int>(st.xi.size());
  const double h = 1.0 / (n - 1), s = d.s, b = d.b, I0 = d.I0, r = d.r();
  const Vec x = unit_grid(n);
  auto [p1, p2] = riemann_profiles(d, d.k1, d.k2, x);
  const Vec eta = st.eta / r;  // undo the boundary rescaling
  PhysicalFields F;
  F.varpi_t = (p2.cwiseProduct(st.xi) + p1.cwiseProduct(eta)) / (2 * s);
  F.varpi_x = (p2.cwiseProduct(st.xi) - p1.cwiseProduct(eta)) / 2.0;
  double w0;
  if (d.Q1 != 0.0) {
    w0 = ((s - d.Q2) * eta(0) - (s + d.Q2) * st.xi(0)) / (2 * s * d.Q1);
  } else {
    w0 = st.X(0);
    F.remark_formula_used = false;
  }
  F.varpi.resize(n);
  F.varpi(0) = w0;
  for (int i = 1; i < n; ++i) F.varpi(i) = F.varpi(i - 1) + 0.5 * h * (F.varpi_x(i) + F.varpi_x(i - 1));

  // heat time derivative: boundary value from the disturbance and ODE dynamics
  const Vec& u = st.u;
  Vec ut = Vec::Zero(n);
  const double Xdot = (spec.A * st.X + spec.B * st.xi(0))(0);
  ut(0) = (spec.q * spec.Ad * st.d)(0) + spec.p2(0, 0) * Xdot;
  for (int i = 1; i + 1 < n; ++i) ut(i) = spec.kappa0 * (u(i + 1) - 2 * u(i) + u(i - 1)) / (h * h);

  F.Phi.resize(n);
  Vec Phix(n), Phit(n);
  for (int i = 0; i < n; ++i) {
    Vec ic(i + 1), is(i + 1), icw(i + 1), icut(i + 1), icwt(i + 1);
    for (int j = 0; j <= i; ++j) {
      const double c = std::cosh(b * (x(i) - x(j))), sh = std::sinh(b * (x(i) - x(j)));
      ic(j) = c * u(j);
      is(j) = sh * u(j);
      icw(j) = c * F.varpi_x(j);
      icut(j) = c * ut(j);
      icwt(j) = c * F.varpi_t(j);
    }
    Vec isw(i + 1);
    for (int j = 0; j <= i; ++j) isw(j) = std::sinh(b * (x(i) - x(j))) * F.varpi_x(j);
    F.Phi(i) = (2 * I0 / b) * std::sinh(b * x(i)) * u(0) - I0 * trapz(ic, h) - b * trapz(isw, h);
    Phix(i) = 2 * I0 * std::cosh(b * x(i)) * u(0) - I0 * u(i) - b * I0 * trapz(is, h) - b * b * trapz(icw, h);
    Phit(i) = (2 * I0 / b) * std::sinh(b * x(i)) * ut(0) - I0 * trapz(icut, h) +
              b * std::sinh(b * x(i)) * F.varpi_t(0) - b * b * trapz(icwt, h);
  }
  Vec pe_b(n), pe_s(n), ke_t(n), ke_r(n);
  for (int i = 0; i < n; ++i) {
    pe_b(i) = 0.5 * Phix(i) * Phix(i) + 0.5 * I0 * u(i) * Phix(i);
    pe_s(i) = 0.5 * b * b * std::pow(F.varpi_x(i) - F.Phi(i), 2);
    ke_t(i) = 0.5 * d.eps * b * b * std::pow(F.varpi_t(i) + (1 + d.R - x(i)) * d.omega_d, 2);
    ke_r(i) = 0.5 * d.mu * std::pow(Phit(i) - d.omega_d, 2);
  }
  F.PE_bending = trapz(pe_b, h);
  F.PE_shear = trapz(pe_s, h);
  F.KE_trans = trapz(ke_t, h);
  F.KE_rot = trapz(ke_r, h);
  F.disk = 0.5 * d.J * std::pow(d.omega_d + st.z, 2);
  return F;
}

}  // namespace bladectl
