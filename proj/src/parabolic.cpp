#include "bladectl/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace bladectl {

namespace {

// Green's function of d^2/dy^2 on [0,1] with Dirichlet ends and source at x, and its derivatives.
double green(double y, double x) { return y <= x ? y * (x - 1.0) : x * (y - 1.0); }
double green_y(double y, double x) {
  if (std::abs(y - x) < 1e-13) return x - 0.5;  // mean of the one-sided slopes
  return y < x ? x - 1.0 : x;
}
double green_x(double y, double x) {
  if (std::abs(y - x) < 1e-13) return y - 0.5;
  return y < x ? y : y - 1.0;
}

double mu2_prime(const GeneralPlantSpec& s, double x) {
  if (!s.mu2) return 0.0;
  const double d = 1e-5;
  const double a = std::max(0.0, x - d), b = std::min(1.0, x + d);
  return (s.mu2(b) - s.mu2(a)) / (b - a);
}

}  // namespace

Mat parabolic_forcing(const GeneralPlantSpec& spec, const Mat& k, const Mat& l) {
  const int Nk = static_cast<int>(k.rows());
  const double h = 1.0 / (Nk - 1);
  const double th = spec.theta();
  const Vec x = unit_grid(Nk);
  Mat H = Mat::Zero(Nk, Nk);
  if (!spec.mu1 && !spec.mu2 && !spec.f13 && !spec.f23) return H;
  Mat F23(Nk, Nk), F13(Nk, Nk);
  for (int m = 0; m < Nk; ++m)
    for (int j = 0; j < Nk; ++j) {
      F23(m, j) = spec.ev(spec.f23, x(m), x(j));
      F13(m, j) = spec.ev(spec.f13, x(m), x(j));
    }
  for (int i = 0; i < Nk; ++i)
    for (int j = 0; j <= i; ++j) {
      double s = 0.0;
      for (int m = j; m <= i && i > j; ++m) {
        const double wm = (m == j || m == i) ? 0.5 * h : h;
        s += wm * (F23(m, j) * k(i, m) + th * F13(m, j) * l(i, m));
      }
      H(i, j) = th * l(i, j) * spec.ev(spec.mu1, x(j)) + k(i, j) * spec.ev(spec.mu2, x(j)) - F23(i, j) + s;
    }
  return H;
}

PSolution solve_p(const GeneralPlantSpec& spec, const Mat& H, int Nf) {
  const int Nk = static_cast<int>(H.rows());
  const double h = 1.0 / (Nk - 1);
  const double D = spec.eps2 * spec.kappa0;
  const Vec x = unit_grid(Nk);
  PSolution S;
  S.p = Mat::Zero(Nk, Nk);
  S.p_y = Mat::Zero(Nk, Nk);
  S.py0 = Vec::Zero(Nk);
  S.coeff = Mat::Zero(Nk, Nf);
  const bool has_mu = static_cast<bool>(spec.mu2);
  if (!has_mu && H.cwiseAbs().maxCoeff() == 0.0) return S;
  if (Nf < 1) fail(ErrorKind::Config, "N_fourier must be >= 1");

  // b_n(x_i) = 2 int_0^{x_i} H(x_i,y) sin(n pi y) dy (H vanishes above the diagonal).
  Mat b = Mat::Zero(Nk, Nf);
  for (int i = 1; i < Nk; ++i)
    for (int n = 1; n <= Nf; ++n) {
      double s = 0.0;
      for (int j = 0; j <= i; ++j) {
        const double w = (j == 0 || j == i) ? 0.5 * h : h;
        s += w * H(i, j) * std::sin(n * M_PI * x(j));
      }
      b(i, n - 1) = 2.0 * s;
    }

  std::vector<double> gt, gw;
  gauss_legendre(6, gt, gw);
  Mat R = Mat::Zero(Nk, Nf);  // coefficients of the smooth remainder p - p_s
  for (int n = 1; n <= Nf; ++n) {
    const double lam = D * n * n * M_PI * M_PI;
    const double npi = n * M_PI;
    const Vec bn = b.col(n - 1);
    auto F = [&](double xx) {
      const double mu = has_mu ? spec.mu2(xx) : 0.0;
      const double ds = -2.0 * (mu2_prime(spec, xx) * std::sin(npi * xx) + mu * npi * std::cos(npi * xx)) / lam;
      return interp_cubic_uniform(bn, xx) - ds;
    };
    const int sub = std::max(1, static_cast<int>(std::ceil(lam * h)));
    const double hs = h / sub;
    const double decay = std::exp(-lam * hs);
    double r = 0.0;
    for (int i = 0; i + 1 < Nk; ++i) {
      for (int q = 0; q < sub; ++q) {
        const double x0 = x(i) + q * hs;
        double acc = 0.0;
        for (size_t g = 0; g < gt.size(); ++g) {
          const double tau = 0.5 * hs * (gt[g] + 1.0);
          acc += 0.5 * hs * gw[g] * std::exp(-lam * (hs - tau)) * F(x0 + tau);
        }
        r = decay * r + acc;
      }
      R(i + 1, n - 1) = r;
    }
  }

  double pmax = 0.0;
  for (int i = 0; i < Nk; ++i) {
    const double mu = has_mu ? spec.mu2(x(i)) : 0.0;
    for (int n = 1; n <= Nf; ++n) {
      const double lam = D * n * n * M_PI * M_PI;
      S.coeff(i, n - 1) = R(i, n - 1) - 2.0 * mu * std::sin(n * M_PI * x(i)) / lam;
    }
    double py0 = mu * (x(i) - 1.0) / D;
    for (int n = 1; n <= Nf; ++n) py0 += n * M_PI * R(i, n - 1);
    S.py0(i) = py0;
    for (int j = 0; j < Nk; ++j) {
      double p = mu * green(x(j), x(i)) / D, py = mu * green_y(x(j), x(i)) / D;
      for (int n = 1; n <= Nf; ++n) {
        p += R(i, n - 1) * std::sin(n * M_PI * x(j));
        py += n * M_PI * R(i, n - 1) * std::cos(n * M_PI * x(j));
      }
      S.p(i, j) = p;
      S.p_y(i, j) = py;
      pmax = std::max(pmax, std::abs(p));
    }
  }
  // p(0,.) = 0 identically; the split formula is singular there.
  S.p.row(0).setZero();
  S.p_y.row(0).setZero();
  S.py0(0) = 0.0;
  double tail = 0.0;
  for (int i = 0; i < Nk; ++i)
    for (int j = 0; j < Nk; ++j) {
      double t = 0.0;
      for (int n = std::max(1, Nf - 4); n <= Nf; ++n) t += S.coeff(i, n - 1) * std::sin(n * M_PI * x(j));
      tail = std::max(tail, std::abs(t));
    }
  S.tail = tail;
  S.truncation_warning = tail > 1e-6 * std::max(pmax, 1e-300);
  return S;
}

PSolution solve_p_fd(const GeneralPlantSpec& spec, const Mat& H) {
  const int Nk = static_cast<int>(H.rows());
  const double h = 1.0 / (Nk - 1);
  const double D = spec.eps2 * spec.kappa0;
  const Vec x = unit_grid(Nk);
  PSolution S;
  S.p = Mat::Zero(Nk, Nk);
  S.p_y = Mat::Zero(Nk, Nk);
  S.py0 = Vec::Zero(Nk);
  const bool has_mu = static_cast<bool>(spec.mu2);
  if (!has_mu && H.cwiseAbs().maxCoeff() == 0.0) return S;

  // Forcing of the remainder w = p - p_s, with the half value on the diagonal.
  auto forcing = [&](int i) {
    Vec f(Nk);
    const double mu = has_mu ? spec.mu2(x(i)) : 0.0, mup = mu2_prime(spec, x(i));
    for (int j = 0; j < Nk; ++j) {
      const double Hij = j < i ? H(i, j) : (j == i ? 0.5 * H(i, i) : 0.0);
      f(j) = Hij - (mup * green(x(j), x(i)) + mu * green_x(x(j), x(i))) / D;
    }
    return f;
  };
  // Tridiagonal solve of (a I - D d^2/dy^2) w = rhs with homogeneous Dirichlet ends.
  auto solve_tri = [&](double a, const Vec& rhs) {
    const int n = Nk - 2;
    Vec w = Vec::Zero(Nk);
    if (n <= 0) return w;
    const double off = -D / (h * h), dia = a + 2.0 * D / (h * h);
    std::vector<double> c(n), d(n);
    c[0] = off / dia;
    d[0] = rhs(1) / dia;
    for (int k = 1; k < n; ++k) {
      const double m = dia - off * c[k - 1];
      c[k] = off / m;
      d[k] = (rhs(k + 1) - off * d[k - 1]) / m;
    }
    w(n) = d[n - 1];
    for (int k = n - 2; k >= 0; --k) w(k + 1) = d[k] - c[k] * w(k + 2);
    return w;
  };
  Mat W = Mat::Zero(Nk, Nk);
  for (int i = 1; i < Nk; ++i) {
    const Vec f = forcing(i);
    if (i == 1) {
      W.row(1) = solve_tri(1.0 / h, Vec(W.row(0).transpose() / h + f)).transpose();
    } else {
      const Vec rhs = (4.0 * W.row(i - 1).transpose() - W.row(i - 2).transpose()) / (2.0 * h) + f;
      W.row(i) = solve_tri(1.5 / h, rhs).transpose();
    }
  }
  for (int i = 0; i < Nk; ++i) {
    const double mu = has_mu ? spec.mu2(x(i)) : 0.0;
    const Vec wy = gradient(W.row(i).transpose(), h);
    for (int j = 0; j < Nk; ++j) {
      S.p(i, j) = W(i, j) + mu * green(x(j), x(i)) / D;
      S.p_y(i, j) = wy(j) + mu * green_y(x(j), x(i)) / D;
    }
    S.py0(i) = wy(0) + mu * (x(i) - 1.0) / D;
  }
  S.p.row(0).setZero();
  S.p_y.row(0).setZero();
  S.py0(0) = 0.0;
  return S;
}

}  // namespace bladectl
