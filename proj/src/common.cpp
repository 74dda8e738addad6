#include "bladectl/common.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>

namespace bladectl {

void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

Vec unit_grid(int n) {
  if (n < 2) fail(ErrorKind::Validation, "grid needs at least 2 nodes");
  return Vec::LinSpaced(n, 0.0, 1.0);
}

Vec trapz_weights(int n, double h) {
  Vec w = Vec::Constant(n, h);
  if (n == 1) {
    w(0) = 0.0;
    return w;
  }
  w(0) = w(n - 1) = 0.5 * h;
  return w;
}

double trapz(const Eigen::Ref<const Vec>& f, double h) {
  const Eigen::Index n = f.size();
  if (n < 2) return 0.0;
  return h * (f.sum() - 0.5 * (f(0) + f(n - 1)));
}

double interp_uniform(const Eigen::Ref<const Vec>& y, double x) {
  const int n = static_cast<int>(y.size());
  const double h = 1.0 / (n - 1);
  x = std::clamp(x, 0.0, 1.0);
  int i = std::min(static_cast<int>(x / h), n - 2);
  const double t = (x - i * h) / h;
  return (1.0 - t) * y(i) + t * y(i + 1);
}

double interp_cubic_uniform(const Eigen::Ref<const Vec>& y, double x) {
  const int n = static_cast<int>(y.size());
  if (n < 4) return interp_uniform(y, x);
  const double h = 1.0 / (n - 1);
  x = std::clamp(x, 0.0, 1.0);
  int i = std::clamp(static_cast<int>(x / h) - 1, 0, n - 4);
  const double t = (x - i * h) / h;  // in [0,3]
  double s = 0.0;
  for (int a = 0; a < 4; ++a) {
    double L = 1.0;
    for (int b = 0; b < 4; ++b)
      if (b != a) L *= (t - b) / static_cast<double>(a - b);
    s += L * y(i + a);
  }
  return s;
}

Vec resample(const Vec& y, int n_out) {
  if (y.size() == n_out) return y;
  Vec out(n_out);
  const double h = 1.0 / (n_out - 1);
  for (int i = 0; i < n_out; ++i) out(i) = interp_uniform(y, i * h);
  return out;
}

Mat resample2(const Mat& F, int n_out) {
  const int n = static_cast<int>(F.rows());
  if (n == n_out) return F;
  const double H = 1.0 / (n - 1), h = 1.0 / (n_out - 1);
  Mat out(n_out, n_out);
  for (int i = 0; i < n_out; ++i) {
    const double x = i * h;
    int a = std::min(static_cast<int>(x / H), n - 2);
    const double s = (x - a * H) / H;
    for (int j = 0; j < n_out; ++j) {
      const double y = j * h;
      int b = std::min(static_cast<int>(y / H), n - 2);
      const double t = (y - b * H) / H;
      out(i, j) = (1 - s) * (1 - t) * F(a, b) + s * (1 - t) * F(a + 1, b) + (1 - s) * t * F(a, b + 1) +
                  s * t * F(a + 1, b + 1);
    }
  }
  return out;
}

Vec gradient(const Eigen::Ref<const Vec>& f, double h) {
  const Eigen::Index n = f.size();
  Vec g(n);
  if (n < 3) {
    g.setConstant(n > 1 ? (f(n - 1) - f(0)) / h : 0.0);
    return g;
  }
  for (Eigen::Index i = 1; i + 1 < n; ++i) g(i) = (f(i + 1) - f(i - 1)) / (2 * h);
  g(0) = (-3 * f(0) + 4 * f(1) - f(2)) / (2 * h);
  g(n - 1) = (3 * f(n - 1) - 4 * f(n - 2) + f(n - 3)) / (2 * h);
  return g;
}

void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
  nodes.assign(n, 0.0);
  weights.assign(n, 0.0);
  for (int i = 0; i < n; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      const double dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) {
        weights[i] = 2.0 / ((1 - x * x) * dp * dp);
        break;
      }
      weights[i] = 2.0 / ((1 - x * x) * dp * dp);
    }
    nodes[i] = x;
  }
}

std::pair<Mat, Mat> expm_phi1(const Mat& M) {
  const Eigen::Index n = M.rows();
  Mat aug = Mat::Zero(2 * n, 2 * n);
  aug.topLeftCorner(n, n) = M;
  aug.topRightCorner(n, n) = Mat::Identity(n, n);
  const Mat E = aug.exp();
  return {E.topLeftCorner(n, n), E.topRightCorner(n, n)};
}

bool is_hurwitz(const Mat& A) {
  Eigen::EigenSolver<Mat> es(A);
  return (es.eigenvalues().real().array() < 0.0).all();
}

bool is_controllable(const Mat& A, const Mat& B) {
  const Eigen::Index n = A.rows();
  Mat ctrb(n, n * B.cols());
  Mat blk = B;
  for (Eigen::Index k = 0; k < n; ++k) {
    ctrb.middleCols(k * B.cols(), B.cols()) = blk;
    blk = A * blk;
  }
  Eigen::FullPivLU<Mat> lu(ctrb);
  lu.setThreshold(1e-10);
  return lu.rank() == n;
}

bool is_observable(const Mat& A, const Mat& C) { return is_controllable(A.transpose(), C.transpose()); }

double h1_norm_sq(const Eigen::Ref<const Vec>& f, double h) {
  const Eigen::Index n = f.size();
  double semi = 0.0;
  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    const double d = (f(i + 1) - f(i)) / h;
    semi += d * d * h;
  }
  return trapz(f.cwiseProduct(f), h) + semi;
}

}  // namespace bladectl
