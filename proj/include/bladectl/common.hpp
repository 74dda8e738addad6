#pragma once

#include <Eigen/Dense>

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace bladectl {

using Vec = Eigen::VectorXd;
using RowVec = Eigen::RowVectorXd;
using Mat = Eigen::MatrixXd;

using Fn1 = std::function<double(double)>;
using Fn2 = std::function<double(double, double)>;
using RowFn = std::function<RowVec(double)>;

// Error categories map one-to-one onto the CLI exit codes.
enum class ErrorKind { Divergence = 1, Config = 2, Synthesis = 3, Validation = 4 };

class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }
  int exit_code() const { return kind_ == ErrorKind::Validation ? 2 : static_cast<int>(kind_); }

private:
  ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& what);

// Uniform nodes on [0,1] (n >= 2).
Vec unit_grid(int n);

// Trapezoid weights for n uniform nodes with spacing h (all zero when n == 1).
Vec trapz_weights(int n, double h);

// Trapezoid integral of f over its n uniform nodes with spacing h.
double trapz(const Eigen::Ref<const Vec>& f, double h);

// Linear interpolation of samples y on the uniform grid of [0,1] at point x (clamped).
double interp_uniform(const Eigen::Ref<const Vec>& y, double x);

// Cubic (Catmull-Rom style, 4-point Lagrange) interpolation on the uniform grid of [0,1].
double interp_cubic_uniform(const Eigen::Ref<const Vec>& y, double x);

// Resample a vector defined on a uniform [0,1] grid onto another uniform grid.
Vec resample(const Vec& y, int n_out);

// Bilinear resampling of a square matrix sampled on a uniform [0,1]^2 grid.
Mat resample2(const Mat& F, int n_out);

// Derivative of samples on a uniform grid: central interior, second-order one-sided ends.
Vec gradient(const Eigen::Ref<const Vec>& f, double h);

// Squared H^1 norm on a uniform grid: trapezoid L^2 part plus forward-difference seminorm.
double h1_norm_sq(const Eigen::Ref<const Vec>& f, double h);

// Gauss-Legendre nodes/weights on [-1,1].
void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights);

// phi_1(M) = sum_k M^k/(k+1)!, computed from an augmented matrix exponential; returns
// (exp(M), phi_1(M)).
std::pair<Mat, Mat> expm_phi1(const Mat& M);

// Hurwitz test: all eigenvalues with strictly negative real part.
bool is_hurwitz(const Mat& A);

// Controllability / observability rank tests.
bool is_controllable(const Mat& A, const Mat& B);
bool is_observable(const Mat& A, const Mat& C);

}  // namespace bladectl
