#include "bladectl/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace bladectl {

namespace {

double ev1(const Fn1& f, double x) { return f ? f(x) : 0.0; }
double ev2(const Fn2& f, double x, double y) { return f ? f(x, y) : 0.0; }
RowVec evr(const RowFn& f, double x, int nw) { return f ? f(x) : RowVec::Zero(nw); }

// Chebyshev polynomials T_k(2x-1) and their x-derivatives, k = 0..N.
void cheb(double x, int N, double* T, double* dT) {
  const double t = 2.0 * x - 1.0;
  T[0] = 1.0;
  dT[0] = 0.0;
  if (N >= 1) {
    T[1] = t;
    dT[1] = 2.0;
  }
  double Um1 = 1.0, Um2 = 0.0;  // U_0, U_{-1}
  for (int k = 2; k <= N; ++k) {
    T[k] = 2.0 * t * T[k - 1] - T[k - 2];
    const double Uk1 = 2.0 * t * Um1 - Um2;  // U_{k-1}
    dT[k] = 2.0 * k * Uk1;
    Um2 = Um1;
    Um1 = Uk1;
  }
}

struct Basis {
  int N;
  std::vector<std::pair<int, int>> ab;
  explicit Basis(int N_) : N(N_) {
    for (int a = 0; a <= N; ++a)
      for (int b = 0; a + b <= N; ++b) ab.emplace_back(a, b);
  }
  int size() const { return static_cast<int>(ab.size()); }
};

double eval_tensor(const Basis& B, const Vec& c, double x, double y) {
  std::vector<double> Tx(B.N + 1), Ty(B.N + 1), d(B.N + 1);
  cheb(x, B.N, Tx.data(), d.data());
  cheb(y, B.N, Ty.data(), d.data());
  double s = 0.0;
  for (int i = 0; i < B.size(); ++i) s += c(i) * Tx[B.ab[i].first] * Ty[B.ab[i].second];
  return s;
}

// Interpolated extra forcing on the kernel grid.
RowVec extra_at(const GoursatProblem& P, double x) {
  const int nw = P.nw();
  if (P.extra.size() == 0) return RowVec::Zero(nw);
  RowVec r(nw);
  for (int k = 0; k < nw; ++k) r(k) = interp_cubic_uniform(P.extra.col(k), x);
  return r;
}

// Quadrature helper: Gauss-Legendre on [lo, hi].
struct Quad {
  std::vector<double> t, w;
  explicit Quad(int n) { gauss_legendre(n, t, w); }
  template <class F>
  void each(double lo, double hi, F&& f) const {
    const double half = 0.5 * (hi - lo), mid = 0.5 * (hi + lo);
    for (size_t q = 0; q < t.size(); ++q) f(mid + half * t[q], half * w[q]);
  }
};

// Collocation system for the series method. The matrix depends on everything except the
// extra forcing, so it is factored once and reused across parabolic-coupling sweeps.
class SeriesSystem {
public:
  SeriesSystem(const GoursatProblem& P, int N) : P_(P), B_(N), quad_(std::max(16, N + 10)) {
    nb_ = B_.size();
    nw_ = P.nw();
    nu_ = 2 * nb_ + nw_ * (N + 1);
    assemble();
  }

  SeriesRep solve(const Mat& extra, double* lsq_res) {
    Vec rhs = rhs_base_;
    if (extra.size() > 0) {
      for (size_t r = 0; r < ode_rows_.size(); ++r) {
        const auto& [row, x, k] = ode_rows_[r];
        rhs(row) += ode_weight_ * interp_cubic_uniform(extra.col(k), x);
      }
    }
    const Vec z = qr2_.solve(rhs - A_ * a0_);
    const Vec a = a0_ + Q2_ * z;
    if (lsq_res) *lsq_res = (A_ * a - rhs).norm();
    SeriesRep R;
    R.N = B_.N;
    R.aK = a.segment(0, nb_);
    R.aL = a.segment(nb_, nb_);
    R.gw = Mat(B_.N + 1, nw_);
    for (int k = 0; k < nw_; ++k)
      for (int j = 0; j <= B_.N; ++j) R.gw(j, k) = a(2 * nb_ + k * (B_.N + 1) + j);
    return R;
  }

private:
  int idxK(int c) const { return c; }
  int idxL(int c) const { return nb_ + c; }
  int idxW(int j, int k) const { return 2 * nb_ + k * (B_.N + 1) + j; }

  void assemble() {
    const int N = B_.N;
    const int nc = std::max(N + 4, static_cast<int>(std::ceil(std::sqrt(2.0 * nu_))) + 2);
    const int nbnd = 4 * (N + 1);
    const int rows = 2 * nc * nc + nbnd * (1 + nw_);
    A_ = Mat::Zero(rows, nu_);
    rhs_base_ = Vec::Zero(rows);
    const double wp = 1.0 / std::sqrt(static_cast<double>(nc * nc));
    const double wb = 1.0 / std::sqrt(static_cast<double>(nbnd));
    ode_weight_ = wb;

    std::vector<double> Tx(N + 1), dTx(N + 1), Ty(N + 1), dTy(N + 1), Tz(N + 1), dTz(N + 1);
    std::vector<double> T0(N + 1), dT0(N + 1);
    cheb(0.0, N, T0.data(), dT0.data());

    auto node = [](int i, int n) { return 0.5 * (1.0 - std::cos(M_PI * (i + 0.5) / n)); };
    int row = 0;
    const double th = P_.theta;
    for (int iu = 0; iu < nc; ++iu) {
      for (int iv = 0; iv < nc; ++iv) {
        const double x = node(iu, nc), y = x * node(iv, nc);
        cheb(x, N, Tx.data(), dTx.data());
        cheb(y, N, Ty.data(), dTy.data());
        std::vector<double> IKK(N + 1, 0.0), IKL(N + 1, 0.0), ILK(N + 1, 0.0), ILL(N + 1, 0.0);
        quad_.each(y, x, [&](double z, double w) {
          cheb(z, N, Tz.data(), dTz.data());
          const double fkk = ev2(P_.FKK, z, y), fkl = ev2(P_.FKL, z, y);
          const double flk = ev2(P_.FLK, z, y), fll = ev2(P_.FLL, z, y);
          for (int b = 0; b <= N; ++b) {
            IKK[b] += w * fkk * Tz[b];
            IKL[b] += w * fkl * Tz[b];
            ILK[b] += w * flk * Tz[b];
            ILL[b] += w * fll * Tz[b];
          }
        });
        const double bkl = ev1(P_.bKL, y), blk = ev1(P_.bLK, y);
        const int rK = row++, rL = row++;
        for (int c = 0; c < nb_; ++c) {
          const auto [a, b] = B_.ab[c];
          A_(rK, idxK(c)) = wp * (dTx[a] * Ty[b] + Tx[a] * dTy[b] - Tx[a] * IKK[b]);
          A_(rK, idxL(c)) = wp * (-bkl * Tx[a] * Ty[b] - Tx[a] * IKL[b]);
          A_(rL, idxL(c)) = wp * (dTx[a] * Ty[b] - th * Tx[a] * dTy[b] - Tx[a] * ILL[b]);
          A_(rL, idxK(c)) = wp * (-blk * Tx[a] * Ty[b] - Tx[a] * ILK[b]);
        }
        rhs_base_(rK) = wp * ev2(P_.aK, x, y);
        rhs_base_(rL) = wp * ev2(P_.aL, x, y);
      }
    }

    for (int ib = 0; ib < nbnd; ++ib) {
      const double x = node(ib, nbnd);
      cheb(x, N, Tx.data(), dTx.data());
      std::vector<double> IgK(N + 1, 0.0), IgL(N + 1, 0.0);
      std::vector<Vec> IDK(N + 1, Vec::Zero(nw_)), IDL(N + 1, Vec::Zero(nw_));
      quad_.each(0.0, x, [&](double y, double w) {
        cheb(y, N, Ty.data(), dTy.data());
        const double gk = ev1(P_.gK, y), gl = ev1(P_.gL, y);
        const RowVec dk = evr(P_.DK, y, nw_), dl = evr(P_.DL, y, nw_);
        for (int b = 0; b <= N; ++b) {
          IgK[b] += w * gk * Ty[b];
          IgL[b] += w * gl * Ty[b];
          IDK[b] += w * Ty[b] * dk.transpose();
          IDL[b] += w * Ty[b] * dl.transpose();
        }
      });
      // Boundary row.
      const int rb = row++;
      for (int c = 0; c < nb_; ++c) {
        const auto [a, b] = B_.ab[c];
        A_(rb, idxK(c)) = wb * Tx[a] * (T0[b] - IgK[b]);
        A_(rb, idxL(c)) = wb * Tx[a] * (-P_.betaL * T0[b] - IgL[b]);
      }
      for (int k = 0; k < nw_; ++k)
        for (int j = 0; j <= N; ++j) A_(rb, idxW(j, k)) = -wb * Tx[j] * P_.bw(k);
      rhs_base_(rb) = wb * ev1(P_.e, x);
      // ODE rows.
      const RowVec rr = evr(P_.r, x, nw_);
      for (int k = 0; k < nw_; ++k) {
        const int ro = row++;
        const double cl = P_.cL.size() ? P_.cL(k) : 0.0, ck = P_.cK.size() ? P_.cK(k) : 0.0;
        for (int c = 0; c < nb_; ++c) {
          const auto [a, b] = B_.ab[c];
          A_(ro, idxK(c)) = -wb * Tx[a] * (IDK[b](k) + ck * T0[b]);
          A_(ro, idxL(c)) = -wb * Tx[a] * (IDL[b](k) + cl * T0[b]);
        }
        for (int kk = 0; kk < nw_; ++kk)
          for (int j = 0; j <= N; ++j)
            A_(ro, idxW(j, kk)) = wb * ((kk == k ? dTx[j] : 0.0) - Tx[j] * P_.Aw(kk, k));
        rhs_base_(ro) = wb * rr(k);
        ode_rows_.emplace_back(ro, x, k);
      }
    }

    // Exact constraints: L on the diagonal and the K boundary relation at N+1 Chebyshev points,
    // and w(0).
    const int ncon = 2 * (N + 1) + nw_;
    Mat Cm = Mat::Zero(ncon, nu_);
    Vec dc = Vec::Zero(ncon);
    for (int i = 0; i <= N; ++i) {
      const int rc = N + 1 + nw_ + i;
      const double x = node(i, N + 1);
      cheb(x, N, Tx.data(), dTx.data());
      std::vector<double> IgK(N + 1, 0.0), IgL(N + 1, 0.0);
      quad_.each(0.0, x, [&](double y, double w) {
        cheb(y, N, Ty.data(), dTy.data());
        const double gk = ev1(P_.gK, y), gl = ev1(P_.gL, y);
        for (int b = 0; b <= N; ++b) {
          IgK[b] += w * gk * Ty[b];
          IgL[b] += w * gl * Ty[b];
        }
      });
      for (int c = 0; c < nb_; ++c) {
        const auto [a, b] = B_.ab[c];
        Cm(rc, idxK(c)) = Tx[a] * (T0[b] - IgK[b]);
        Cm(rc, idxL(c)) = Tx[a] * (-P_.betaL * T0[b] - IgL[b]);
      }
      for (int k = 0; k < nw_; ++k)
        for (int j = 0; j <= N; ++j) Cm(rc, idxW(j, k)) = -Tx[j] * P_.bw(k);
      dc(rc) = ev1(P_.e, x);
    }
    for (int i = 0; i <= N; ++i) {
      const double x = node(i, N + 1);
      cheb(x, N, Tx.data(), dTx.data());
      for (int c = 0; c < nb_; ++c) Cm(i, idxL(c)) = Tx[B_.ab[c].first] * Tx[B_.ab[c].second];
      dc(i) = ev1(P_.Ldiag, x);
    }
    for (int k = 0; k < nw_; ++k) {
      for (int j = 0; j <= N; ++j) Cm(N + 1 + k, idxW(j, k)) = T0[j];
      dc(N + 1 + k) = P_.w0(k);
    }
    Eigen::HouseholderQR<Mat> qrc(Cm.transpose());
    const Mat Q = qrc.householderQ();
    const Mat R = qrc.matrixQR().topLeftCorner(ncon, ncon);
    const Vec y0 = R.transpose().triangularView<Eigen::Lower>().solve(dc);
    a0_ = Q.leftCols(ncon) * y0;
    Q2_ = Q.rightCols(nu_ - ncon);
    qr2_.compute(A_ * Q2_);
    if (qr2_.rank() < Q2_.cols())
      fail(ErrorKind::Synthesis, "series kernel collocation system is rank deficient (rank " +
                                     std::to_string(qr2_.rank()) + " < " + std::to_string(Q2_.cols()) + ")");
  }

  GoursatProblem P_;
  Basis B_;
  Quad quad_;
  int nb_ = 0, nw_ = 0, nu_ = 0;
  Mat A_, Q2_;
  Vec rhs_base_, a0_;
  double ode_weight_ = 1.0;
  std::vector<std::tuple<int, double, int>> ode_rows_;
  Eigen::ColPivHouseholderQR<Mat> qr2_;
};

Mat cheb_matrix(const Vec& x, int N) {
  Mat T(x.size(), N + 1);
  std::vector<double> t(N + 1), d(N + 1);
  for (int i = 0; i < x.size(); ++i) {
    cheb(x(i), N, t.data(), d.data());
    for (int k = 0; k <= N; ++k) T(i, k) = t[k];
  }
  return T;
}

void sample_series(const SeriesRep& R, GoursatSolution& S, int Nk) {
  S.x = unit_grid(Nk);
  const Basis B(R.N);
  const Mat T = cheb_matrix(S.x, R.N);
  Mat CK = Mat::Zero(R.N + 1, R.N + 1), CL = CK;
  for (int c = 0; c < B.size(); ++c) {
    CK(B.ab[c].first, B.ab[c].second) = R.aK(c);
    CL(B.ab[c].first, B.ab[c].second) = R.aL(c);
  }
  S.K = T * CK * T.transpose();
  S.L = T * CL * T.transpose();
  for (int i = 0; i < Nk; ++i)
    for (int j = i + 1; j < Nk; ++j) S.K(i, j) = S.L(i, j) = 0.0;
  S.w = T * R.gw;
}

}  // namespace

double SeriesRep::K(double x, double y) const { return eval_tensor(Basis(N), aK, x, y); }
double SeriesRep::L(double x, double y) const { return eval_tensor(Basis(N), aL, x, y); }
RowVec SeriesRep::w(double x) const {
  std::vector<double> T(N + 1), d(N + 1);
  cheb(x, N, T.data(), d.data());
  RowVec r = RowVec::Zero(gw.cols());
  for (int j = 0; j <= N; ++j) r += T[j] * gw.row(j);
  return r;
}

GoursatSolution solve_goursat_series(const GoursatProblem& P, int N, int Nk) {
  SeriesGoursatSolver solver(P, N);
  return solver.solve(P.extra, Nk);
}

struct SeriesGoursatSolver::Impl {
  SeriesSystem sys;
  Impl(const GoursatProblem& P, int N) : sys(P, N) {}
};

SeriesGoursatSolver::SeriesGoursatSolver(const GoursatProblem& P, int N) {
  if (N < 1) fail(ErrorKind::Config, "series degree N must be >= 1");
  impl_ = std::make_unique<Impl>(P, N);
}
SeriesGoursatSolver::~SeriesGoursatSolver() = default;

GoursatSolution SeriesGoursatSolver::solve(const Mat& extra, int Nk) {
  GoursatSolution S;
  auto R = std::make_shared<SeriesRep>(impl_->sys.solve(extra, &S.lsq_residual));
  sample_series(*R, S, Nk);
  S.series = R;
  S.iterations = 1;
  return S;
}

GoursatSolution solve_goursat_iterative(GoursatProblem P, int Nk, int M_iter, double tol,
                                        const ExtraUpdate& update) {
  if (Nk < 3) fail(ErrorKind::Config, "kernel grid needs at least 3 nodes");
  const int N = Nk - 1;
  const int nw = P.nw();
  const double h = 1.0 / N;
  const double th = P.theta;
  const Vec x = unit_grid(Nk);
  const Vec wt = trapz_weights(Nk, h);

  // Coefficient tables.
  Mat aK(Nk, Nk), aL(Nk, Nk), FKK(Nk, Nk), FKL(Nk, Nk), FLK(Nk, Nk), FLL(Nk, Nk);
  for (int i = 0; i < Nk; ++i)
    for (int j = 0; j < Nk; ++j) {
      aK(i, j) = ev2(P.aK, x(i), x(j));
      aL(i, j) = ev2(P.aL, x(i), x(j));
      FKK(i, j) = ev2(P.FKK, x(i), x(j));
      FKL(i, j) = ev2(P.FKL, x(i), x(j));
      FLK(i, j) = ev2(P.FLK, x(i), x(j));
      FLL(i, j) = ev2(P.FLL, x(i), x(j));
    }
  Vec bKL(Nk), bLK(Nk), Ld(Nk), gK(Nk), gL(Nk), e(Nk);
  Mat DK(Nk, nw), DL(Nk, nw), r(Nk, nw);
  for (int i = 0; i < Nk; ++i) {
    bKL(i) = ev1(P.bKL, x(i));
    bLK(i) = ev1(P.bLK, x(i));
    Ld(i) = ev1(P.Ldiag, x(i));
    gK(i) = ev1(P.gK, x(i));
    gL(i) = ev1(P.gL, x(i));
    e(i) = ev1(P.e, x(i));
    DK.row(i) = evr(P.DK, x(i), nw);
    DL.row(i) = evr(P.DL, x(i), nw);
    r.row(i) = evr(P.r, x(i), nw);
  }
  const RowVec cL = P.cL.size() ? P.cL : RowVec::Zero(nw);
  const RowVec cK = P.cK.size() ? P.cK : RowVec::Zero(nw);
  const Mat E = expm_phi1(P.Aw * h).first;

  GoursatSolution S;
  S.x = x;
  S.K = Mat::Zero(Nk, Nk);
  S.L = Mat::Zero(Nk, Nk);
  S.w = Mat::Zero(Nk, nw);
  Mat RK(Nk, Nk), RL(Nk, Nk);
  Mat extra = P.extra.size() ? P.extra : Mat::Zero(Nk, nw);

  bool decreased = false;
  int nondecreasing = 0;
  double prev = std::numeric_limits<double>::infinity();
  for (int it = 1; it <= M_iter; ++it) {
    const Mat& K = S.K;
    const Mat& L = S.L;
    // Right-hand sides of the transport equations.
    RK.setZero();
    RL.setZero();
    for (int i = 0; i < Nk; ++i) {
      for (int j = 0; j <= i; ++j) {
        double sK = 0, sL = 0;
        if (i > j) {
          for (int m = j; m <= i; ++m) {
            const double wm = (m == j || m == i) ? 0.5 * h : h;
            sK += wm * (FKK(m, j) * K(i, m) + FKL(m, j) * L(i, m));
            sL += wm * (FLK(m, j) * K(i, m) + FLL(m, j) * L(i, m));
          }
        }
        RK(i, j) = aK(i, j) + sK + bKL(j) * L(i, j);
        RL(i, j) = aL(i, j) + sL + bLK(j) * K(i, j);
      }
    }
    Mat Ln = Mat::Zero(Nk, Nk), Kn = Mat::Zero(Nk, Nk), wn = Mat::Zero(Nk, nw);
    // L along the characteristics dx = 1, dy = -theta, traced back to the diagonal.
    Vec diagRL(Nk);
    for (int m = 0; m < Nk; ++m) diagRL(m) = RL(m, m);
    for (int i = 0; i < Nk; ++i) {
      Ln(i, i) = Ld(i);
      for (int j = 0; j < i; ++j) {
        const double tau = (x(i) - x(j)) / (1.0 + th);
        const double foot = (x(j) + th * x(i)) / (1.0 + th);
        const int kmax = static_cast<int>(std::floor(tau / h + 1e-12));
        auto val = [&](int q) {
          const int m = i - q;
          const double yy = x(j) + th * q * h;
          const double pos = yy / h;
          int lo = std::min(static_cast<int>(std::floor(pos)), m - 1);
          lo = std::max(lo, 0);
          const double fr = pos - lo;
          return (1 - fr) * RL(m, lo) + fr * RL(m, std::min(lo + 1, m));
        };
        double acc = 0.0;
        double prevv = val(0);
        for (int q = 1; q <= kmax; ++q) {
          const double v = val(q);
          acc += 0.5 * h * (prevv + v);
          prevv = v;
        }
        const double rem = tau - kmax * h;
        if (rem > 1e-14) acc += 0.5 * rem * (prevv + interp_uniform(diagRL, foot));
        Ln(i, j) = interp_uniform(Ld, foot) + acc;
      }
    }
    // w by the exponential trapezoid rule.
    Mat F(Nk, nw);
    for (int i = 0; i < Nk; ++i) {
      RowVec f = r.row(i) + extra.row(i) + cL * L(i, 0) + cK * K(i, 0);
      for (int m = 0; m <= i; ++m) {
        const double wm = (i == 0) ? 0.0 : ((m == 0 || m == i) ? 0.5 * h : h);
        f += wm * (K(i, m) * DK.row(m) + L(i, m) * DL.row(m));
      }
      F.row(i) = f;
    }
    wn.row(0) = P.w0;
    for (int i = 0; i + 1 < Nk; ++i) wn.row(i + 1) = (wn.row(i) + 0.5 * h * F.row(i)) * E + 0.5 * h * F.row(i + 1);
    // K on the boundary y = 0, then along the diagonals.
    for (int i = 0; i < Nk; ++i) {
      double s = 0.0;
      for (int m = 0; m <= i; ++m) {
        const double wm = (i == 0) ? 0.0 : ((m == 0 || m == i) ? 0.5 * h : h);
        s += wm * (gK(m) * K(i, m) + gL(m) * L(i, m));
      }
      Kn(i, 0) = P.betaL * Ln(i, 0) + wn.row(i).dot(P.bw) + s + e(i);
    }
    for (int i = 1; i < Nk; ++i)
      for (int j = 1; j <= i; ++j) Kn(i, j) = Kn(i - 1, j - 1) + 0.5 * h * (RK(i - 1, j - 1) + RK(i, j));

    const double term = std::max({(Kn - K).cwiseAbs().maxCoeff(), (Ln - L).cwiseAbs().maxCoeff(),
                                  (wn - S.w).cwiseAbs().maxCoeff()});
    S.K = std::move(Kn);
    S.L = std::move(Ln);
    S.w = std::move(wn);
    if (update) extra = update(S.K, S.L);
    S.term_norms.push_back(term);
    S.iterations = it;
    S.last_term = term;
    if (!std::isfinite(term)) fail(ErrorKind::Synthesis, "successive approximations produced non-finite values");
    const double scale = 1.0 + std::max(S.K.cwiseAbs().maxCoeff(), S.L.cwiseAbs().maxCoeff());
    if (term <= tol * scale) {
      P.extra = extra;
      return S;
    }
    if (term < prev) {
      decreased = true;
      nondecreasing = 0;
    } else if (decreased) {
      if (++nondecreasing >= 5)
        fail(ErrorKind::Synthesis, "successive approximations diverge: term norm did not decrease for 5 iterations (" +
                                       std::to_string(term) + ")");
    }
    prev = term;
  }
  fail(ErrorKind::Synthesis, "successive approximations did not reach tolerance within M_iter=" +
                                 std::to_string(M_iter) + " terms (last term " + std::to_string(S.last_term) + ")");
}

GoursatResidual goursat_residual(const GoursatProblem& P, const GoursatSolution& S) {
  GoursatResidual R;
  const int Nk = static_cast<int>(S.x.size());
  const int N = Nk - 1;
  const int nw = P.nw();
  const double h = 1.0 / N;
  const Vec& x = S.x;
  const Mat& K = S.K;
  const Mat& L = S.L;
  double sK = 0, sL = 0;
  int cnt = 0;
  for (int i = 1; i < N; ++i)
    for (int j = 1; j < i; ++j) {
      const double Kx = (K(i + 1, j) - K(i - 1, j)) / (2 * h), Ky = (K(i, j + 1) - K(i, j - 1)) / (2 * h);
      const double Lx = (L(i + 1, j) - L(i - 1, j)) / (2 * h), Ly = (L(i, j + 1) - L(i, j - 1)) / (2 * h);
      double iK = 0, iL = 0;
      for (int m = j; m <= i; ++m) {
        const double wm = (m == j || m == i) ? 0.5 * h : h;
        iK += wm * (ev2(P.FKK, x(m), x(j)) * K(i, m) + ev2(P.FKL, x(m), x(j)) * L(i, m));
        iL += wm * (ev2(P.FLK, x(m), x(j)) * K(i, m) + ev2(P.FLL, x(m), x(j)) * L(i, m));
      }
      const double rK = Kx + Ky - ev2(P.aK, x(i), x(j)) - iK - ev1(P.bKL, x(j)) * L(i, j);
      const double rL = Lx - P.theta * Ly - ev2(P.aL, x(i), x(j)) - iL - ev1(P.bLK, x(j)) * K(i, j);
      sK += rK * rK;
      sL += rL * rL;
      ++cnt;
    }
  R.pde_K = cnt ? std::sqrt(sK / cnt) : 0.0;
  R.pde_L = cnt ? std::sqrt(sL / cnt) : 0.0;
  double so = 0;
  int co = 0;
  for (int i = 0; i < Nk; ++i) {
    R.diag_L = std::max(R.diag_L, std::abs(L(i, i) - ev1(P.Ldiag, x(i))));
    double s = 0.0;
    RowVec iD = RowVec::Zero(nw);
    for (int m = 0; m <= i; ++m) {
      const double wm = (i == 0) ? 0.0 : ((m == 0 || m == i) ? 0.5 * h : h);
      s += wm * (ev1(P.gK, x(m)) * K(i, m) + ev1(P.gL, x(m)) * L(i, m));
      iD += wm * (K(i, m) * evr(P.DK, x(m), nw) + L(i, m) * evr(P.DL, x(m), nw));
    }
    const double b = K(i, 0) - P.betaL * L(i, 0) - S.w.row(i).dot(P.bw) - s - ev1(P.e, x(i));
    R.bnd_K = std::max(R.bnd_K, std::abs(b));
    if (i > 0 && i < N) {
      const RowVec wp = (S.w.row(i + 1) - S.w.row(i - 1)) / (2 * h);
      RowVec rhs = S.w.row(i) * P.Aw + iD + evr(P.r, x(i), nw) + extra_at(P, x(i));
      if (P.cL.size()) rhs += P.cL * L(i, 0);
      if (P.cK.size()) rhs += P.cK * K(i, 0);
      so += (wp - rhs).squaredNorm();
      ++co;
    }
  }
  R.ode = co ? std::sqrt(so / co) : 0.0;
  R.w0 = (S.w.row(0) - P.w0).cwiseAbs().maxCoeff();
  return R;
}

GoursatResidual goursat_series_residual(const GoursatProblem& P, const SeriesRep& Rp, int samples) {
  GoursatResidual R;
  const int nw = P.nw();
  std::mt19937_64 rng(12345);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  Quad quad(24);
  const double d = 1e-5;
  double sK = 0, sL = 0, so = 0;
  for (int s = 0; s < samples; ++s) {
    const double x = 0.02 + 0.96 * U(rng), y = x * (0.02 + 0.96 * U(rng));
    const double Kx = (Rp.K(x + d, y) - Rp.K(x - d, y)) / (2 * d), Ky = (Rp.K(x, y + d) - Rp.K(x, y - d)) / (2 * d);
    const double Lx = (Rp.L(x + d, y) - Rp.L(x - d, y)) / (2 * d), Ly = (Rp.L(x, y + d) - Rp.L(x, y - d)) / (2 * d);
    double iK = 0, iL = 0;
    quad.each(y, x, [&](double z, double w) {
      const double kz = Rp.K(x, z), lz = Rp.L(x, z);
      iK += w * (ev2(P.FKK, z, y) * kz + ev2(P.FKL, z, y) * lz);
      iL += w * (ev2(P.FLK, z, y) * kz + ev2(P.FLL, z, y) * lz);
    });
    const double k = Rp.K(x, y), l = Rp.L(x, y);
    const double rK = Kx + Ky - ev2(P.aK, x, y) - iK - ev1(P.bKL, y) * l;
    const double rL = Lx - P.theta * Ly - ev2(P.aL, x, y) - iL - ev1(P.bLK, y) * k;
    sK += rK * rK;
    sL += rL * rL;
    R.diag_L = std::max(R.diag_L, std::abs(Rp.L(x, x) - ev1(P.Ldiag, x)));
    double ib = 0;
    RowVec iD = RowVec::Zero(nw);
    quad.each(0.0, x, [&](double yy, double w) {
      const double kk = Rp.K(x, yy), ll = Rp.L(x, yy);
      ib += w * (ev1(P.gK, yy) * kk + ev1(P.gL, yy) * ll);
      iD += w * (kk * evr(P.DK, yy, nw) + ll * evr(P.DL, yy, nw));
    });
    const RowVec wx = Rp.w(x);
    R.bnd_K = std::max(R.bnd_K, std::abs(Rp.K(x, 0) - P.betaL * Rp.L(x, 0) - wx.dot(P.bw) - ib - ev1(P.e, x)));
    const RowVec wp = (Rp.w(x + d) - Rp.w(x - d)) / (2 * d);
    RowVec rhs = wx * P.Aw + iD + evr(P.r, x, nw) + extra_at(P, x);
    if (P.cL.size()) rhs += P.cL * Rp.L(x, 0);
    if (P.cK.size()) rhs += P.cK * Rp.K(x, 0);
    so += (wp - rhs).squaredNorm();
  }
  R.pde_K = std::sqrt(sK / samples);
  R.pde_L = std::sqrt(sL / samples);
  R.ode = std::sqrt(so / samples);
  R.w0 = (Rp.w(0.0) - P.w0).cwiseAbs().maxCoeff();
  return R;
}

}  // namespace bladectl
