#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <utility>
#include <vector>

#include "hypo/error.hpp"
#include "hypo/group.hpp"
#include "hypo/numeric.hpp"
#include "hypo/quadrature.hpp"

namespace hypo {

/// Piecewise-constant map t -> c(t) into symmetric d0 x d0 matrices with
/// spectrum in [1/mu, mu]. values[0] holds on (-inf, breakpoints[0]),
/// values[k] on [breakpoints[k-1], breakpoints[k]) and the last value on
/// [breakpoints.back(), inf).
class CovarianceProfile {
 public:
  static constexpr double kSymmetryTolerance = 1e-14;

  CovarianceProfile(std::vector<double> breakpoints, std::vector<Mat> values, double mu)
      : breakpoints_(std::move(breakpoints)), values_(std::move(values)), mu_(mu) {
    require(mu_ >= 1.0, ErrorCode::InvalidProfile, "mu must be >= 1");
    require(values_.size() == breakpoints_.size() + 1, ErrorCode::InvalidProfile,
            "need one value per interval (breakpoints + 1)");
    for (std::size_t i = 1; i < breakpoints_.size(); ++i) {
      require(breakpoints_[i] > breakpoints_[i - 1], ErrorCode::InvalidProfile,
              "breakpoints must be strictly increasing");
    }
    for (double b : breakpoints_) {
      require(std::isfinite(b), ErrorCode::InvalidProfile, "breakpoints must be finite");
    }
    const Eigen::Index d0 = values_.front().rows();
    require(d0 > 0, ErrorCode::InvalidProfile, "empty covariance value");
    for (const Mat& c : values_) {
      require(c.rows() == d0 && c.cols() == d0, ErrorCode::InvalidProfile,
              "covariance values must share one square shape");
      require((c - c.transpose()).cwiseAbs().maxCoeff() <= kSymmetryTolerance,
              ErrorCode::InvalidProfile, "covariance value is not symmetric");
      Eigen::SelfAdjointEigenSolver<Mat> eig(c);
      const double slack = 1e-12 * mu_;
      require(eig.eigenvalues().minCoeff() >= 1.0 / mu_ - slack &&
                  eig.eigenvalues().maxCoeff() <= mu_ + slack,
              ErrorCode::InvalidProfile, "covariance eigenvalues outside [1/mu, mu]");
    }
  }

  static CovarianceProfile constant(const Mat& c, double mu) { return {{}, {c}, mu}; }

  static CovarianceProfile identity(int d0) { return constant(Mat::Identity(d0, d0), 1.0); }

  int dim() const { return static_cast<int>(values_.front().rows()); }
  double mu() const { return mu_; }
  const std::vector<double>& breakpoints() const { return breakpoints_; }
  const std::vector<Mat>& values() const { return values_; }

  std::size_t interval_index(double t) const {
    return static_cast<std::size_t>(
        std::upper_bound(breakpoints_.begin(), breakpoints_.end(), t) - breakpoints_.begin());
  }

  const Mat& at(double t) const { return values_[interval_index(t)]; }

  bool is_breakpoint(double t) const {
    return std::binary_search(breakpoints_.begin(), breakpoints_.end(), t);
  }

  /// c_1(tau) = c(u + tau).
  CovarianceProfile shifted(double u) const {
    std::vector<double> bp = breakpoints_;
    for (double& b : bp) b -= u;
    return {bp, values_, mu_};
  }

  /// c_2(tau) = c(lambda^2 tau).
  CovarianceProfile time_scaled(double lambda) const {
    require(lambda > 0.0, ErrorCode::NonPositiveLambda, "lambda must be positive");
    std::vector<double> bp = breakpoints_;
    for (double& b : bp) b /= lambda * lambda;
    return {bp, values_, mu_};
  }

  /// Constant pieces (u0, u1, value) covering [s, t], in time order.
  struct Piece {
    double begin;
    double end;
    const Mat* value;
  };

  std::vector<Piece> pieces(double s, double t) const {
    std::vector<Piece> out;
    if (!(t > s)) return out;
    double cursor = s;
    std::size_t idx = interval_index(s);
    while (cursor < t) {
      const double next = idx < breakpoints_.size() ? std::min(breakpoints_[idx], t) : t;
      if (next > cursor) out.push_back({cursor, next, &values_[idx]});
      cursor = next;
      ++idx;
    }
    return out;
  }

 private:
  std::vector<double> breakpoints_;
  std::vector<Mat> values_;
  double mu_;
};

/// Factorized covariance C(s,t) together with everything a density or
/// derivative evaluation at the time pair (s,t) needs.
///
/// C is factored after the dilation rescaling C = D Ct D with
/// D = delta_{sqrt(t-s)}; Ct stays between Chat(1)/mu and mu Chat(1), so the
/// pivot check only fires when the entries themselves are unusable.
struct TimeSlice {
  static constexpr double kPivotRatioLimit = 1e14;

  double s = 0.0;
  double t = 0.0;
  Mat expm;        // e^{(t-s)B}
  Mat covariance;  // C(s,t)
  Mat chol;        // lower Cholesky factor of C
  Mat cov_inv;     // C^{-1}
  double log_norm = 0.0;  // -(d/2) log(2 pi) - (1/2) log det C

  double gap() const { return t - s; }
};

class TransitionKernel {
 public:
  TransitionKernel(StructuralMatrix sm, CovarianceProfile profile)
      : sm_(std::move(sm)), profile_(std::move(profile)) {
    require(profile_.dim() == sm_.diffusive_dim(), ErrorCode::DimensionMismatch,
            "profile dimension must equal d_0");
  }

  const StructuralMatrix& structure() const { return sm_; }
  const CovarianceProfile& profile() const { return profile_; }
  int dim() const { return sm_.dim(); }

  /// C_{c,B}(s,t) by exact per-piece polynomial integration; zero when t <= s.
  Mat covariance(double s, double t) const {
    const int d = sm_.dim();
    const int d0 = sm_.diffusive_dim();
    const int n = sm_.depth();
    Mat out = Mat::Zero(d, d);
    if (!(t > s)) return out;
    // e^{tau B} A e^{tau B^T} = sum_{j,k} tau^{j+k} / (j! k!) B^j A (B^k)^T, and only
    // the first d0 columns of each power meet A = diag(c, 0).
    std::vector<double> fact(static_cast<std::size_t>(n) + 1, 1.0);
    for (int k = 1; k <= n; ++k) fact[static_cast<std::size_t>(k)] = fact[static_cast<std::size_t>(k - 1)] * k;
    for (const auto& piece : profile_.pieces(s, t)) {
      const double tau_lo = t - piece.end;
      const double tau_hi = t - piece.begin;
      for (int j = 0; j <= n; ++j) {
        const Mat left = sm_.power(j).leftCols(d0) * (*piece.value);
        for (int k = 0; k <= n; ++k) {
          const int m = j + k + 1;
          const double integral = (std::pow(tau_hi, m) - std::pow(tau_lo, m)) / m;
          const double coeff = integral / (fact[static_cast<std::size_t>(j)] * fact[static_cast<std::size_t>(k)]);
          out.noalias() += coeff * left * sm_.power(k).leftCols(d0).transpose();
        }
      }
    }
    return 0.5 * (out + out.transpose());
  }

  TimeSlice slice(double s, double t) const {
    require(t > s, ErrorCode::DegenerateInterval, "time slice needs t > s");
    TimeSlice out;
    out.s = s;
    out.t = t;
    const double gap = t - s;
    out.expm = matrix_exp(sm_, gap);
    out.covariance = covariance(s, t);

    const Vec scale = dilation_diagonal(sm_, std::sqrt(gap));
    const Vec inv_scale = scale.cwiseInverse();
    const Mat scaled = inv_scale.asDiagonal() * out.covariance * inv_scale.asDiagonal();
    Eigen::LLT<Mat> llt(scaled);
    require(llt.info() == Eigen::Success && scale.allFinite() && inv_scale.allFinite(),
            ErrorCode::IllConditionedCovariance, "Cholesky of the covariance failed");
    const Mat lt = llt.matrixL();
    const Vec pivots = lt.diagonal().cwiseAbs2();
    require(pivots.minCoeff() > 0.0 && pivots.maxCoeff() / pivots.minCoeff() <= TimeSlice::kPivotRatioLimit,
            ErrorCode::IllConditionedCovariance, "covariance pivot ratio exceeds 1e14");

    out.chol = scale.asDiagonal() * lt;
    const Mat scaled_inv = llt.solve(Mat::Identity(sm_.dim(), sm_.dim()));
    out.cov_inv = inv_scale.asDiagonal() * scaled_inv * inv_scale.asDiagonal();
    out.cov_inv = 0.5 * (out.cov_inv + out.cov_inv.transpose());
    double log_det = 0.0;
    for (Eigen::Index i = 0; i < lt.rows(); ++i) log_det += 2.0 * std::log(lt(i, i));
    log_det += 2.0 * scale.array().log().sum();
    out.log_norm = -0.5 * sm_.dim() * std::log(2.0 * std::numbers::pi) - 0.5 * log_det;
    return out;
  }

 private:
  StructuralMatrix sm_;
  CovarianceProfile profile_;
};

inline Mat covariance(const TransitionKernel& k, double s, double t) { return k.covariance(s, t); }

/// Chat(tau): the covariance with c = I on [0, tau].
inline Mat reference_covariance(const StructuralMatrix& sm, double tau) {
  require(tau > 0.0, ErrorCode::NonPositiveTau, "tau must be positive");
  TransitionKernel k(sm, CovarianceProfile::identity(sm.diffusive_dim()));
  return k.covariance(0.0, tau);
}

/// Residual y - e^{(t-s)B} x.
inline Vec innovation(const TimeSlice& ts, const Vec& x, const Vec& y) { return y - ts.expm * x; }

inline double log_density(const TimeSlice& ts, const Vec& x, const Vec& y) {
  const Vec r = innovation(ts, x, y);
  const Vec w = ts.chol.triangularView<Eigen::Lower>().solve(r);
  return ts.log_norm - 0.5 * w.squaredNorm();
}

/// p_{c,B}(s,x; t,y). Returns 0 (or -inf when log_scale) for t <= s.
inline double density(const TransitionKernel& k, const GroupPoint& p, const GroupPoint& q,
                      bool log_scale = false) {
  if (!(q.s > p.s)) return log_scale ? -std::numeric_limits<double>::infinity() : 0.0;
  const double lp = log_density(k.slice(p.s, q.s), p.x, q.x);
  return log_scale ? lp : std::exp(lp);
}

/// Analytic first and second derivative data of p at (s,x; t,y).
struct DerivativeBundle {
  double density = 0.0;
  Vec f0, f1;
  Mat g00, g01, g10, g11;
  std::optional<double> h0;  // d/dt log p, needs c continuous at t
  std::optional<double> h1;  // d/ds log p, needs c continuous at s

  Vec grad_x() const { return f1 * density; }
  Vec grad_y() const { return -f0 * density; }
  Mat hessian_x() const { return (f1 * f1.transpose() - g11) * density; }
  Mat hessian_y() const { return (f0 * f0.transpose() - g00) * density; }

  double require_h0() const {
    require(h0.has_value(), ErrorCode::BreakpointEvaluation, "h0 requested at a profile breakpoint");
    return *h0;
  }
  double require_h1() const {
    require(h1.has_value(), ErrorCode::BreakpointEvaluation, "h1 requested at a profile breakpoint");
    return *h1;
  }
};

inline DerivativeBundle derivative_bundle(const TransitionKernel& k, const TimeSlice& ts,
                                          const Vec& x, const Vec& y) {
  const auto& sm = k.structure();
  const int d0 = sm.diffusive_dim();
  DerivativeBundle out;
  out.f0 = ts.cov_inv * innovation(ts, x, y);
  out.f1 = ts.expm.transpose() * out.f0;
  out.g00 = ts.cov_inv;
  out.g01 = ts.cov_inv * ts.expm;
  out.g10 = ts.expm.transpose() * ts.cov_inv;
  out.g11 = out.g10 * ts.expm;
  out.density = std::exp(log_density(ts, x, y));

  const auto& profile = k.profile();
  if (!profile.is_breakpoint(ts.t)) {
    const Mat& c = profile.at(ts.t);
    const Mat q = out.f0.head(d0) * out.f0.head(d0).transpose() - out.g00.topLeftCorner(d0, d0);
    out.h0 = 0.5 * (c.cwiseProduct(q)).sum() + (sm.matrix() * y).dot(out.f0);
  }
  if (!profile.is_breakpoint(ts.s)) {
    const Mat& c = profile.at(ts.s);
    const Mat q = out.g11.topLeftCorner(d0, d0) - out.f1.head(d0) * out.f1.head(d0).transpose();
    out.h1 = 0.5 * (c.cwiseProduct(q)).sum() - (sm.matrix() * x).dot(out.f1);
  }
  return out;
}

inline DerivativeBundle derivative_bundle(const TransitionKernel& k, const GroupPoint& p,
                                          const GroupPoint& q) {
  require(q.s > p.s, ErrorCode::DegenerateInterval, "derivatives need t > s");
  return derivative_bundle(k, k.slice(p.s, q.s), p.x, q.x);
}

/// d_s p + (1/2) sum c^{ij}(s) d_ij p + <Bx, D_x p>, evaluated analytically.
inline double backward_residual(const TransitionKernel& k, const GroupPoint& p, const GroupPoint& q) {
  const DerivativeBundle bundle = derivative_bundle(k, p, q);
  const int d0 = k.structure().diffusive_dim();
  const Mat& c = k.profile().at(p.s);
  const double ds = bundle.require_h1() * bundle.density;
  const Mat hess = bundle.hessian_x();
  const double diffusion = 0.5 * c.cwiseProduct(hess.topLeftCorner(d0, d0)).sum();
  const double drift = (k.structure().matrix() * p.x).dot(bundle.grad_x());
  return ds + diffusion + drift;
}

/// Constants of the Gaussian domination bound
///   p(s,x;t,y) <= N exp{ N |x||y| - eps (|x|^2 + |y|^2) },  t - s in [a, b].
struct GaussianEnvelope {
  double a = 0.0;
  double b = 0.0;
  double mu = 1.0;
  double lambda1 = 0.0;    // smallest eigenvalue of Chat^{-1}(b)
  double delta = 0.0;      // inf of |e^{sB} x| over s in [a,b], |x| = 1
  double cross = 0.0;      // N_1 = mu ||Chat^{-1}(a)|| e^{b ||B||}
  double prefactor = 0.0;  // (mu / 2 pi)^{d/2} det Chat(a)^{-1/2}
  double epsilon = 0.0;    // lambda1 (1 ^ delta^2) / (2 mu)

  double constant() const { return std::max(prefactor, cross); }

  double bound(double x_norm, double y_norm) const {
    const double n = constant();
    return n * std::exp(n * x_norm * y_norm - epsilon * (x_norm * x_norm + y_norm * y_norm));
  }
};

inline GaussianEnvelope gaussian_envelope(const StructuralMatrix& sm, double mu, double a, double b) {
  require(a > 0.0 && b >= a, ErrorCode::InvalidArgument, "envelope needs 0 < a <= b");
  GaussianEnvelope env;
  env.a = a;
  env.b = b;
  env.mu = mu;
  const Mat chat_a = reference_covariance(sm, a);
  const Mat chat_b = reference_covariance(sm, b);
  Eigen::SelfAdjointEigenSolver<Mat> eig_b(chat_b);
  env.lambda1 = 1.0 / eig_b.eigenvalues().maxCoeff();
  Eigen::SelfAdjointEigenSolver<Mat> eig_a(chat_a);
  const double inv_norm_a = 1.0 / eig_a.eigenvalues().minCoeff();

  // sigma_min(e^{sB}) over [a,b]: coarse scan, then golden-section refinement.
  auto sigma_min = [&](double s) { return smallest_singular_value(matrix_exp(sm, s)); };
  constexpr int kScan = 200;
  double best_s = a;
  double best = sigma_min(a);
  for (int i = 1; i <= kScan; ++i) {
    const double s = a + (b - a) * i / kScan;
    const double v = sigma_min(s);
    if (v < best) {
      best = v;
      best_s = s;
    }
  }
  double lo = std::max(a, best_s - (b - a) / kScan);
  double hi = std::min(b, best_s + (b - a) / kScan);
  const double golden = 0.5 * (std::sqrt(5.0) - 1.0);
  for (int it = 0; it < 60 && hi - lo > 1e-12; ++it) {
    const double m1 = hi - golden * (hi - lo);
    const double m2 = lo + golden * (hi - lo);
    if (sigma_min(m1) < sigma_min(m2)) {
      hi = m2;
    } else {
      lo = m1;
    }
  }
  env.delta = std::min(best, sigma_min(0.5 * (lo + hi))) * (1.0 - 1e-9);

  const double b_norm = operator_norm(sm.matrix());
  env.cross = mu * inv_norm_a * std::exp(b * b_norm);
  const int d = sm.dim();
  env.prefactor = std::pow(mu / (2.0 * std::numbers::pi), 0.5 * d) / std::sqrt(chat_a.determinant());
  env.epsilon = env.lambda1 * std::min(1.0, env.delta * env.delta) / (2.0 * mu);
  return env;
}

/// Whitened-box radius R such that the standard Gaussian mass outside
/// [-R, R]^d, inflated by a quadratic polynomial weight, is below `tail`.
inline double whitened_radius_for_tail(int d, double tail) {
  double r = 1.0;
  while (d * (1.0 + r * r) * std::erfc(r / std::numbers::sqrt2) > tail) r += 0.25;
  return r;
}

/// Integrals of d_ij p over x (y fixed) and over y (x fixed).
struct CancellationResult {
  double over_x = 0.0;
  double over_y = 0.0;
  double tail_bound = 0.0;  // Gaussian mass bound for the neglected region
};

/// Tensor Gauss-Legendre quadrature of d_ij p in whitened coordinates: the
/// box is [-R, R]^d in units of the Gaussian's own standard deviations.
inline CancellationResult cancellation_check(const TransitionKernel& k, int i, int j, const GroupPoint& p,
                                             const GroupPoint& q, double box_radius, int quad_order) {
  require(q.s > p.s, ErrorCode::DegenerateInterval, "cancellation check needs t > s");
  const int d = k.dim();
  require(i >= 0 && j >= 0 && i < d && j < d, ErrorCode::InvalidArgument, "index out of range");
  const TimeSlice ts = k.slice(p.s, q.s);
  CancellationResult out;

  auto second = [&](const Vec& x, const Vec& y) {
    const DerivativeBundle bundle = derivative_bundle(k, ts, x, y);
    return (bundle.f1(i) * bundle.f1(j) - bundle.g11(i, j)) * bundle.density;
  };

  // As a function of x, p is Gaussian with mean e^{-(t-s)B} y and precision g11.
  const Mat expm_inv = matrix_exp(k.structure(), -ts.gap());
  const Mat x_cov = expm_inv * ts.covariance * expm_inv.transpose();
  const Mat x_frame = Eigen::LLT<Mat>(0.5 * (x_cov + x_cov.transpose())).matrixL();
  out.over_x = integrate_frame(expm_inv * q.x, x_frame, box_radius, quad_order,
                               [&](const Vec& x) { return second(x, q.x); });
  out.over_y = integrate_frame(ts.expm * p.x, ts.chol, box_radius, quad_order,
                               [&](const Vec& y) { return second(p.x, y); });
  out.tail_bound = d * (1.0 + box_radius * box_radius) * std::erfc(box_radius / std::numbers::sqrt2);
  return out;
}

}  // namespace hypo
