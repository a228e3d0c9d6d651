#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "hypo/error.hpp"
#include "hypo/group.hpp"
#include "hypo/numeric.hpp"
#include "hypo/rng.hpp"
#include "hypo/simulate.hpp"

namespace hypo {

// ---------------------------------------------------------------------------
// Z = X + Y reduction

/// Turns the field of dX = b_X dt + sigma dW, dY = (X + Y) dt (X, Y in R^k)
/// into the field of (Z, Y) = (X + Y, Y):
///   dZ = (b_X(t, z - y, y) + z) dt + sigma(t, z - y, y) dW,   dY = z dt.
/// The linear part of the result is the two-block shift [[0, 0], [I, 0]].
inline CoefficientField zy_reduce(const CoefficientField& field, const std::vector<Vec>& shape_probes = {}) {
  const int k = field.d0;
  require(k >= 1 && field.d == 2 * k, ErrorCode::ShapeMismatch, "expected a state (X, Y) with X and Y in R^d0");
  std::vector<Vec> probes = shape_probes;
  if (probes.empty()) {
    Stream stream(0x2b3aULL, 0);
    std::normal_distribution<double> normal;
    for (int i = 0; i < 8; ++i) {
      Vec v(2 * k);
      for (int j = 0; j < 2 * k; ++j) v(j) = normal(stream);
      probes.push_back(v);
    }
  }
  for (const Vec& v : probes) {
    require(v.size() == 2 * k, ErrorCode::ShapeMismatch, "probe dimension");
    const Vec b = field.drift(0.5, v);
    const Vec expected = v.head(k) + v.tail(k);
    require((b.tail(k) - expected).norm() <= 1e-12 * (1.0 + expected.norm()), ErrorCode::ShapeMismatch,
            "Y drift is not X + Y");
  }
  CoefficientField out;
  out.d0 = k;
  out.d = 2 * k;
  auto unmap = [k](const Vec& v) {
    Vec w = v;
    w.head(k) = v.head(k) - v.tail(k);
    return w;
  };
  const auto a = field.a;
  const auto b = field.b;
  out.a = [a, unmap](double t, const Vec& v) { return a(t, unmap(v)); };
  out.b = [b, unmap, k](double t, const Vec& v) {
    Vec r(2 * k);
    r.head(k) = b(t, unmap(v)).head(k) + v.head(k);
    r.tail(k) = v.head(k);
    return r;
  };
  // |(z - y, y)|^2 <= 3 |(z, y)|^2 and |b_X + z|^2 + |z|^2 <= 2|b_X|^2 + 3|z|^2.
  out.growth_constant = 6.0 * field.growth_constant + 3.0;
  out.structure = structure_from_blocks({k, k}, {Mat::Identity(k, k)});
  return out;
}

/// Applies (x, y) -> (x + y, y) to every state.
inline Ensemble zy_map(const Ensemble& ens) {
  const int k = ens.dim() / 2;
  require(ens.dim() == 2 * k, ErrorCode::ShapeMismatch, "ensemble dimension must be even");
  Ensemble out(ens.dim(), ens.n_paths(), ens.times(), ens.master_seed());
  for (std::size_t p = 0; p < ens.n_paths(); ++p) {
    for (std::size_t t = 0; t < ens.n_times(); ++t) {
      const auto v = ens.state(p, t);
      auto w = out.state(p, t);
      w = v;
      w.head(k) += v.tail(k);
    }
  }
  return out;
}

/// max over paths and steps of |dx'' - h b''(t_k, x_k)| / h on the
/// degenerate components: zero when the ensemble follows the field's
/// drift on those components with left-point steps.
inline double drift_residual(const Ensemble& ens, const CoefficientField& field) {
  require(ens.dim() == field.d, ErrorCode::DimensionMismatch, "field and ensemble dimensions differ");
  const int tail = field.d - field.d0;
  double worst = 0.0;
  const auto& times = ens.times();
  for (std::size_t p = 0; p < ens.n_paths(); ++p) {
    for (std::size_t k = 0; k + 1 < ens.n_times(); ++k) {
      const double h = times[k + 1] - times[k];
      const Vec x = ens.state(p, k);
      const Vec dx = ens.state(p, k + 1) - ens.state(p, k);
      const Vec r = dx.tail(tail) - h * field.drift(times[k], x).tail(tail);
      worst = std::max(worst, r.norm() / h);
    }
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Full-rank map f(s, x', x'') = (s, b''(s, x), x'')

/// b'': R x R^{d0 + d1} -> R^{d1} with optional analytic derivatives.
struct BSecond {
  int d0 = 0;
  int d1 = 0;
  std::function<Vec(double, const Vec&)> value;
  /// d/ds, d1 components.
  std::function<Vec(double, const Vec&)> ds;
  /// d1 x (d0 + d1) spatial Jacobian.
  std::function<Mat(double, const Vec&)> dx;
  /// d0 x d0 Hessian in x' of component i.
  std::function<Mat(double, const Vec&, int)> hessian_xprime;
  std::string name = "custom";
  double kappa = 0.0;

  int dim() const { return d0 + d1; }

  Vec operator()(double s, const Vec& x) const {
    Vec v = value(s, x);
    require(v.size() == d1, ErrorCode::DimensionMismatch, "b'' must have d1 components");
    return v;
  }

  /// Central differences with step 1e-6 when no analytic derivative is given.
  Vec time_derivative(double s, const Vec& x) const {
    if (ds) return ds(s, x);
    constexpr double h = 1e-6;
    return ((*this)(s + h, x) - (*this)(s - h, x)) / (2 * h);
  }

  Mat jacobian(double s, const Vec& x) const {
    if (dx) return dx(s, x);
    return jacobian_fd(s, x);
  }

  Mat jacobian_fd(double s, const Vec& x) const {
    constexpr double h = 1e-6;
    Mat out(d1, dim());
    for (int j = 0; j < dim(); ++j) {
      Vec up = x, down = x;
      up(j) += h;
      down(j) -= h;
      out.col(j) = ((*this)(s, up) - (*this)(s, down)) / (2 * h);
    }
    return out;
  }
};

/// b''(s, x) = A0 s + A1 x' + A2 x'' + kappa (x'^i)^2 in component i. The
/// catalog names are "linear" (kappa = 0) and "quadratic-perturbed".
inline BSecond catalog_bsecond(const std::string& name, const Mat& a0, const Mat& a1, const Mat& a2,
                               double kappa = 0.0) {
  require(name == "linear" || name == "quadratic-perturbed", ErrorCode::InvalidArgument,
          "unknown b'' catalog entry: " + name);
  const int d1 = static_cast<int>(a1.rows());
  const int d0 = static_cast<int>(a1.cols());
  require(d1 <= d0 && a0.rows() == d1 && a0.cols() == 1 && a2.rows() == d1 && a2.cols() == d1,
          ErrorCode::DimensionMismatch, "catalog matrices: A0 d1 x 1, A1 d1 x d0, A2 d1 x d1");
  const double k = name == "linear" ? 0.0 : kappa;
  BSecond b;
  b.d0 = d0;
  b.d1 = d1;
  b.name = name;
  b.kappa = k;
  b.value = [=](double s, const Vec& x) {
    Vec v = a0.col(0) * s + a1 * x.head(d0) + a2 * x.tail(d1);
    for (int i = 0; i < d1; ++i) v(i) += k * x(i) * x(i);
    return v;
  };
  b.ds = [a0](double, const Vec&) { return Vec(a0.col(0)); };
  b.dx = [=](double, const Vec& x) {
    Mat j(d1, d0 + d1);
    j << a1, a2;
    for (int i = 0; i < d1; ++i) j(i, i) += 2 * k * x(i);
    return j;
  };
  b.hessian_xprime = [=](double, const Vec&, int i) {
    Mat h = Mat::Zero(d0, d0);
    h(i, i) = 2 * k;
    return h;
  };
  return b;
}

/// Box of (s, x) where the contraction bound is probed.
struct ProbeRegion {
  double t_lo = 0.0;
  double t_hi = 1.0;
  Vec center;
  double half_width = 1.0;
  int points = 200;
  std::uint64_t seed = 0x70beULL;

  std::vector<GroupPoint> sample(int d) const {
    require(center.size() == 0 || center.size() == d, ErrorCode::DimensionMismatch, "probe center dimension");
    require(t_hi >= t_lo && half_width >= 0.0 && points >= 1, ErrorCode::InvalidArgument, "probe region");
    const Vec c = center.size() == 0 ? Vec(Vec::Zero(d)) : center;
    Stream stream(seed, 0);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    std::vector<GroupPoint> out;
    for (int i = 0; i < points; ++i) {
      GroupPoint p{0.5 * (t_lo + t_hi) + 0.5 * (t_hi - t_lo) * unit(stream), Vec(d)};
      for (int j = 0; j < d; ++j) p.x(j) = c(j) + half_width * unit(stream);
      out.push_back(p);
    }
    return out;
  }
};

class Transform {
 public:
  int d0() const { return b_.d0; }
  int d1() const { return b_.d1; }
  int dim() const { return b_.dim(); }
  const BSecond& bsecond() const { return b_; }
  const Mat& a0() const { return a0_; }
  const Mat& a1() const { return a1_; }
  const Mat& a2() const { return a2_; }
  const ProbeRegion& probe() const { return probe_; }
  bool square() const { return b_.d1 == b_.d0; }

  /// (1 + d) x (1 + d) block matrix [[1, 0, 0], [A0, A1, A2], [0, 0, I]].
  const Mat& ahat() const {
    require(square(), ErrorCode::ShapeMismatch, "Ahat needs d1 = d0; pad the transform first");
    return ahat_;
  }
  const Mat& ahat_inverse() const {
    require(square(), ErrorCode::ShapeMismatch, "Ahat needs d1 = d0; pad the transform first");
    return ahat_inv_;
  }
  /// sup over probe points of ||Df - Ahat|| ||Ahat^{-1}||.
  double contraction() const { return contraction_; }

  Vec stacked(const GroupPoint& p) const {
    Vec v(1 + dim());
    v << p.s, p.x;
    return v;
  }

  /// Df at (s, x), (1 + d) x (1 + d).
  Mat jacobian(const GroupPoint& p) const {
    const int d = dim();
    Mat j = Mat::Zero(1 + d, 1 + d);
    j(0, 0) = 1.0;
    j.block(1, 0, d1(), 1) = b_.time_derivative(p.s, p.x);
    j.block(1, 1, d1(), d) = b_.jacobian(p.s, p.x);
    j.block(1 + d1(), 1 + d0(), d - d1(), d - d0()) = Mat::Identity(d - d1(), d - d0());
    return j;
  }

  friend Transform make_transform(BSecond b, Mat a0, Mat a1, Mat a2, ProbeRegion probe);

 private:
  BSecond b_;
  Mat a0_, a1_, a2_;
  Mat ahat_, ahat_inv_;
  ProbeRegion probe_;
  double contraction_ = 0.0;
};

inline Transform make_transform(BSecond b, Mat a0, Mat a1, Mat a2, ProbeRegion probe = {}) {
  require(b.value != nullptr, ErrorCode::InvalidArgument, "b'' is missing");
  require(b.d0 >= 1 && b.d1 >= 1 && b.d1 <= b.d0, ErrorCode::DimensionMismatch, "need 1 <= d1 <= d0");
  require(a0.rows() == b.d1 && a0.cols() == 1 && a1.rows() == b.d1 && a1.cols() == b.d0 && a2.rows() == b.d1 &&
              a2.cols() == b.d1,
          ErrorCode::DimensionMismatch, "A0 d1 x 1, A1 d1 x d0, A2 d1 x d1");
  const double smin = smallest_singular_value(a1);
  require(smin > 1e-10 * std::max(1.0, operator_norm(a1)), ErrorCode::RankDeficientBlock, "A1 must have rank d1");
  Transform tr;
  tr.b_ = std::move(b);
  tr.a0_ = std::move(a0);
  tr.a1_ = std::move(a1);
  tr.a2_ = std::move(a2);
  tr.probe_ = std::move(probe);
  if (tr.square()) {
    const int d = tr.dim();
    tr.ahat_ = Mat::Zero(1 + d, 1 + d);
    tr.ahat_(0, 0) = 1.0;
    tr.ahat_.block(1, 0, tr.d1(), 1) = tr.a0_;
    tr.ahat_.block(1, 1, tr.d1(), tr.d0()) = tr.a1_;
    tr.ahat_.block(1, 1 + tr.d0(), tr.d1(), tr.d1()) = tr.a2_;
    tr.ahat_.block(1 + tr.d1(), 1 + tr.d0(), tr.d1(), tr.d1()) = Mat::Identity(tr.d1(), tr.d1());
    tr.ahat_inv_ = tr.ahat_.inverse();
    const double inv_norm = operator_norm(tr.ahat_inv_);
    for (const GroupPoint& p : tr.probe_.sample(d)) {
      tr.contraction_ = std::max(tr.contraction_, operator_norm(tr.jacobian(p) - tr.ahat_) * inv_norm);
    }
    require(tr.contraction_ <= 0.5, ErrorCode::InvalidArgument,
            "||Df - Ahat|| ||Ahat^{-1}|| exceeds 1/2 on the probe region");
  }
  return tr;
}

/// (s, x', x'') -> (s, b''(s, x), x'').
inline GroupPoint forward(const Transform& tr, const GroupPoint& p) {
  require(p.x.size() == tr.dim(), ErrorCode::DimensionMismatch, "point dimension");
  require(tr.square(), ErrorCode::ShapeMismatch, "forward needs d1 = d0; pad the transform first");
  GroupPoint out{p.s, Vec(tr.dim())};
  out.x << tr.bsecond()(p.s, p.x), p.x.tail(tr.d1());
  return out;
}

struct Inversion {
  GroupPoint point;
  int iterations = 0;
  std::vector<double> steps;
};

/// Fixed point of phi(v) = Ahat^{-1} target - Ahat^{-1} (f(v) - Ahat v),
/// started at Ahat^{-1} target.
inline Inversion invert_traced(const Transform& tr, const GroupPoint& target, double tol = 1e-12,
                               int max_iter = 100) {
  require(target.x.size() == tr.dim(), ErrorCode::DimensionMismatch, "target dimension");
  const Mat& ahat = tr.ahat();
  const Mat& inv = tr.ahat_inverse();
  const Vec goal = inv * tr.stacked(target);
  Vec v = goal;
  Inversion out;
  for (int it = 1; it <= max_iter; ++it) {
    const GroupPoint p{v(0), v.tail(tr.dim())};
    const Vec next = goal - inv * (tr.stacked(forward(tr, p)) - ahat * v);
    const double step = (next - v).norm();
    v = next;
    out.steps.push_back(step);
    out.iterations = it;
    if (step < tol * (1.0 + v.norm())) {
      out.point = {target.s, v.tail(tr.dim())};
      return out;
    }
  }
  throw Error(ErrorCode::NoConvergence, "contraction did not converge; the bound fails near this target");
}

inline GroupPoint invert(const Transform& tr, const GroupPoint& target, double tol = 1e-12, int max_iter = 100) {
  return invert_traced(tr, target, tol, max_iter).point;
}

/// 4 (||A1||^2 + ||Ahat^{-1}||^2) mu.
inline double mu_hat(const Transform& tr, double mu) {
  return 4.0 * (std::pow(operator_norm(tr.a1()), 2) + std::pow(operator_norm(tr.ahat_inverse()), 2)) * mu;
}

/// a-hat = D_{x'} b'' a D_{x'} b''^T at (s, x).
inline Mat pushed_diffusion(const Transform& tr, const Mat& a, double s, const Vec& x) {
  const Mat jx = tr.bsecond().jacobian(s, x).leftCols(tr.d0());
  return jx * a * jx.transpose();
}

/// b-hat at (s, x): the first d0 components are
///   d_s b''^i + tr(D^2_{x'} b''^i a) / 2 + <D_{x'} b''^i, b'> + <D_{x''} b''^i, b''>,
/// the rest are zero.
inline Vec pushed_drift(const Transform& tr, const Mat& a, const Vec& bprime, double s, const Vec& x) {
  const BSecond& b = tr.bsecond();
  require(b.ds && b.dx && b.hessian_xprime, ErrorCode::MissingDerivatives,
          "pushforward needs analytic d_s b'', D b'' and D^2_{x'} b''");
  const Vec val = b(s, x);
  const Vec dt = b.ds(s, x);
  const Mat jac = b.dx(s, x);
  Vec out = Vec::Zero(tr.dim());
  for (int i = 0; i < tr.d1(); ++i) {
    const Mat h = b.hessian_xprime(s, x, i);
    out(i) = dt(i) + 0.5 * (h.array() * a.array()).sum() + jac.row(i).head(tr.d0()).dot(bprime) +
             jac.row(i).tail(tr.d1()).dot(val);
  }
  return out;
}

/// Field of Y = (b''(t, X), X'') when X has diffusion a and drift (b', b''):
/// diffusion a-hat o f^{-1}, drift b-hat o f^{-1} + B-hat y.
inline CoefficientField pushforward(const Transform& tr, std::function<Mat(double, const Vec&)> a,
                                    std::function<Vec(double, const Vec&)> bprime, double inversion_tol = 1e-12) {
  require(tr.square(), ErrorCode::ShapeMismatch, "pushforward needs d1 = d0; pad the transform first");
  const BSecond& b = tr.bsecond();
  require(b.ds && b.dx && b.hessian_xprime, ErrorCode::MissingDerivatives,
          "pushforward needs analytic d_s b'', D b'' and D^2_{x'} b''");
  const int k = tr.d0();
  CoefficientField out;
  out.d0 = k;
  out.d = 2 * k;
  out.structure = structure_from_blocks({k, k}, {Mat::Identity(k, k)});
  out.a = [tr, a, inversion_tol](double t, const Vec& y) {
    const GroupPoint x = invert(tr, {t, y}, inversion_tol);
    return pushed_diffusion(tr, a(t, x.x), t, x.x);
  };
  out.b = [tr, a, bprime, inversion_tol, k](double t, const Vec& y) {
    const GroupPoint x = invert(tr, {t, y}, inversion_tol);
    Vec drift = pushed_drift(tr, a(t, x.x), bprime(t, x.x), t, x.x);
    drift.tail(k) += y.head(k);
    return drift;
  };
  return out;
}

/// Same, reading a and b' from a field whose drift is (b', b'').
inline CoefficientField pushforward(const Transform& tr, const CoefficientField& field) {
  require(field.d0 == tr.d0() && field.d == tr.dim(), ErrorCode::DimensionMismatch, "field and transform dimensions");
  const int k = tr.d0();
  const auto b = field.b;
  return pushforward(tr, field.a, [b, k](double t, const Vec& x) { return Vec(b(t, x).head(k)); });
}

/// Maps every state through forward.
inline Ensemble forward_map(const Transform& tr, const Ensemble& ens) {
  Ensemble out(ens.dim(), ens.n_paths(), ens.times(), ens.master_seed());
  for (std::size_t p = 0; p < ens.n_paths(); ++p) {
    for (std::size_t t = 0; t < ens.n_times(); ++t) {
      out.state(p, t) = forward(tr, {ens.times()[t], Vec(ens.state(p, t))}).x;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Dimension padding for d1 < d0

/// Lifts a transform with d1 < d0 to R^{2 d0}: A1 gains the extension rows,
/// A0 and A2 are padded with zeros, and the appended b'' components are
/// x' -> (extension rows) x'. Returns the transform unchanged when d1 = d0.
inline Transform pad_dimensions(const Transform& tr, const Mat& extension) {
  const int d0 = tr.d0();
  const int d1 = tr.d1();
  if (d1 == d0) {
    require(extension.size() == 0, ErrorCode::DimensionMismatch, "no extension rows needed when d1 = d0");
    return tr;
  }
  const int extra = d0 - d1;
  require(extension.rows() == extra && extension.cols() == d0, ErrorCode::DimensionMismatch,
          "extension must be (d0 - d1) x d0");
  Mat a1(d0, d0);
  a1 << tr.a1(), extension;
  require(smallest_singular_value(a1) > 1e-10 * std::max(1.0, operator_norm(a1)), ErrorCode::SingularExtension,
          "stacked A1 is singular");
  Mat a0 = Mat::Zero(d0, 1);
  a0.topRows(d1) = tr.a0();
  Mat a2 = Mat::Zero(d0, d0);
  a2.topLeftCorner(d1, d1) = tr.a2();

  const BSecond inner = tr.bsecond();
  const int d = d0 + d1;
  BSecond lifted;
  lifted.d0 = d0;
  lifted.d1 = d0;
  lifted.name = inner.name;
  lifted.kappa = inner.kappa;
  lifted.value = [inner, extension, d, d0](double s, const Vec& x) {
    Vec v(d0);
    v << inner(s, x.head(d)), extension * x.head(d0);
    return v;
  };
  lifted.ds = [inner, d, d0, d1](double s, const Vec& x) {
    Vec v = Vec::Zero(d0);
    v.head(d1) = inner.time_derivative(s, x.head(d));
    return v;
  };
  lifted.dx = [inner, extension, d, d0, d1](double s, const Vec& x) {
    Mat j = Mat::Zero(d0, 2 * d0);
    j.topLeftCorner(d1, d) = inner.jacobian(s, x.head(d));
    j.bottomLeftCorner(d0 - d1, d0) = extension;
    return j;
  };
  if (inner.hessian_xprime) {
    lifted.hessian_xprime = [inner, d, d0, d1](double s, const Vec& x, int i) {
      return i < d1 ? inner.hessian_xprime(s, x.head(d), i) : Mat(Mat::Zero(d0, d0));
    };
  }
  ProbeRegion probe = tr.probe();
  if (probe.center.size() == d) {
    Vec c = Vec::Zero(2 * d0);
    c.head(d) = probe.center;
    probe.center = c;
  } else {
    probe.center = Vec();
  }
  return make_transform(std::move(lifted), a0, a1, a2, probe);
}

/// Field on R^{2 d0} for (X, Z_extra): a and b' read the original state,
/// the original degenerate drift is kept and the appended components have
/// drift (extension rows) x'.
inline CoefficientField pad_field(const CoefficientField& field, const Mat& extension) {
  const int d0 = field.d0;
  const int d = field.d;
  const int extra = static_cast<int>(extension.rows());
  require(extension.cols() == d0 && d + extra == 2 * d0, ErrorCode::DimensionMismatch,
          "extension must be (d0 - d1) x d0");
  CoefficientField out;
  out.d0 = d0;
  out.d = 2 * d0;
  const auto a = field.a;
  const auto b = field.b;
  out.a = [a, d](double t, const Vec& x) { return a(t, x.head(d)); };
  out.b = [b, extension, d, d0](double t, const Vec& x) {
    Vec v(2 * d0);
    v << b(t, x.head(d)), extension * x.head(d0);
    return v;
  };
  out.growth_constant = field.growth_constant + std::pow(operator_norm(extension), 2);
  return out;
}

/// Drops the appended components.
inline Ensemble project_padding(const Ensemble& ens, int d) {
  require(d >= 1 && d <= ens.dim(), ErrorCode::DimensionMismatch, "projection dimension");
  Ensemble out(d, ens.n_paths(), ens.times(), ens.master_seed());
  for (std::size_t p = 0; p < ens.n_paths(); ++p) {
    for (std::size_t t = 0; t < ens.n_times(); ++t) out.state(p, t) = ens.state(p, t).head(d);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Smooth cutoff

/// Smooth step built from exp(-1/t): eta = 1 on [-1, 1], 0 outside
/// [-3, 3], |eta'| <= 1.
struct Eta {
  static double psi(double t) { return t > 0.0 ? std::exp(-1.0 / t) : 0.0; }
  static double dpsi(double t) { return t > 0.0 ? std::exp(-1.0 / t) / (t * t) : 0.0; }

  static double value(double z) {
    const double u = (3.0 - std::abs(z)) / 2.0;
    const double p = psi(u);
    const double q = psi(1.0 - u);
    return p / (p + q);
  }

  static double derivative(double z) {
    const double u = (3.0 - std::abs(z)) / 2.0;
    if (u <= 0.0 || u >= 1.0) return 0.0;
    const double p = psi(u);
    const double q = psi(1.0 - u);
    const double ds = (dpsi(u) * q + p * dpsi(1.0 - u)) / ((p + q) * (p + q));
    return -0.5 * ds * (z < 0 ? -1.0 : 1.0);
  }
};

struct DifferentiableMap {
  std::function<Vec(const Vec&)> value;
  std::function<Mat(const Vec&)> jacobian;
};

/// g(y) = L(y) + eta(|y - c|^2 / r^2) (fn(y) - L(y)) with L the tangent map of
/// fn at c, so g = fn on B_r(c) and Dg = Dfn(c) outside B_{sqrt(3) r}(c).
class SmoothCutoff {
 public:
  SmoothCutoff(DifferentiableMap fn, Vec center, double r)
      : fn_(std::move(fn)), center_(std::move(center)), r_(r), f_c_(fn_.value(center_)),
        df_c_(fn_.jacobian(center_)) {}

  double radius() const { return r_; }
  const Vec& center() const { return center_; }
  const Mat& tangent() const { return df_c_; }

  Vec operator()(const Vec& y) const {
    const Vec dy = y - center_;
    const Vec lin = f_c_ + df_c_ * dy;
    const double w = Eta::value(dy.squaredNorm() / (r_ * r_));
    if (w == 0.0) return lin;
    if (w == 1.0) return fn_.value(y);
    return lin + w * (fn_.value(y) - lin);
  }

  Mat jacobian(const Vec& y) const {
    const Vec dy = y - center_;
    const double u = dy.squaredNorm() / (r_ * r_);
    const double w = Eta::value(u);
    if (w == 0.0) return df_c_;
    if (w == 1.0 && Eta::derivative(u) == 0.0) return fn_.jacobian(y);
    const Vec rest = fn_.value(y) - f_c_ - df_c_ * dy;
    return df_c_ + w * (fn_.jacobian(y) - df_c_) + rest * (Eta::derivative(u) * 2.0 / (r_ * r_)) * dy.transpose();
  }

  /// sup of ||Dg - Dfn(c)|| over the probe points.
  double deviation(const std::vector<Vec>& probe) const {
    double worst = 0.0;
    for (const Vec& y : probe) worst = std::max(worst, operator_norm(jacobian(y) - df_c_));
    return worst;
  }

 private:
  DifferentiableMap fn_;
  Vec center_;
  double r_;
  Vec f_c_;
  Mat df_c_;
};

/// Probe points in B_{4r}(c): the center, points along each axis and random
/// directions at several radii.
inline std::vector<Vec> cutoff_probe(const Vec& center, double r, int per_shell = 24, std::uint64_t seed = 0xc0ffULL) {
  const auto n = center.size();
  std::vector<Vec> out{center};
  Stream stream(seed, 0);
  std::normal_distribution<double> normal;
  for (double frac : {0.1, 0.25, 0.5, 0.75, 0.9, 1.0, 1.2, 1.5, 1.75, 2.0, 3.0, 4.0}) {
    for (Eigen::Index i = 0; i < n; ++i) {
      out.push_back(center + frac * r * Vec::Unit(n, i));
      out.push_back(center - frac * r * Vec::Unit(n, i));
    }
    for (int k = 0; k < per_shell; ++k) {
      Vec dir(n);
      for (Eigen::Index i = 0; i < n; ++i) dir(i) = normal(stream);
      out.push_back(center + frac * r * dir.normalized());
    }
  }
  return out;
}

/// Halves r until the probed deviation is at most epsilon; gives up below
/// r / 2^20.
inline SmoothCutoff smooth_cutoff(const DifferentiableMap& fn, const Vec& center, double r, double epsilon) {
  require(fn.value && fn.jacobian, ErrorCode::MissingDerivatives, "cutoff needs fn and its derivative");
  require(r > 0.0 && epsilon > 0.0, ErrorCode::InvalidArgument, "r and epsilon must be positive");
  double radius = r;
  for (int halvings = 0; halvings <= 20; ++halvings, radius *= 0.5) {
    SmoothCutoff g(fn, center, radius);
    if (g.deviation(cutoff_probe(center, radius)) <= epsilon) return g;
  }
  throw Error(ErrorCode::DerivativeBoundUnachievable, "no radius down to r / 2^20 meets the derivative bound");
}

}  // namespace hypo
