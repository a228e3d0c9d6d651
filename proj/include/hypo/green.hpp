#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "hypo/error.hpp"
#include "hypo/group.hpp"
#include "hypo/kernel.hpp"
#include "hypo/numeric.hpp"
#include "hypo/quadrature.hpp"

namespace hypo {

/// (c, k, l, m): profile, derivative indices into the diffusive block
/// (0-based) and the argument-swap flag.
struct KernelTuple {
  CovarianceProfile profile;
  int k = 0;
  int l = 0;
  int m = 0;
};

inline void validate_tuple(const KernelTuple& alpha, const StructuralMatrix& sm) {
  require(alpha.profile.dim() == sm.diffusive_dim(), ErrorCode::DimensionMismatch, "profile dimension must equal d_0");
  const int d0 = sm.diffusive_dim();
  require(alpha.k >= 0 && alpha.k < d0 && alpha.l >= 0 && alpha.l < d0, ErrorCode::InvalidArgument,
          "kernel indices must lie in the diffusive block");
  require(alpha.m == 0 || alpha.m == 1, ErrorCode::InvalidArgument, "m must be 0 or 1");
}

/// Axis-aligned region on which a sampled source is known.
struct SourceDomain {
  double t_lo = 0.0;
  double t_hi = 0.0;
  Vec lo;
  Vec hi;
};

/// Source term f(t, y), evaluated lazily at quadrature nodes.
class SourceFunction {
 public:
  using Fn = std::function<double(double, const Vec&)>;

  SourceFunction(int dim, Fn fn, std::optional<SourceDomain> domain = std::nullopt)
      : dim_(dim), fn_(std::move(fn)), domain_(std::move(domain)) {}

  double operator()(double t, const Vec& y) const { return fn_(t, y); }
  int dim() const { return dim_; }
  const std::optional<SourceDomain>& domain() const { return domain_; }

  static SourceFunction zero(int dim) {
    return {dim, [](double, const Vec&) { return 0.0; }};
  }

  static SourceFunction constant(int dim, double value) {
    return {dim, [value](double, const Vec&) { return value; }};
  }

  /// amplitude * exp(-(t-t0)^2 / (2 sigma_t^2)) * exp(-(y-c)^T W^{-1} (y-c) / 2),
  /// cut to zero beyond 9 sigma_t in time.
  static SourceFunction gaussian_bump(double t0, double sigma_t, const Vec& center, const Mat& cov,
                                      double amplitude = 1.0) {
    require(sigma_t > 0.0, ErrorCode::InvalidArgument, "bump width must be positive");
    Eigen::LLT<Mat> llt(cov);
    require(llt.info() == Eigen::Success, ErrorCode::InvalidArgument, "bump covariance must be SPD");
    const Mat l = llt.matrixL();
    return {static_cast<int>(center.size()), [=](double t, const Vec& y) {
              const double u = (t - t0) / sigma_t;
              if (std::abs(u) > 9.0) return 0.0;
              const Vec w = l.triangularView<Eigen::Lower>().solve(y - center);
              return amplitude * std::exp(-0.5 * u * u - 0.5 * w.squaredNorm());
            }};
  }

  /// Multilinear interpolation of values on a tensor grid (time axis first,
  /// row-major with the last spatial axis fastest). Zero off the grid.
  static SourceFunction from_grid(std::vector<std::vector<double>> axes, std::vector<double> values) {
    require(axes.size() >= 2, ErrorCode::DimensionMismatch, "grid needs a time axis and at least one space axis");
    std::size_t total = 1;
    for (const auto& axis : axes) {
      require(axis.size() >= 2, ErrorCode::InvalidArgument, "grid axes need at least two points");
      for (std::size_t i = 1; i < axis.size(); ++i) {
        require(axis[i] > axis[i - 1], ErrorCode::InvalidArgument, "grid axes must be increasing");
      }
      total *= axis.size();
    }
    require(values.size() == total, ErrorCode::DimensionMismatch, "grid value count does not match the axes");
    const int d = static_cast<int>(axes.size()) - 1;
    SourceDomain dom{axes[0].front(), axes[0].back(), Vec(d), Vec(d)};
    for (int a = 0; a < d; ++a) {
      dom.lo(a) = axes[static_cast<std::size_t>(a + 1)].front();
      dom.hi(a) = axes[static_cast<std::size_t>(a + 1)].back();
    }
    auto fn = [axes = std::move(axes), values = std::move(values)](double t, const Vec& y) {
      const std::size_t n = axes.size();
      std::vector<std::size_t> base(n);
      std::vector<double> frac(n);
      for (std::size_t a = 0; a < n; ++a) {
        const double v = a == 0 ? t : y(static_cast<Eigen::Index>(a - 1));
        const auto& axis = axes[a];
        if (v < axis.front() || v > axis.back()) return 0.0;
        auto it = std::upper_bound(axis.begin(), axis.end(), v);
        std::size_t i = it == axis.end() ? axis.size() - 2 : static_cast<std::size_t>(it - axis.begin()) - 1;
        base[a] = i;
        frac[a] = (v - axis[i]) / (axis[i + 1] - axis[i]);
      }
      double out = 0.0;
      for (std::size_t corner = 0; corner < (std::size_t{1} << n); ++corner) {
        double w = 1.0;
        std::size_t flat = 0;
        for (std::size_t a = 0; a < n; ++a) {
          const bool up = (corner >> a) & 1u;
          w *= up ? frac[a] : 1.0 - frac[a];
          flat = flat * axes[a].size() + base[a] + (up ? 1 : 0);
        }
        if (w != 0.0) out += w * values[flat];
      }
      return out;
    };
    return {d, std::move(fn), dom};
  }

  /// a f + b g.
  static SourceFunction combine(double a, const SourceFunction& f, double b, const SourceFunction& g) {
    require(f.dim() == g.dim(), ErrorCode::DimensionMismatch, "sources of different dimension");
    return {f.dim(), [=](double t, const Vec& y) { return a * f(t, y) + b * g(t, y); }};
  }

 private:
  int dim_;
  Fn fn_;
  std::optional<SourceDomain> domain_;
};

/// h_alpha(s,x; t,y): d^2 p / dx^k dx^l at (s,x; t,y) when m = 0, and the
/// same derivative of p at the swapped pair (t,y; s,x) when m = 1. The
/// derivative is always taken in the spatial variable of the earlier point.
inline double singular_kernel(const KernelTuple& alpha, const StructuralMatrix& sm, const GroupPoint& p,
                              const GroupPoint& q) {
  validate_tuple(alpha, sm);
  const GroupPoint& first = alpha.m == 0 ? p : q;
  const GroupPoint& second = alpha.m == 0 ? q : p;
  if (!(second.s > first.s)) return 0.0;
  const TransitionKernel k(sm, alpha.profile);
  const DerivativeBundle b = derivative_bundle(k, first, second);
  return b.hessian_x()(alpha.k, alpha.l);
}

/// 4^i as an exact power of two.
inline double pow4(int i) { return std::ldexp(1.0, 2 * i); }

/// The i with 4^i < gap <= 4^{i+1}.
inline int shell_index(double gap) {
  require(gap > 0.0 && std::isfinite(gap), ErrorCode::InvalidArgument, "shell index needs a positive gap");
  int i = static_cast<int>(std::ceil(0.5 * std::log2(gap))) - 1;
  while (!(gap > pow4(i))) --i;
  while (gap > pow4(i + 1)) ++i;
  return i;
}

inline bool in_shell(double gap, int i) { return gap > pow4(i) && gap <= pow4(i + 1); }

/// h^i_alpha: the singular kernel restricted to |t-s| / 4^i in (1, 4].
inline double truncated_kernel(const KernelTuple& alpha, const StructuralMatrix& sm, int i, const GroupPoint& p,
                               const GroupPoint& q) {
  if (!in_shell(std::abs(q.s - p.s), i)) return 0.0;
  return singular_kernel(alpha, sm, p, q);
}

namespace detail {

/// Which kernel factor multiplies the source at the free endpoint.
enum class KernelFactor { Density, Gradient, Hessian };

/// Integral over the free spatial endpoint of K(free) f(t_free, free) at a
/// fixed time pair. The derivative is taken in the earlier point's spatial
/// variable; `free_is_later` says which endpoint is integrated.
class SpatialIntegrator {
 public:
  SpatialIntegrator(const TransitionKernel& k, const QuadratureSpec& spec) : k_(k), spec_(spec) {
    if (spec.focus) {
      Eigen::LLT<Mat> llt(spec.focus->second);
      require(llt.info() == Eigen::Success, ErrorCode::InvalidArgument, "focus covariance must be SPD");
    }
  }

  double operator()(double earlier_t, double later_t, const Vec& fixed, bool free_is_later, KernelFactor factor,
                    int a, int b, const SourceFunction& f) const {
    const TimeSlice ts = k_.slice(earlier_t, later_t);
    const Mat& e = ts.expm;
    // Gaussian in the free variable: mean and covariance of p.
    Vec mean;
    Mat pcov;
    if (free_is_later) {
      mean = e * fixed;
      pcov = ts.covariance;
    } else {
      const Mat e_inv = matrix_exp(k_.structure(), earlier_t - later_t);
      mean = e_inv * fixed;
      pcov = e_inv * ts.covariance * e_inv.transpose();
    }
    Mat frame_cov = pcov;
    Vec frame_mean = mean;
    if (spec_.focus) {
      // Product with N(c, W) in covariance form, C (C + W)^{-1} W, which
      // stays accurate when C is tiny and anisotropic.
      const Mat& w = spec_.focus->second;
      const Mat gain = (pcov + w).transpose().ldlt().solve(pcov.transpose()).transpose();
      frame_cov = gain * w;
      frame_mean = mean + gain * (spec_.focus->first - mean);
    }
    Eigen::LLT<Mat> frame_llt(0.5 * (frame_cov + frame_cov.transpose()));
    require(frame_llt.info() == Eigen::Success, ErrorCode::IllConditionedCovariance, "quadrature frame is singular");
    const Mat frame = frame_llt.matrixL();

    const Mat m_rows = e.transpose() * ts.cov_inv;  // f1 = m_rows * r
    const Mat g11 = m_rows * e;
    const double t_free = free_is_later ? later_t : earlier_t;
    // The residual is formed from the frame offset, never as a difference of
    // O(1) coordinates, since the kernel scale can be far below one ulp of y.
    const Vec offset = frame_mean - mean;
    const Vec origin = Vec::Zero(offset.size());
    std::vector<double> terms;
    for_each_spec_node(origin, frame, spec_, [&](const Vec& lz, double w) {
      const double fv = f(t_free, Vec(frame_mean + lz));
      if (fv == 0.0) return;
      const Vec r = free_is_later ? Vec(offset + lz) : Vec(-(e * (offset + lz)));
      const Vec u = ts.chol.triangularView<Eigen::Lower>().solve(r);
      const double pv = std::exp(ts.log_norm - 0.5 * u.squaredNorm());
      double kv = pv;
      if (factor == KernelFactor::Gradient) {
        kv = m_rows.row(a).dot(r) * pv;
      } else if (factor == KernelFactor::Hessian) {
        kv = (m_rows.row(a).dot(r) * m_rows.row(b).dot(r) - g11(a, b)) * pv;
      }
      terms.push_back(w * kv * fv);
    });
    return pairwise_sum(terms);
  }

 private:
  const TransitionKernel& k_;
  const QuadratureSpec& spec_;
};

/// Sorted, deduplicated panel edges inside [lo, hi].
inline std::vector<double> panel_edges(double lo, double hi, std::vector<double> cuts) {
  std::vector<double> out{lo, hi};
  for (double c : cuts) {
    if (c > lo && c < hi) out.push_back(c);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

/// Cuts shared by all time integrals: profile breakpoints and the window grid.
inline std::vector<double> common_cuts(const TransitionKernel& k, const QuadratureSpec& spec) {
  std::vector<double> cuts = k.profile().breakpoints();
  if (spec.time_window) {
    const auto [a, b] = *spec.time_window;
    for (int i = 0; i <= spec.window_panels; ++i) cuts.push_back(a + (b - a) * i / spec.window_panels);
  }
  return cuts;
}

/// Clip [lo, hi] to the spec's time window. Returns false when empty.
inline bool clip_to_window(const QuadratureSpec& spec, double& lo, double& hi) {
  if (spec.time_window) {
    lo = std::max(lo, spec.time_window->first);
    hi = std::min(hi, spec.time_window->second);
  }
  return hi > lo;
}

template <class F>
double integrate_panels(const std::vector<double>& edges, int nodes, F&& fn) {
  std::vector<double> terms;
  std::vector<double> ts, ws;
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    interval_rule(edges[i], edges[i + 1], nodes, ts, ws);
    for (std::size_t n = 0; n < ts.size(); ++n) terms.push_back(ws[n] * fn(ts[n]));
  }
  return pairwise_sum(terms);
}

/// Edges anchor + eps 2^k, k >= 0, that fall strictly inside (lo, hi).
inline void add_geometric_cuts(std::vector<double>& cuts, double anchor, double eps, double lo, double hi,
                               double sign) {
  for (double g = eps; g < 1e300; g *= 2.0) {
    const double c = anchor + sign * g;
    if (sign > 0 && c >= hi) break;
    if (sign < 0 && c <= lo) break;
    cuts.push_back(c);
  }
}

inline void check_dims(const TransitionKernel& k, const SourceFunction& f, const GroupPoint& p,
                       const QuadratureSpec& spec) {
  spec.validate();
  require(f.dim() == k.dim() && p.x.size() == k.dim(), ErrorCode::DimensionMismatch,
          "source, point and kernel dimensions differ");
  require(spec.nodes.size() == static_cast<std::size_t>(k.dim()), ErrorCode::DimensionMismatch,
          "quadrature spec needs one entry per spatial axis");
}

}  // namespace detail

/// Smallest gap kept by green_apply near t = s. The neglected slab
/// contributes at most this times sup |f|.
inline constexpr double kGreenInnerGap = 0x1p-40;

/// G^T f(s,x) = int_s^T int p(s,x; t,y) f(t,y) dy dt.
inline double green_apply(const TransitionKernel& k, const SourceFunction& f, const GroupPoint& p, double T,
                          const QuadratureSpec& spec) {
  detail::check_dims(k, f, p, spec);
  require(p.s <= T, ErrorCode::OutOfWindow, "evaluation time lies after the horizon");
  double lo = p.s + kGreenInnerGap;
  double hi = T;
  if (!detail::clip_to_window(spec, lo, hi)) return 0.0;
  std::vector<double> cuts = detail::common_cuts(k, spec);
  detail::add_geometric_cuts(cuts, p.s, kGreenInnerGap, lo, hi, 1.0);
  const detail::SpatialIntegrator inner(k, spec);
  return detail::integrate_panels(detail::panel_edges(lo, hi, cuts), spec.time_nodes, [&](double t) {
    return inner(p.s, t, p.x, true, detail::KernelFactor::Density, 0, 0, f);
  });
}

/// d/dx^i G^T f(s,x) via the kernel D_x p, truncated at t - s > 4^{-level}.
inline double green_gradient(const TransitionKernel& k, const SourceFunction& f, const GroupPoint& p, double T,
                             const QuadratureSpec& spec, int i, int level) {
  detail::check_dims(k, f, p, spec);
  require(p.s < T, ErrorCode::OutOfWindow, "evaluation time must precede the horizon");
  require(i >= 0 && i < k.dim(), ErrorCode::InvalidArgument, "derivative index out of range");
  const double eps = pow4(-level);
  double lo = p.s + eps;
  double hi = T;
  if (!detail::clip_to_window(spec, lo, hi)) return 0.0;
  std::vector<double> cuts = detail::common_cuts(k, spec);
  detail::add_geometric_cuts(cuts, p.s, eps, lo, hi, 1.0);
  const detail::SpatialIntegrator inner(k, spec);
  return detail::integrate_panels(detail::panel_edges(lo, hi, cuts), spec.time_nodes, [&](double t) {
    return inner(p.s, t, p.x, true, detail::KernelFactor::Gradient, i, 0, f);
  });
}

/// d^2/dx^i dx^j G^T f(s,x) from the truncated representation with
/// eps = 4^{-level}; time panels grow by a factor 2 away from s.
inline double green_second_derivative(const TransitionKernel& k, const SourceFunction& f, const GroupPoint& p,
                                      double T, const QuadratureSpec& spec, int i, int j, int level) {
  detail::check_dims(k, f, p, spec);
  require(p.s < T, ErrorCode::OutOfWindow, "evaluation time must precede the horizon");
  const int d0 = k.structure().diffusive_dim();
  require(i >= 0 && i < d0 && j >= 0 && j < d0, ErrorCode::InvalidArgument,
          "second derivatives are taken in the diffusive block");
  const double eps = pow4(-level);
  double lo = p.s + eps;
  double hi = T;
  if (!detail::clip_to_window(spec, lo, hi)) return 0.0;
  std::vector<double> cuts = detail::common_cuts(k, spec);
  detail::add_geometric_cuts(cuts, p.s, eps, lo, hi, 1.0);
  const detail::SpatialIntegrator inner(k, spec);
  return detail::integrate_panels(detail::panel_edges(lo, hi, cuts), spec.time_nodes, [&](double t) {
    return inner(p.s, t, p.x, true, detail::KernelFactor::Hessian, i, j, f);
  });
}

/// Sum of H^i_alpha f(p) over shells i_lo..i_hi.
inline double apply_shells(const KernelTuple& alpha, const StructuralMatrix& sm, int i_lo, int i_hi,
                           const SourceFunction& f, const GroupPoint& p, const QuadratureSpec& spec) {
  validate_tuple(alpha, sm);
  const TransitionKernel k(sm, alpha.profile);
  detail::check_dims(k, f, p, spec);
  require(i_lo <= i_hi, ErrorCode::InvalidArgument, "empty shell range");
  const double near = pow4(i_lo);
  const double far = pow4(i_hi + 1);
  // m = 0 integrates over later times, m = 1 over earlier ones.
  const double sign = alpha.m == 0 ? 1.0 : -1.0;
  double lo = alpha.m == 0 ? p.s + near : p.s - far;
  double hi = alpha.m == 0 ? p.s + far : p.s - near;

  if (const auto& dom = f.domain()) {
    double need_lo = lo;
    double need_hi = hi;
    detail::clip_to_window(spec, need_lo, need_hi);
    bool covered = need_hi <= need_lo || (dom->t_lo <= need_lo && dom->t_hi >= need_hi);
    if (covered && spec.focus && !spec.hermite()) {
      const Vec sd = spec.focus->second.diagonal().cwiseSqrt();
      for (Eigen::Index a = 0; a < sd.size(); ++a) {
        const double r = spec.radius[static_cast<std::size_t>(a)] * sd(a);
        covered = covered && dom->lo(a) <= spec.focus->first(a) - r && dom->hi(a) >= spec.focus->first(a) + r;
      }
    }
    require(covered, ErrorCode::GridCoverage, "sampled source does not cover the shells inside the quadrature box");
  }

  if (!detail::clip_to_window(spec, lo, hi)) return 0.0;
  std::vector<double> cuts = detail::common_cuts(k, spec);
  for (int i = i_lo; i <= i_hi + 1; ++i) {
    cuts.push_back(p.s + sign * pow4(i));
    if (i <= i_hi) cuts.push_back(p.s + sign * 2.0 * pow4(i));
  }
  const detail::SpatialIntegrator inner(k, spec);
  return detail::integrate_panels(detail::panel_edges(lo, hi, cuts), spec.time_nodes, [&](double t) {
    if (alpha.m == 0) return inner(p.s, t, p.x, true, detail::KernelFactor::Hessian, alpha.k, alpha.l, f);
    return inner(t, p.s, p.x, false, detail::KernelFactor::Hessian, alpha.k, alpha.l, f);
  });
}

/// K^j_alpha f(p) = sum_{i=-j}^{j} H^i_alpha f(p).
inline double apply_truncated(const KernelTuple& alpha, const StructuralMatrix& sm, int j, const SourceFunction& f,
                              const GroupPoint& p, const QuadratureSpec& spec) {
  require(j >= 0, ErrorCode::InvalidArgument, "truncation index must be nonnegative");
  return apply_shells(alpha, sm, -j, j, f, p, spec);
}

/// Box in (t, x) for L^p norms and sup grids, integrated with Gauss-Legendre
/// panels in time and per-axis rules in space.
struct LpBox {
  double t_lo = 0.0;
  double t_hi = 1.0;
  Vec center;
  Vec half_width;
  int t_panels = 4;
  int t_nodes = 8;
  int x_nodes = 16;

  void validate(int d) const {
    require(t_hi > t_lo, ErrorCode::InvalidArgument, "empty time range");
    require(center.size() == d && half_width.size() == d, ErrorCode::DimensionMismatch, "box dimension mismatch");
    require((half_width.array() > 0.0).all(), ErrorCode::InvalidArgument, "box half widths must be positive");
    require(t_panels >= 1 && t_nodes >= 2 && x_nodes >= 2, ErrorCode::InvalidArgument, "box rule too small");
  }

  /// Calls fn(s, x, weight) for every node.
  template <class F>
  void for_each_node(F&& fn) const {
    std::vector<double> edges;
    for (int i = 0; i <= t_panels; ++i) edges.push_back(t_lo + (t_hi - t_lo) * i / t_panels);
    std::vector<double> ts, ws;
    const Mat frame = half_width.asDiagonal();
    for (int panel = 0; panel < t_panels; ++panel) {
      interval_rule(edges[static_cast<std::size_t>(panel)], edges[static_cast<std::size_t>(panel + 1)], t_nodes, ts,
                    ws);
      for (std::size_t n = 0; n < ts.size(); ++n) {
        for_each_frame_node(center, frame, std::vector<double>(static_cast<std::size_t>(center.size()), 1.0),
                            std::vector<int>(static_cast<std::size_t>(center.size()), x_nodes),
                            [&](const Vec& x, double w) { fn(ts[n], x, ws[n] * w); });
      }
    }
  }
};

/// One CSV row: (j or T, value, denominator, ratio).
struct RatioRow {
  double key = 0.0;
  double value = 0.0;
  double denominator = 0.0;
  double ratio = 0.0;
};

inline void write_ratio_csv(std::ostream& os, const std::vector<RatioRow>& rows, const std::string& key_name) {
  os << key_name << ",value,denominator,ratio\n";
  os.precision(17);
  for (const auto& r : rows) os << r.key << ',' << r.value << ',' << r.denominator << ',' << r.ratio << '\n';
}

/// L^p norm over the box of a function of (s, x).
template <class F>
double lp_norm(const LpBox& box, double p_exponent, F&& fn) {
  std::vector<double> terms;
  box.for_each_node([&](double s, const Vec& x, double w) { terms.push_back(w * std::pow(std::abs(fn(s, x)), p_exponent)); });
  return std::pow(std::max(pairwise_sum(terms), 0.0), 1.0 / p_exponent);
}

/// ||K^j_alpha f||_p / ||f||_p over the box.
inline RatioRow lp_ratio(const KernelTuple& alpha, const StructuralMatrix& sm, int j, const SourceFunction& f,
                         double p_exponent, const QuadratureSpec& spec, const LpBox& box) {
  require(p_exponent > 1.0, ErrorCode::InvalidArgument, "L^p exponent must exceed 1");
  box.validate(sm.dim());
  const double denom = lp_norm(box, p_exponent, [&](double s, const Vec& x) { return f(s, x); });
  require(denom > 0.0, ErrorCode::ZeroDenominator, "source has zero L^p norm on the box");
  const double num = lp_norm(box, p_exponent, [&](double s, const Vec& x) {
    return apply_truncated(alpha, sm, j, f, {s, x}, spec);
  });
  return {static_cast<double>(j), num, denom, num / denom};
}

/// Rows (T, sup |G^T f| over the box nodes, T^{1 - dbar/(2p)} ||f 1_{[0,T)}||_p, ratio).
/// The box time range is replaced by [0, T] for each T.
inline std::vector<RatioRow> sup_bound_check(const TransitionKernel& k, const SourceFunction& f,
                                             const std::vector<double>& horizons, double p_exponent,
                                             const QuadratureSpec& spec, const LpBox& box) {
  const double dbar = k.structure().homogeneous_dim();
  require(p_exponent > dbar / 2.0, ErrorCode::ExponentTooSmall, "sup bound needs p > dbar/2");
  std::vector<RatioRow> rows;
  for (double T : horizons) {
    require(T > 0.0, ErrorCode::InvalidArgument, "horizons must be positive");
    LpBox b = box;
    b.t_lo = 0.0;
    b.t_hi = T;
    b.validate(k.dim());
    QuadratureSpec s = spec;
    double w_lo = 0.0;
    double w_hi = T;
    if (spec.time_window) {
      w_lo = std::max(w_lo, spec.time_window->first);
      w_hi = std::min(w_hi, spec.time_window->second);
    }
    RatioRow row;
    row.key = T;
    if (w_hi > w_lo) {
      s.time_window = std::make_pair(w_lo, w_hi);
      const SourceFunction restricted(f.dim(), [&f, T](double t, const Vec& y) {
        return t >= 0.0 && t < T ? f(t, y) : 0.0;
      });
      double sup = 0.0;
      b.for_each_node([&](double t, const Vec& x, double) {
        sup = std::max(sup, std::abs(green_apply(k, restricted, {t, x}, T, s)));
      });
      const double norm = lp_norm(b, p_exponent, [&](double t, const Vec& y) { return restricted(t, y); });
      row.value = sup;
      row.denominator = std::pow(T, 1.0 - dbar / (2.0 * p_exponent)) * norm;
      row.ratio = row.denominator > 0.0 ? row.value / row.denominator : 0.0;
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace hypo
