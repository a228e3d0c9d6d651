#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "hypo/error.hpp"
#include "hypo/green.hpp"
#include "hypo/group.hpp"
#include "hypo/kernel.hpp"
#include "hypo/numeric.hpp"
#include "hypo/parallel.hpp"
#include "hypo/rng.hpp"

namespace hypo {

/// Where a path's randomness came from.
struct SeedRecord {
  std::uint64_t master_seed = 0;
  std::uint64_t path_index = 0;
};

/// One sample path on a strictly increasing grid; states are columns.
struct Trajectory {
  std::vector<double> times;
  Mat states;
  SeedRecord seed;

  int dim() const { return static_cast<int>(states.rows()); }
  Vec at(std::size_t k) const { return states.col(static_cast<Eigen::Index>(k)); }
};

inline void validate_grid(const std::vector<double>& times) {
  require(!times.empty(), ErrorCode::BadGrid, "time grid is empty");
  for (double t : times) require(std::isfinite(t), ErrorCode::BadGrid, "time grid has a non-finite entry");
  for (std::size_t i = 1; i < times.size(); ++i) {
    require(times[i] > times[i - 1], ErrorCode::BadGrid, "time grid must be strictly increasing");
  }
}

/// Paths sharing one grid, stored path-major: data[(path * n_times + k) * d + i].
class Ensemble {
 public:
  Ensemble() = default;
  Ensemble(int d, std::size_t n_paths, std::vector<double> times, std::uint64_t master_seed)
      : d_(d), n_paths_(n_paths), times_(std::move(times)), master_seed_(master_seed),
        data_(n_paths * times_.size() * static_cast<std::size_t>(d), 0.0) {}

  int dim() const { return d_; }
  std::size_t n_paths() const { return n_paths_; }
  std::size_t n_times() const { return times_.size(); }
  const std::vector<double>& times() const { return times_; }
  std::uint64_t master_seed() const { return master_seed_; }
  double horizon() const { return times_.back(); }
  const std::vector<double>& data() const { return data_; }

  Eigen::Map<Vec> state(std::size_t path, std::size_t k) {
    return {data_.data() + offset(path, k), static_cast<Eigen::Index>(d_)};
  }
  Eigen::Map<const Vec> state(std::size_t path, std::size_t k) const {
    return {data_.data() + offset(path, k), static_cast<Eigen::Index>(d_)};
  }

  Trajectory trajectory(std::size_t path) const {
    Trajectory out;
    out.times = times_;
    out.states.resize(d_, static_cast<Eigen::Index>(times_.size()));
    for (std::size_t k = 0; k < times_.size(); ++k) out.states.col(static_cast<Eigen::Index>(k)) = state(path, k);
    out.seed = {master_seed_, path};
    return out;
  }

  /// Index of the grid time equal to t (relative tolerance 1e-12), if any.
  std::optional<std::size_t> index_of(double t) const {
    const double tol = 1e-12 * std::max(1.0, std::abs(t));
    auto it = std::lower_bound(times_.begin(), times_.end(), t - tol);
    if (it != times_.end() && std::abs(*it - t) <= tol) return static_cast<std::size_t>(it - times_.begin());
    return std::nullopt;
  }

  /// Number of visited points where the declared growth constant failed.
  std::size_t growth_violations = 0;

 private:
  std::size_t offset(std::size_t path, std::size_t k) const {
    return (path * times_.size() + k) * static_cast<std::size_t>(d_);
  }

  int d_ = 0;
  std::size_t n_paths_ = 0;
  std::vector<double> times_;
  std::uint64_t master_seed_ = 0;
  std::vector<double> data_;
};

/// Coefficients (a, b) of a degenerate SDE: a is d0 x d0 and drives the
/// first d0 components, b is the full drift in R^d.
struct CoefficientField {
  int d0 = 0;
  int d = 0;
  std::function<Mat(double, const Vec&)> a;
  std::function<Vec(double, const Vec&)> b;
  /// Declared N in ||a|| + |b|^2 <= N (1 + |x|^2).
  double growth_constant = std::numeric_limits<double>::infinity();
  /// Linear part of the drift when the field is built around a structure.
  std::optional<StructuralMatrix> structure;

  Mat diffusion(double t, const Vec& x) const {
    Mat out = a(t, x);
    require(out.rows() == d0 && out.cols() == d0, ErrorCode::DimensionMismatch, "a must be d0 x d0");
    return out;
  }

  Vec drift(double t, const Vec& x) const {
    Vec out = b(t, x);
    require(out.size() == d, ErrorCode::DimensionMismatch, "b must have d components");
    return out;
  }

  bool growth_ok(double t, const Vec& x) const {
    const double lhs = operator_norm(diffusion(t, x)) + drift(t, x).squaredNorm();
    return lhs <= growth_constant * (1.0 + x.squaredNorm()) * (1.0 + 1e-12);
  }
};

/// a = c(t), b = Bx: the linear SDE whose law is the transition kernel.
inline CoefficientField linear_field(const TransitionKernel& k) {
  CoefficientField f;
  f.d0 = k.structure().diffusive_dim();
  f.d = k.dim();
  const CovarianceProfile c = k.profile();
  const Mat bm = k.structure().matrix();
  f.a = [c](double t, const Vec&) { return c.at(t); };
  f.b = [bm](double, const Vec& x) { return Vec(bm * x); };
  f.growth_constant = c.mu() + std::pow(operator_norm(bm), 2);
  f.structure = k.structure();
  return f;
}

/// Fraction of sample points where the declared growth bound holds.
inline double growth_audit(const CoefficientField& field, const std::vector<std::pair<double, Vec>>& points) {
  if (points.empty()) return 1.0;
  std::size_t ok = 0;
  for (const auto& [t, x] : points) ok += field.growth_ok(t, x) ? 1 : 0;
  return static_cast<double>(ok) / static_cast<double>(points.size());
}

/// Exact Gaussian transitions of the linear SDE along the grid.
inline Ensemble exact_sample(const TransitionKernel& k, const GroupPoint& start, const std::vector<double>& times,
                             std::uint64_t seed, std::size_t n_paths, int workers = 1) {
  validate_grid(times);
  require(start.x.size() == k.dim(), ErrorCode::DimensionMismatch, "start point dimension");
  require(times.front() == start.s, ErrorCode::BadGrid, "grid must start at the start time");
  const int d = k.dim();
  const std::size_t steps = times.size() - 1;
  std::vector<Mat> expm(steps), root(steps);
  for (std::size_t i = 0; i < steps; ++i) {
    expm[i] = matrix_exp(k.structure(), times[i + 1] - times[i]);
    root[i] = psd_sqrt(k.covariance(times[i], times[i + 1]));
  }
  Ensemble out(d, n_paths, times, seed);
  parallel_for(n_paths, workers, [&](std::size_t begin, std::size_t end) {
    Vec z(d);
    for (std::size_t p = begin; p < end; ++p) {
      NormalStream normal(seed, p);
      out.state(p, 0) = start.x;
      for (std::size_t i = 0; i < steps; ++i) {
        for (int j = 0; j < d; ++j) z(j) = normal();
        out.state(p, i + 1) = expm[i] * out.state(p, i) + root[i] * z;
      }
    }
  });
  return out;
}

/// Left-point Euler-Maruyama with noise only in the first d0 components.
/// States are recorded every `record_every` steps and at the horizon.
inline Ensemble euler_simulate(const CoefficientField& field, const GroupPoint& start, double mesh, double horizon,
                               std::uint64_t seed, std::size_t n_paths, int workers = 1, int record_every = 1) {
  require(mesh > 0.0 && std::isfinite(mesh), ErrorCode::BadGrid, "mesh must be positive");
  require(horizon >= start.s, ErrorCode::BadGrid, "horizon precedes the start time");
  require(record_every >= 1, ErrorCode::InvalidArgument, "record_every must be >= 1");
  require(start.x.size() == field.d && field.d0 >= 1 && field.d0 <= field.d, ErrorCode::DimensionMismatch,
          "start point dimension");
  const auto n_steps = static_cast<std::size_t>(std::max(0.0, std::ceil((horizon - start.s) / mesh - 1e-9)));
  std::vector<double> grid(n_steps + 1);
  for (std::size_t i = 0; i <= n_steps; ++i) grid[i] = start.s + static_cast<double>(i) * mesh;
  grid.back() = horizon;
  if (n_steps == 0) grid = {start.s};
  std::vector<std::size_t> record;
  for (std::size_t i = 0; i <= n_steps; i += static_cast<std::size_t>(record_every)) record.push_back(i);
  if (record.back() != n_steps) record.push_back(n_steps);
  std::vector<double> rec_times;
  for (std::size_t i : record) rec_times.push_back(grid[i]);

  const int d = field.d;
  const int d0 = field.d0;
  Ensemble out(d, n_paths, rec_times, seed);
  std::vector<std::size_t> violations(n_paths, 0);
  parallel_for(n_paths, workers, [&](std::size_t begin, std::size_t end) {
    Vec z(d0);
    Vec x(d);
    for (std::size_t p = begin; p < end; ++p) {
      NormalStream normal(seed, p);
      x = start.x;
      std::size_t next = 0;
      out.state(p, next++) = x;
      for (std::size_t i = 0; i < n_steps; ++i) {
        const double t = grid[i];
        const double h = grid[i + 1] - grid[i];
        const Mat a = field.diffusion(t, x);
        double min_eig = 0.0;
        const Mat root = psd_sqrt(a, 1e-12, &min_eig);
        require(min_eig >= -1e-10, ErrorCode::NonPSDDiffusion, "diffusion matrix has a negative eigenvalue");
        const Vec b = field.drift(t, x);
        if (!field.growth_ok(t, x)) ++violations[p];
        for (int j = 0; j < d0; ++j) z(j) = normal();
        Vec next_x = x + h * b;
        next_x.head(d0) += std::sqrt(h) * (root * z);
        x = next_x;
        if (next < record.size() && record[next] == i + 1) out.state(p, next++) = x;
      }
    }
  });
  for (std::size_t v : violations) out.growth_violations += v;
  return out;
}

/// The chain SDE: the first d0 components have drift bhat and diffusion
/// sigmahat sigmahat^T; component i >= d0 has drift x^{i - d0}.
inline CoefficientField field_example_1_2(int d0, int n, std::function<Vec(double, const Vec&)> bhat,
                                          std::function<Mat(double, const Vec&)> sigmahat,
                                          double growth_constant = std::numeric_limits<double>::infinity()) {
  require(d0 >= 1 && n >= 2, ErrorCode::DimensionMismatch, "need d0 >= 1 and n >= 2");
  CoefficientField f;
  f.d0 = d0;
  f.d = n * d0;
  const int d = f.d;
  f.a = [sigmahat, d0](double t, const Vec& x) {
    const Mat s = sigmahat(t, x);
    require(s.rows() == d0 && s.cols() == d0, ErrorCode::DimensionMismatch, "sigmahat must be d0 x d0");
    return Mat(s * s.transpose());
  };
  f.b = [bhat, d0, d](double t, const Vec& x) {
    const Vec head = bhat(t, x);
    require(head.size() == d0, ErrorCode::DimensionMismatch, "bhat must have d0 components");
    Vec out(d);
    out.head(d0) = head;
    out.tail(d - d0) = x.head(d - d0);
    return out;
  };
  f.growth_constant = growth_constant;
  std::vector<int> dims(static_cast<std::size_t>(n), d0);
  std::vector<Mat> blocks(static_cast<std::size_t>(n - 1), Mat::Identity(d0, d0));
  f.structure = structure_from_blocks(dims, blocks);
  return f;
}

/// (X', X'') with drift (b', b'') and diffusion sigmatilde on X'.
inline CoefficientField field_example_1_3(int d0, int d1, std::function<Vec(double, const Vec&)> bprime,
                                          std::function<Vec(double, const Vec&)> bsecond,
                                          std::function<Mat(double, const Vec&)> sigmatilde,
                                          double growth_constant = std::numeric_limits<double>::infinity()) {
  require(d0 >= 1 && d1 >= 1 && d1 <= d0, ErrorCode::DimensionMismatch, "need 1 <= d1 <= d0");
  CoefficientField f;
  f.d0 = d0;
  f.d = d0 + d1;
  f.a = [sigmatilde, d0](double t, const Vec& x) {
    const Mat s = sigmatilde(t, x);
    require(s.rows() == d0 && s.cols() == d0, ErrorCode::DimensionMismatch, "sigmatilde must be d0 x d0");
    return Mat(s * s.transpose());
  };
  f.b = [bprime, bsecond, d0, d1](double t, const Vec& x) {
    const Vec b1 = bprime(t, x);
    const Vec b2 = bsecond(t, x);
    require(b1.size() == d0 && b2.size() == d1, ErrorCode::DimensionMismatch, "drift block sizes");
    Vec out(d0 + d1);
    out << b1, b2;
    return out;
  };
  f.growth_constant = growth_constant;
  return f;
}

/// D_{x'} b'' by central differences (d1 x d0).
inline Mat jacobian_xprime(const std::function<Vec(double, const Vec&)>& bsecond, int d0, double t, const Vec& x,
                           double h = 1e-6) {
  const Vec base = bsecond(t, x);
  Mat jac(base.size(), d0);
  for (int j = 0; j < d0; ++j) {
    Vec up = x, down = x;
    up(j) += h;
    down(j) -= h;
    jac.col(j) = (bsecond(t, up) - bsecond(t, down)) / (2 * h);
  }
  return jac;
}

/// Smallest singular value of D_{x'} b'' over the probe points.
inline double rank_probe(const std::function<Vec(double, const Vec&)>& bsecond, int d0,
                         const std::vector<std::pair<double, Vec>>& points) {
  double smallest = std::numeric_limits<double>::infinity();
  for (const auto& [t, x] : points) smallest = std::min(smallest, smallest_singular_value(jacobian_xprime(bsecond, d0, t, x)));
  return smallest;
}

/// Test function with the derivatives the generator needs.
struct TestFunction {
  std::function<double(double, const Vec&)> value;
  std::function<double(double, const Vec&)> dt;
  std::function<Vec(double, const Vec&)> grad;
  std::function<Mat(double, const Vec&)> hessian;

  static TestFunction constant(double c) {
    return {[c](double, const Vec&) { return c; }, [](double, const Vec&) { return 0.0; },
            [](double, const Vec& x) { return Vec(Vec::Zero(x.size())); },
            [](double, const Vec& x) { return Mat(Mat::Zero(x.size(), x.size())); }};
  }

  /// exp(-(t-t0)^2/(2 st^2) - |x-c|^2/(2 w^2)).
  static TestFunction gaussian_bump(double t0, double st, const Vec& c, double w) {
    auto val = [=](double t, const Vec& x) {
      const double u = (t - t0) / st;
      return std::exp(-0.5 * u * u - 0.5 * (x - c).squaredNorm() / (w * w));
    };
    return {val, [=](double t, const Vec& x) { return -(t - t0) / (st * st) * val(t, x); },
            [=](double t, const Vec& x) { return Vec(-(x - c) / (w * w) * val(t, x)); },
            [=](double t, const Vec& x) {
              const Vec r = (x - c) / (w * w);
              return Mat((r * r.transpose() - Mat::Identity(x.size(), x.size()) / (w * w)) * val(t, x));
            }};
  }
};

/// L^{a,b} f = d_t f + (1/2) sum_{i,j < d0} a^{ij} d_ij f + sum_i b^i d_i f.
inline double generator(const CoefficientField& field, const TestFunction& f, double t, const Vec& x) {
  require(f.dt && f.grad && f.hessian, ErrorCode::MissingDerivatives, "test function lacks derivatives");
  const Mat a = field.diffusion(t, x);
  const Mat h = f.hessian(t, x);
  const int d0 = field.d0;
  return f.dt(t, x) + 0.5 * (a.array() * h.topLeftCorner(d0, d0).array()).sum() + field.drift(t, x).dot(f.grad(t, x));
}

/// g at time u by linear interpolation between grid indices.
template <class G>
double interpolate_at(const std::vector<double>& times, double u, G&& g) {
  auto it = std::lower_bound(times.begin(), times.end(), u);
  if (it == times.end()) return g(times.size() - 1);
  const auto i = static_cast<std::size_t>(it - times.begin());
  if (*it == u || i == 0) return g(i);
  const double w = (u - times[i - 1]) / (times[i] - times[i - 1]);
  return (1 - w) * g(i - 1) + w * g(i);
}

/// Trapezoid integral over [s, t] of g sampled on grid indices; s and t may
/// fall between grid times.
template <class G>
double trapezoid(const std::vector<double>& times, double s, double t, G&& g) {
  if (!(t > s)) return 0.0;
  std::vector<double> nodes{s};
  for (double u : times) {
    if (u > s && u < t) nodes.push_back(u);
  }
  nodes.push_back(t);
  std::vector<double> vals(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) vals[i] = interpolate_at(times, nodes[i], g);
  std::vector<double> terms(nodes.size() - 1);
  for (std::size_t i = 0; i + 1 < nodes.size(); ++i) terms[i] = 0.5 * (nodes[i + 1] - nodes[i]) * (vals[i] + vals[i + 1]);
  return pairwise_sum(terms);
}

/// E[M_t - M_s] with M_u = f(u, Y_u) - int_s^u L f(r, Y_r) dr.
inline MeanAndError martingale_residual(const Ensemble& ens, const TestFunction& f, const CoefficientField& field,
                                        double s, double t, int workers = 1) {
  require(ens.n_paths() > 0, ErrorCode::EmptyEnsemble, "ensemble has no paths");
  require(s < t, ErrorCode::InvalidArgument, "need s < t");
  require(s >= ens.times().front() && t <= ens.horizon() * (1 + 1e-12), ErrorCode::HorizonExceeded,
          "residual window lies outside the ensemble grid");
  require(field.d == ens.dim(), ErrorCode::DimensionMismatch, "field and ensemble dimensions differ");
  const auto& times = ens.times();
  std::vector<double> per_path(ens.n_paths());
  parallel_for(ens.n_paths(), workers, [&](std::size_t begin, std::size_t end) {
    for (std::size_t p = begin; p < end; ++p) {
      std::vector<double> lf(times.size(), std::numeric_limits<double>::quiet_NaN());
      auto gen = [&](std::size_t k) {
        if (std::isnan(lf[k])) lf[k] = generator(field, f, times[k], Vec(ens.state(p, k)));
        return lf[k];
      };
      auto fval = [&](std::size_t k) { return f.value(times[k], Vec(ens.state(p, k))); };
      const double ft = interpolate_at(times, t, fval);
      const double fs = interpolate_at(times, s, fval);
      per_path[p] = ft - fs - trapezoid(times, s, t, gen);
    }
  });
  return mean_and_standard_error(per_path);
}

/// E int_{s0}^T f(t, X_t) dt, s0 the grid start.
inline MeanAndError green_functional(const Ensemble& ens, const SourceFunction& f, double T, int workers = 1) {
  require(ens.n_paths() > 0, ErrorCode::EmptyEnsemble, "ensemble has no paths");
  require(T <= ens.horizon() * (1 + 1e-12) + 1e-300, ErrorCode::HorizonExceeded, "T exceeds the ensemble horizon");
  const auto& times = ens.times();
  std::vector<double> per_path(ens.n_paths());
  parallel_for(ens.n_paths(), workers, [&](std::size_t begin, std::size_t end) {
    for (std::size_t p = begin; p < end; ++p) {
      per_path[p] = trapezoid(times, times.front(), T, [&](std::size_t k) { return f(times[k], Vec(ens.state(p, k))); });
    }
  });
  return mean_and_standard_error(per_path);
}

/// Nonincreasing radius rho(t, r) in (0, 1].
class RadiusFunction {
 public:
  RadiusFunction(std::function<double(double, double)> fn, const std::vector<double>& t_samples = {0.0, 1.0, 2.0},
                 const std::vector<double>& r_samples = {0.0, 1.0, 2.0})
      : fn_(std::move(fn)) {
    for (std::size_t i = 0; i < t_samples.size(); ++i) {
      for (std::size_t j = 0; j < r_samples.size(); ++j) {
        const double v = (*this)(t_samples[i], r_samples[j]);
        require(v > 0.0, ErrorCode::InvalidArgument, "radius must be positive");
        if (i > 0) {
          require(v <= (*this)(t_samples[i - 1], r_samples[j]), ErrorCode::InvalidArgument,
                  "radius must be nonincreasing in t");
        }
        if (j > 0) {
          require(v <= (*this)(t_samples[i], r_samples[j - 1]), ErrorCode::InvalidArgument,
                  "radius must be nonincreasing in r");
        }
      }
    }
  }

  static RadiusFunction constant(double value) {
    return RadiusFunction([value](double, double) { return value; });
  }

  double operator()(double t, double r) const { return std::min(1.0, fn_(t, r)); }

  /// Uncapped value, for thresholds that must exceed 1.
  double raw(double t, double r) const { return fn_(t, r); }

 private:
  std::function<double(double, double)> fn_;
};

/// T_0 = grid start; T_n = first grid time with
/// (t - T_{n-1}) + |X_t - X_{T_{n-1}}| >= rho(T_{n-1}, |X_{T_{n-1}}|).
/// Includes T_0; stops after max_n further times or at the horizon.
inline std::vector<double> localization_times(const Trajectory& traj, const RadiusFunction& rho, int max_n,
                                              bool cap_at_one = true) {
  std::vector<double> out;
  if (traj.times.empty()) return out;
  std::size_t anchor = 0;
  out.push_back(traj.times[0]);
  while (static_cast<int>(out.size()) <= max_n) {
    const Vec xa = traj.at(anchor);
    const double r = cap_at_one ? rho(traj.times[anchor], xa.norm()) : rho.raw(traj.times[anchor], xa.norm());
    std::size_t hit = 0;
    for (std::size_t k = anchor + 1; k < traj.times.size(); ++k) {
      if ((traj.times[k] - traj.times[anchor]) + (traj.at(k) - xa).norm() >= r) {
        hit = k;
        break;
      }
    }
    if (hit == 0) break;
    out.push_back(traj.times[hit]);
    anchor = hit;
  }
  return out;
}

/// sup |X_s - X_r| over grid pairs r <= s <= min(r + delta, t).
inline double modulus_of_continuity(const Trajectory& traj, double delta, double t) {
  require(delta > 0.0, ErrorCode::InvalidArgument, "delta must be positive");
  double out = 0.0;
  const double tol = 1e-12 * std::max(1.0, std::abs(t) + delta);
  for (std::size_t i = 0; i < traj.times.size() && traj.times[i] <= t + tol; ++i) {
    const double limit = std::min(traj.times[i] + delta, t) + tol;
    for (std::size_t j = i + 1; j < traj.times.size() && traj.times[j] <= limit; ++j) {
      out = std::max(out, (traj.at(j) - traj.at(i)).norm());
    }
  }
  return out;
}

/// CSV with columns path_id, t, x1..xd.
inline void write_ensemble_csv(std::ostream& os, const Ensemble& ens) {
  os << "path_id,t";
  for (int i = 1; i <= ens.dim(); ++i) os << ",x" << i;
  os << '\n';
  os.precision(17);
  for (std::size_t p = 0; p < ens.n_paths(); ++p) {
    for (std::size_t k = 0; k < ens.n_times(); ++k) {
      os << p << ',' << ens.times()[k];
      const auto x = ens.state(p, k);
      for (int i = 0; i < ens.dim(); ++i) os << ',' << x(i);
      os << '\n';
    }
  }
}

/// Binary layout, all little-endian float64: d, n_paths, n_times, then the
/// n_times grid, then states path-major with the coordinate fastest.
inline void write_ensemble_binary(std::ostream& os, const Ensemble& ens) {
  static_assert(std::endian::native == std::endian::little, "binary layout assumes a little-endian host");
  auto put = [&](double v) { os.write(reinterpret_cast<const char*>(&v), sizeof v); };
  put(ens.dim());
  put(static_cast<double>(ens.n_paths()));
  put(static_cast<double>(ens.n_times()));
  for (double t : ens.times()) put(t);
  os.write(reinterpret_cast<const char*>(ens.data().data()),
           static_cast<std::streamsize>(ens.data().size() * sizeof(double)));
}

inline Ensemble read_ensemble_binary(std::istream& is) {
  auto get = [&] {
    double v = 0.0;
    is.read(reinterpret_cast<char*>(&v), sizeof v);
    require(static_cast<bool>(is), ErrorCode::InvalidArgument, "truncated ensemble file");
    return v;
  };
  const int d = static_cast<int>(get());
  const auto n_paths = static_cast<std::size_t>(get());
  const auto n_times = static_cast<std::size_t>(get());
  std::vector<double> times(n_times);
  for (auto& t : times) t = get();
  Ensemble ens(d, n_paths, times, 0);
  for (std::size_t p = 0; p < n_paths; ++p) {
    for (std::size_t k = 0; k < n_times; ++k) {
      for (int i = 0; i < d; ++i) ens.state(p, k)(i) = get();
    }
  }
  return ens;
}

}  // namespace hypo
