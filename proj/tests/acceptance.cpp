// Acceptance run: one PASS/FAIL line per criterion. Library results are
// compared against oracles computed here (Eigen's matrix exponential, the
// closed-form Kolmogorov density, GSL adaptive integration and the
// closed-form bump convolutions of green_oracle.hpp).

#include <gsl/gsl_errno.h>
#include <gsl/gsl_integration.h>

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <iterator>
#include <memory>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "green_oracle.hpp"
#include "hypo/experiments.hpp"
#include "test_support.hpp"

using namespace hypo;
using hypo::testing::KolmogorovBumpOracle;
using hypo::testing::bulk_target;
using hypo::testing::max_abs;
using hypo::testing::random_point;
using hypo::testing::random_vec;
using hypo::testing::rel_err;

namespace fs = std::filesystem;

namespace {

const fs::path kScratch = fs::path("acceptance_out");

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void check(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << "[failed: " << what << "] ";
    }
  }

  template <class T>
  Outcome& operator<<(const T& v) {
    detail << v;
    return *this;
  }
};

void absorb(Outcome& out, const Report& r) {
  for (const auto& c : r.contracts) out.check(c.pass, r.subcommand + "." + c.name);
}

double value_of(const Report& r, const std::string& name) {
  for (const auto& c : r.contracts) {
    if (c.name == name) return c.value;
  }
  throw std::runtime_error(r.subcommand + " has no contract " + name);
}

int workers() { return static_cast<int>(std::max(4u, std::thread::hardware_concurrency())); }

/// The shipped Kolmogorov config with JSON-level overrides, as the CLI does.
ExperimentConfig config_with(const json& overrides, const std::string& out) {
  std::ifstream in(fs::path(HYPO_SOURCE_DIR) / "configs" / "kolmogorov.json");
  json j = json::parse(in);
  if (overrides.contains("grid")) j.erase("check_times");
  j.merge_patch(overrides);
  j["workers"] = workers();
  j["output"]["dir"] = (kScratch / out).string();
  return parse_config(j);
}

std::vector<StructuralMatrix> structures() {
  std::vector<StructuralMatrix> out = hypo::testing::sample_structures();
  Mat b1(2, 3), b2(1, 2);
  b1 << 1.0, 0.3, -0.4, 0.0, 0.9, 0.5;
  b2 << -0.6, 1.1;
  out.push_back(structure_from_blocks({3, 2, 1}, {b1, b2}));
  return out;
}

/// Constant identity and a three-piece random profile for every structure.
std::vector<TransitionKernel> random_kernels(std::mt19937_64& rng) {
  std::vector<TransitionKernel> out;
  for (const auto& sm : structures()) {
    out.emplace_back(sm, CovarianceProfile::identity(sm.diffusive_dim()));
    out.emplace_back(sm, hypo::testing::random_profile(rng, sm.diffusive_dim(), 2.0, 3, -1.0, 1.0));
  }
  return out;
}

double adaptive(double lo, double hi, const std::function<double(double)>& fn, double epsrel = 1e-11) {
  std::unique_ptr<gsl_integration_workspace, decltype(&gsl_integration_workspace_free)> ws(
      gsl_integration_workspace_alloc(1000), &gsl_integration_workspace_free);
  gsl_function f;
  f.function = [](double t, void* p) { return (*static_cast<const std::function<double(double)>*>(p))(t); };
  f.params = const_cast<std::function<double(double)>*>(&fn);
  double result = 0.0, err = 0.0;
  gsl_integration_qag(&f, lo, hi, 1e-15, epsrel, 1000, GSL_INTEG_GAUSS61, ws.get(), &result, &err);
  return result;
}

/// Nested adaptive integral over R^2 against a Gaussian frame (mean m, cov c):
/// outer coordinate over m0 +- R sd0, inner over its conditional window.
double gaussian_window_2d(const Vec& m, const Mat& c, double radius, const std::function<double(const Vec&)>& fn) {
  const double sd0 = std::sqrt(c(0, 0));
  const double slope = c(1, 0) / c(0, 0);
  const double csd = std::sqrt(c(1, 1) - c(1, 0) * c(1, 0) / c(0, 0));
  return adaptive(m(0) - radius * sd0, m(0) + radius * sd0, [&](double y0) {
    const double cm = m(1) + slope * (y0 - m(0));
    return adaptive(cm - radius * csd, cm + radius * csd, [&](double y1) {
      Vec y(2);
      y << y0, y1;
      return fn(y);
    });
  });
}

/// p(s,x; t,y) for dX = dW, dY = X dt.
double kolmogorov_density(double tau, const Vec& x, const Vec& y) {
  Vec r(2);
  r << y(0) - x(0), y(1) - x(1) - tau * x(0);
  const double q = 4 / tau * r(0) * r(0) - 12 / (tau * tau) * r(0) * r(1) + 12 / (tau * tau * tau) * r(1) * r(1);
  return std::sqrt(3.0) / (std::numbers::pi * tau * tau) * std::exp(-0.5 * q);
}

Mat kolmogorov_cov(double tau) { return KolmogorovBumpOracle::kernel_cov(tau); }

// ---------------------------------------------------------------------------

Outcome group_suite() {
  Outcome out;
  std::mt19937_64 rng(101);
  std::normal_distribution<double> normal;
  double worst_exp = 0.0, worst_compose = 0.0;
  for (const auto& sm : structures()) {
    ExperimentConfig cfg = config_with({{"budget", {{"cases", 1000}}}}, "group");
    cfg.structure = sm;
    absorb(out, run_group_check(cfg));
    for (int c = 0; c < 1000; ++c) {
      const double t = 3.0 * normal(rng);
      const Mat oracle = (t * sm.matrix()).exp();
      worst_exp = std::max(worst_exp, max_abs(matrix_exp(sm, t) - oracle) / std::max(1.0, max_abs(oracle)));
      const GroupPoint p = random_point(rng, sm.dim()), q = random_point(rng, sm.dim());
      const Vec x = (q.s * sm.matrix()).exp() * p.x + q.x;
      const GroupPoint r = compose(sm, p, q);
      worst_compose = std::max(worst_compose, std::max(std::abs(r.s - p.s - q.s), (r.x - x).norm()) /
                                                  std::max(1.0, x.norm()));
    }
  }
  out.check(worst_exp <= 1e-12, "matrix_exp vs Pade exponential");
  out.check(worst_compose <= 1e-10, "compose vs exponential oracle");
  out << structures().size() << " structures x 1000 cases; exp err " << worst_exp << ", compose err " << worst_compose;
  return out;
}

Outcome closed_forms() {
  Outcome out;
  const TransitionKernel k(kolmogorov_structure(), CovarianceProfile::identity(1));
  double worst_cov = 0.0;
  for (double t : {0.1, 0.5, 1.0, 2.0, 3.7}) {
    worst_cov = std::max(worst_cov, max_abs(k.covariance(0.0, t) - kolmogorov_cov(t)) / std::max(1.0, t * t * t));
  }
  const double value = density(k, {0.0, Vec::Zero(2)}, {1.0, Vec::Zero(2)});
  const double value_err = std::abs(value - std::sqrt(3.0) / std::numbers::pi);
  double worst_scale = 0.0;
  for (const auto& sm : structures()) {
    const Vec d2 = dilation_diagonal(sm, 2.0);
    const Mat scaled = d2.asDiagonal() * reference_covariance(sm, 1.0) * d2.asDiagonal();
    worst_scale = std::max(worst_scale, max_abs(reference_covariance(sm, 4.0) - scaled) / max_abs(scaled));
  }
  std::mt19937_64 rng(102);
  double worst_density = 0.0;
  for (int i = 0; i < 200; ++i) {
    const GroupPoint p = random_point(rng, 2);
    const GroupPoint q = bulk_target(rng, k, p, 0.1 + std::abs(p.s), 1.5);
    worst_density = std::max(worst_density, rel_err(density(k, p, q), kolmogorov_density(q.s - p.s, p.x, q.x)));
  }
  out.check(worst_cov <= 1e-12, "C(0,t)");
  out.check(value_err <= 1e-12, "sqrt(3)/pi");
  out.check(worst_scale <= 1e-12, "Chat(4) = delta_2 Chat(1) delta_2");
  out.check(worst_density <= 1e-12, "density vs closed form");
  out << "C(0,t) err " << worst_cov << ", p(0,0;1,0) err " << value_err << ", Chat scaling err " << worst_scale
      << ", closed-form density rel err " << worst_density;
  return out;
}

Outcome derivatives() {
  Outcome out;
  std::mt19937_64 rng(103);
  std::uniform_real_distribution<double> gap(0.5, 2.0);
  double worst_fd = 0.0;
  for (const auto& k : random_kernels(rng)) {
    const int d = k.dim();
    for (int trial = 0; trial < 10; ++trial) {
      GroupPoint p = random_point(rng, d, 0.4);
      p.s = -0.3;
      const GroupPoint q = bulk_target(rng, k, p, gap(rng));
      const DerivativeBundle b = derivative_bundle(k, p, q);
      auto pd = [&](const Vec& x, const Vec& y) { return density(k, {p.s, x}, {q.s, y}); };
      const TimeSlice ts = k.slice(p.s, q.s);
      const Mat back = matrix_exp(k.structure(), p.s - q.s);
      const Vec sx = (back * ts.covariance * back.transpose()).inverse().diagonal().cwiseSqrt().cwiseInverse();
      const Vec sy = ts.cov_inv.diagonal().cwiseSqrt().cwiseInverse();
      Vec gx(d), gy(d);
      for (int i = 0; i < d; ++i) {
        const Vec ex = Vec::Unit(d, i) * (1e-5 * sx(i));
        const Vec ey = Vec::Unit(d, i) * (1e-5 * sy(i));
        gx(i) = (pd(p.x + ex, q.x) - pd(p.x - ex, q.x)) / 2e-5;
        gy(i) = (pd(p.x, q.x + ey) - pd(p.x, q.x - ey)) / 2e-5;
      }
      const Vec ax = b.grad_x().cwiseProduct(sx);
      const Vec ay = b.grad_y().cwiseProduct(sy);
      worst_fd = std::max(worst_fd, (gx - ax).norm() / std::max(ax.norm(), b.density));
      worst_fd = std::max(worst_fd, (gy - ay).norm() / std::max(ay.norm(), b.density));
      const double h = 1e-3;
      Mat hx(d, d), hy(d, d);
      for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) {
          const Vec ei = Vec::Unit(d, i) * (h * sx(i)), ej = Vec::Unit(d, j) * (h * sx(j));
          const Vec fi = Vec::Unit(d, i) * (h * sy(i)), fj = Vec::Unit(d, j) * (h * sy(j));
          hx(i, j) = (pd(p.x + ei + ej, q.x) - pd(p.x + ei - ej, q.x) - pd(p.x - ei + ej, q.x) +
                      pd(p.x - ei - ej, q.x)) / (4 * h * h);
          hy(i, j) = (pd(p.x, q.x + fi + fj) - pd(p.x, q.x + fi - fj) - pd(p.x, q.x - fi + fj) +
                      pd(p.x, q.x - fi - fj)) / (4 * h * h);
        }
      }
      const Mat ahx = sx.asDiagonal() * b.hessian_x() * sx.asDiagonal();
      const Mat ahy = sy.asDiagonal() * b.hessian_y() * sy.asDiagonal();
      worst_fd = std::max(worst_fd, max_abs(hx - ahx) / std::max(max_abs(ahx), b.density));
      worst_fd = std::max(worst_fd, max_abs(hy - ahy) / std::max(max_abs(ahy), b.density));
    }
  }
  double worst_residual = 0.0;
  std::uniform_real_distribution<double> start(-0.9, 0.9);
  for (const auto& k : random_kernels(rng)) {
    for (int trial = 0; trial < 50; ++trial) {
      GroupPoint p = random_point(rng, k.dim());
      p.s = start(rng);
      const GroupPoint q = bulk_target(rng, k, p, gap(rng), 1.5);
      worst_residual = std::max(worst_residual, std::abs(backward_residual(k, p, q)) / density(k, p, q));
    }
  }
  const TransitionKernel kol(kolmogorov_structure(), CovarianceProfile::identity(1));
  Vec x(2), y(2);
  x << 0.2, -0.1;
  y << 0.5, 0.3;
  double worst_cancel = 0.0;
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      const auto r = cancellation_check(kol, i, j, {0.0, x}, {1.0, y}, 12.0, 64);
      worst_cancel = std::max({worst_cancel, std::abs(r.over_x), std::abs(r.over_y)});
    }
  }
  out.check(worst_fd <= 1e-5, "central differences");
  out.check(worst_residual <= 1e-9, "backward residual");
  out.check(worst_cancel <= 1e-6, "cancellation");
  out << "max rel FD err " << worst_fd << ", backward residual / p " << worst_residual << ", cancellation "
      << worst_cancel << " (R = 12, order 64)";
  return out;
}

Outcome normalization() {
  Outcome out;
  gsl_set_error_handler_off();
  const TransitionKernel k(kolmogorov_structure(), CovarianceProfile::identity(1));
  Vec x(2);
  x << 0.4, -0.7;
  std::mt19937_64 rng(104);
  double worst_mass = 0.0, worst_ck = 0.0;
  for (double gap : {0.25, 1.0, 4.0}) {
    const TimeSlice ts = k.slice(0.0, gap);
    const double mass = gaussian_window_2d(ts.expm * x, kolmogorov_cov(gap), 12.0,
                                           [&](const Vec& y) { return std::exp(log_density(ts, x, y)); });
    worst_mass = std::max(worst_mass, std::abs(mass - 1.0));

    const double u = 0.4 * gap;
    const TimeSlice a = k.slice(0.0, u);
    const TimeSlice b = k.slice(u, gap);
    for (int trial = 0; trial < 3; ++trial) {
      const Vec y = bulk_target(rng, k, {0.0, x}, gap).x;
      const Mat ea = KolmogorovBumpOracle::expm(u), eb = KolmogorovBumpOracle::expm(gap - u);
      const Mat ia = kolmogorov_cov(u).inverse(), ib = kolmogorov_cov(gap - u).inverse();
      const Mat cov = (ia + eb.transpose() * ib * eb).inverse();
      const Vec mean = cov * (ia * ea * x + eb.transpose() * ib * y);
      const double conv = gaussian_window_2d(mean, cov, 12.0, [&](const Vec& z) {
        return std::exp(log_density(a, x, z) + log_density(b, z, y));
      });
      worst_ck = std::max({worst_ck, rel_err(conv, density(k, {0.0, x}, {gap, y})),
                           rel_err(conv, kolmogorov_density(gap, x, y))});
    }
  }
  out.check(worst_mass <= 1e-6, "normalization");
  out.check(worst_ck <= 1e-5, "Chapman-Kolmogorov");
  out << "gaps 0.25, 1, 4 (GSL nested adaptive); |mass - 1| " << worst_mass << ", CK rel err " << worst_ck;
  return out;
}

Outcome scaling_laws() {
  Outcome out;
  std::mt19937_64 rng(105);
  std::uniform_real_distribution<double> lam(0.4, 2.5);
  std::uniform_real_distribution<double> time(-2.0, 2.0);
  std::uniform_real_distribution<double> gap(0.2, 2.0);
  double worst_left = 0.0, worst_cov = 0.0, worst_dil = 0.0, worst_quad = 0.0;
  std::unique_ptr<gsl_integration_glfixed_table, decltype(&gsl_integration_glfixed_table_free)> gl(
      gsl_integration_glfixed_table_alloc(24), &gsl_integration_glfixed_table_free);
  int cases = 0;
  for (const auto& k : random_kernels(rng)) {
    const auto& sm = k.structure();
    const int d0 = sm.diffusive_dim();
    for (int trial = 0; trial < 50; ++trial, ++cases) {
      const GroupPoint p = random_point(rng, sm.dim(), 0.5);
      const GroupPoint q = bulk_target(rng, k, p, gap(rng));
      const GroupPoint z = random_point(rng, sm.dim(), 0.7);
      const TransitionKernel k1(sm, k.profile().shifted(z.s));
      worst_left = std::max(worst_left, std::abs(std::expm1(density(k, compose(sm, z, p), compose(sm, z, q), true) -
                                                            density(k1, p, q, true))));
      const double l = lam(rng);
      const TransitionKernel k2(sm, k.profile().time_scaled(l));
      const double dl = density(k, dilate(sm, l, p), dilate(sm, l, q), true);
      const double dr = (2 - sm.homogeneous_dim()) * std::log(l) + density(k2, p, q, true);
      worst_dil = std::max(worst_dil, std::abs(std::expm1(dl - dr)));

      double s = time(rng), t = time(rng);
      if (s > t) std::swap(s, t);
      const Vec dg = dilation_diagonal(sm, l);
      const Mat lhs = k.covariance(l * l * s, l * l * t);
      const Mat rhs = dg.asDiagonal() * k2.covariance(s, t) * dg.asDiagonal();
      for (Eigen::Index i = 0; i < lhs.rows(); ++i) {
        for (Eigen::Index j = 0; j < lhs.cols(); ++j) {
          const double scale = std::sqrt(std::abs(lhs(i, i) * lhs(j, j)));
          worst_cov = std::max(worst_cov, std::abs(lhs(i, j) - rhs(i, j)) / scale);
        }
      }
      // Gauss-Legendre on each constant piece of the integrand e^{(t-u)B} A(u) e^{(t-u)B^T}.
      if (trial < 5) {
        Mat quad = Mat::Zero(sm.dim(), sm.dim());
        std::vector<double> cuts = {s};
        for (double b : k.profile().breakpoints()) {
          if (b > s && b < t) cuts.push_back(b);
        }
        cuts.push_back(t);
        for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
          Mat a = Mat::Zero(sm.dim(), sm.dim());
          a.topLeftCorner(d0, d0) = k.profile().at(0.5 * (cuts[c] + cuts[c + 1]));
          for (std::size_t n = 0; n < gl->n; ++n) {
            double node = 0.0, weight = 0.0;
            gsl_integration_glfixed_point(cuts[c], cuts[c + 1], n, &node, &weight, gl.get());
            const Mat e = ((t - node) * sm.matrix()).exp();
            quad += weight * e * a * e.transpose();
          }
        }
        if (t > s) worst_quad = std::max(worst_quad, max_abs(quad - k.covariance(s, t)) / max_abs(quad));
      }
    }
  }
  out.check(worst_left <= 1e-10, "left invariance");
  out.check(worst_cov <= 1e-10, "covariance scaling");
  out.check(worst_dil <= 1e-10, "density dilation");
  out.check(worst_quad <= 1e-12, "covariance vs quadrature oracle");
  out << cases << " cases incl. piecewise profiles; left inv " << worst_left << ", cov scaling " << worst_cov
      << ", dilation " << worst_dil << ", cov vs GL oracle " << worst_quad;
  return out;
}

std::vector<KolmogorovBumpOracle> five_bumps() {
  struct Row {
    double t0, sigma, c0, c1, v00, v01, v11;
  };
  const Row rows[] = {{1.0, 0.15, 0.3, -0.2, 0.25, 0.05, 0.16},
                      {0.8, 0.2, 0.0, 0.0, 0.2, 0.0, 0.2},
                      {1.2, 0.1, -0.4, 0.5, 0.3, -0.1, 0.2},
                      {1.0, 0.12, 0.6, 0.1, 0.15, 0.0, 0.35},
                      {0.9, 0.12, -0.2, -0.6, 0.2, 0.08, 0.25}};
  std::vector<KolmogorovBumpOracle> out;
  for (const Row& r : rows) {
    KolmogorovBumpOracle o;
    o.t0 = r.t0;
    o.sigma_t = r.sigma;
    o.center = Vec(2);
    o.center << r.c0, r.c1;
    o.cov = Mat(2, 2);
    o.cov << r.v00, r.v01, r.v01, r.v11;
    out.push_back(o);
  }
  return out;
}

json bump_json(const KolmogorovBumpOracle& o) {
  return {{"t0", o.t0}, {"sigma_t", o.sigma_t}, {"center", io::to_json(o.center)}, {"cov", io::to_json(o.cov)}};
}

Outcome lp_estimate() {
  Outcome out;
  json sources = json::array();
  for (const auto& o : five_bumps()) sources.push_back(bump_json(o));
  const ExperimentConfig cfg = config_with({{"sources", sources}, {"p", 4.0}, {"jmax", 8}}, "lp");
  const Report report = run_lp_estimate(cfg);
  absorb(out, report);
  const StructuralMatrix& sm = cfg.structure;
  const TransitionKernel k = cfg.kernel();
  const double eps = pow4(-cfg.jmax);
  const std::vector<KolmogorovBumpOracle> oracles = five_bumps();
  double worst_lib = 0.0, worst_oracle = 0.0, worst_fd = 0.0;
  for (std::size_t i = 0; i < cfg.sources.size(); ++i) {
    const KolmogorovBumpOracle& o = oracles[i];
    const SourceFunction f = cfg.sources[i].source();
    const QuadratureSpec spec = cfg.sources[i].focused(cfg.quadrature);
    const GroupPoint p{o.t0 - 0.3, o.center};
    const double horizon = p.s + pow4(cfg.jmax + 1);
    const double truncated = apply_truncated(cfg.tuple, sm, cfg.jmax, f, p, spec);
    const double second = green_second_derivative(k, f, p, horizon, spec, 0, 0, cfg.jmax);
    const double closed = o.green(p.s, p.x, horizon, eps, 2, 0, 0);
    const double h = 1e-3;
    const Vec e = Vec::Unit(2, 0) * h;
    const double fd = (o.green(p.s, p.x + e, horizon, 0.0, 0) - 2 * o.green(p.s, p.x, horizon, 0.0, 0) +
                       o.green(p.s, p.x - e, horizon, 0.0, 0)) / (h * h);
    const double scale = std::abs(closed);
    worst_lib = std::max(worst_lib, std::abs(truncated - second) / scale);
    worst_oracle = std::max({worst_oracle, std::abs(truncated - closed) / scale, std::abs(second - closed) / scale});
    worst_fd = std::max({worst_fd, std::abs(fd - closed) / scale, std::abs(fd - truncated) / scale,
                         std::abs(fd - second) / scale});
  }
  out.check(worst_lib <= 1e-8, "apply_truncated vs green_second_derivative");
  out.check(worst_oracle <= 1e-7, "library vs closed-form oracle");
  out.check(worst_fd <= 1e-4, "finite-difference oracle");
  const auto& results = report.results;
  double worst_inc = 0.0;
  for (const auto& b : results.at("bumps")) worst_inc = std::max(worst_inc, b.at("increment").get<double>());
  out << "5 bumps, p = 4; plateau increment (j 6 -> 8) " << worst_inc << ", max ratio "
      << results.at("max_ratio").get<double>() << "; rel diffs: truncated/second " << worst_lib << ", vs closed form "
      << worst_oracle << ", vs FD " << worst_fd;
  return out;
}

Outcome sampler() {
  Outcome out;
  const Report sample = run_sample(config_with({{"budget", {{"paths", 100000}}}}, "sample"));
  absorb(out, sample);
  const json law = {{"budget", {{"paths", 4000}, {"mesh", 1e-3}}}};
  const Report same = run_uniqueness_compare(config_with(law, "euler_true"));
  absorb(out, same);
  json rejecting = law;
  rejecting["budget"]["permutations"] = 499;
  ExperimentConfig tampered = config_with(rejecting, "euler_tampered");
  tampered.drift_shift(0) += 0.5;
  tampered.expect_reject = true;
  const Report shifted = run_uniqueness_compare(tampered);
  absorb(out, shifted);
  const json mg = {{"budget", {{"paths", 20000}}}};
  const Report mg_true = run_mg_residual(config_with(mg, "mg_true"));
  absorb(out, mg_true);
  ExperimentConfig mg_bad = config_with(mg, "mg_tampered");
  mg_bad.drift_shift(0) += 1.0;
  mg_bad.expect_reject = true;
  const Report mg_shifted = run_mg_residual(mg_bad);
  absorb(out, mg_shifted);
  out << "1e5 paths: max mean z " << value_of(sample, "mean_standard_errors") << ", cov rel err "
      << value_of(sample, "covariance_relative_error") << "; Euler vs exact min p " << value_of(same, "exact_vs_euler")
      << ", tampered min p " << value_of(shifted, "exact_vs_euler") << "; residual z "
      << value_of(mg_true, "residual_within_3se") << ", tampered z " << value_of(mg_shifted, "residual_beyond_5se");
  return out;
}

Outcome green_functional_identity() {
  Outcome out;
  const ExperimentConfig cfg = config_with({{"horizons", {0.5, 1.0, 2.0}}, {"budget", {{"paths", 20000}}}}, "green");
  const Report report = run_green_compare(cfg);
  absorb(out, report);
  KolmogorovBumpOracle o = five_bumps().front();
  const TransitionKernel k = cfg.kernel();
  const SourceFunction f = cfg.sources.front().source();
  const QuadratureSpec spec = cfg.sources.front().focused(cfg.quadrature);
  double worst = 0.0;
  for (double T : cfg.horizons) {
    worst = std::max(worst, rel_err(green_apply(k, f, cfg.start, T, spec), o.green(cfg.start.s, cfg.start.x, T, 0.0, 0)));
  }
  out.check(worst <= 1e-8, "quadrature vs closed-form oracle");
  const json& table = report.results.at("krylov_table");
  out.check(table.size() == 3, "table rows for T = 0.5, 1, 2");
  out << "MC vs quadrature z " << value_of(report, "green_functional_within_3se") << ", table z max "
      << value_of(report, "table_within_3se")
      << ", quadrature vs closed form " << worst << ", fitted constant "
      << report.results.at("fitted_constant").get<double>();
  return out;
}

Outcome transform_suite() {
  Outcome out;
  const json small = {{"grid", "0:0.25:1"}, {"budget", {{"paths", 2000}, {"mesh", 0.002}}}};
  const Report zy = run_transform_check(config_with(small, "zy"), "zy");
  absorb(out, zy);
  const Report push = run_transform_check(config_with(small, "pushforward"), "pushforward");
  absorb(out, push);

  // Padding: lifted dynamics project back onto the original simulation exactly.
  const Mat zero = Mat::Zero(1, 1);
  Mat a1(1, 2);
  a1 << 1.0, 0.5;
  const BSecond b = catalog_bsecond("quadratic-perturbed", Mat::Constant(1, 1, 0.1), a1, zero, 0.04);
  ProbeRegion probe;
  probe.center = Vec::Zero(3);
  probe.half_width = 3.0;
  const Transform tr = make_transform(b, Mat::Constant(1, 1, 0.1), a1, zero, probe);
  Mat ext(1, 2);
  ext << -0.5, 1.0;
  const Transform padded = pad_dimensions(tr, ext);
  CoefficientField f;
  f.d0 = 2;
  f.d = 3;
  f.a = [](double, const Vec& x) { return Mat((1.0 + 0.1 * std::tanh(x(2))) * Mat::Identity(2, 2)); };
  f.b = [b](double t, const Vec& x) {
    Vec v(3);
    v << -x(0), 0.2 * x(1), b(t, x)(0);
    return v;
  };
  const GroupPoint start{0.0, Vec((Vec(3) << 0.2, -0.1, 0.4).finished())};
  const GroupPoint lifted{0.0, Vec((Vec(4) << 0.2, -0.1, 0.4, 0.0).finished())};
  const Ensemble base = euler_simulate(f, start, 1e-2, 1.0, 12, 30);
  const Ensemble big = euler_simulate(pad_field(f, ext), lifted, 1e-2, 1.0, 12, 30);
  out.check(padded.square() && project_padding(big, 3).data() == base.data(), "padding projection");
  double worst_pad = 0.0;
  for (const GroupPoint& p : padded.probe().sample(4)) {
    worst_pad = std::max(worst_pad, (invert(padded, forward(padded, p)).x - p.x).norm());
  }
  out.check(worst_pad <= 1e-10, "padded round trip");

  // Cutoff: eta bounds and plateaus, equality inside, bounded deviation and
  // affine tail on a probe grid.
  bool eta_ok = true;
  for (double z = -4.0; z <= 4.0; z += 0.01) {
    const double e = Eta::value(z);
    eta_ok = eta_ok && e >= 0.0 && e <= 1.0 && (std::abs(z) > 1.0 || e == 1.0) && (std::abs(z) < 3.0 || e == 0.0) &&
             std::abs(Eta::derivative(z)) <= 1.0 + 1e-12;
  }
  out.check(eta_ok, "eta constraints");
  const DifferentiableMap fn{
      [](const Vec& y) { return Vec((Vec(1) << std::sin(2 * y(0)) * std::cos(y(1)) + y(1) * y(1)).finished()); },
      [](const Vec& y) {
        Mat j(1, 2);
        j << 2 * std::cos(2 * y(0)) * std::cos(y(1)), -std::sin(2 * y(0)) * std::sin(y(1)) + 2 * y(1);
        return j;
      }};
  Vec c(2);
  c << 0.3, -0.5;
  const double eps = 0.05;
  const SmoothCutoff g = smooth_cutoff(fn, c, 1.0, eps);
  std::vector<Vec> grid;
  bool inside = true, tail = true;
  for (double u = -5.0; u <= 5.0; u += 0.05) {
    for (double v = -5.0; v <= 5.0; v += 0.05) {
      const Vec y = c + g.radius() * Vec((Vec(2) << u, v).finished());
      grid.push_back(y);
      if ((y - c).norm() <= g.radius()) inside = inside && g(y) == fn.value(y);
      if ((y - c).norm() >= 4 * g.radius()) tail = tail && g.jacobian(y) == g.tangent();
    }
  }
  const double deviation = g.deviation(grid);
  out.check(inside, "cutoff equals map inside");
  out.check(deviation <= eps, "cutoff deviation");
  out.check(tail, "cutoff affine outside");
  out << "round trip " << value_of(push, "round_trip") << ", zy min p " << value_of(zy, "mapped_vs_reduced")
      << ", pushforward min p " << value_of(push, "pushforward_vs_mapped") << ", padding exact, cutoff deviation " << deviation
      << " on " << grid.size() << " grid points";
  return out;
}

std::string read_stripped(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (p.extension() != ".json") return text;
  std::istringstream lines(text);
  std::string out, line;
  while (std::getline(lines, line)) {
    if (line.find("\"generated_at\"") == std::string::npos) out += line + '\n';
  }
  return out;
}

Outcome reproducibility() {
  Outcome out;
  const std::string config = (fs::path(HYPO_SOURCE_DIR) / "configs" / "kolmogorov.json").string();
  const std::vector<std::string> runs = {
      "group-check --cases 200",
      "sample --paths 3000",
      "euler --paths 300 --grid 0:0.1:1 --mesh 0.01",
      "green-compare --paths 2000",
      "lp-estimate",
      "transform-check --example pushforward --grid 0:0.25:1 --paths 300 --mesh 0.01 --permutations 200",
  };
  int files = 0;
  for (const std::string& run : runs) {
    const std::string name = run.substr(0, run.find(' '));
    std::vector<fs::path> dirs;
    for (const char* tag : {"a", "b"}) {
      const fs::path dir = kScratch / "repro" / (name + "_" + tag);
      fs::remove_all(dir);
      const std::string cmd = std::string("\"") + HYPO_CLI + "\" " + run + " --config \"" + config +
                              "\" --seed 777 --workers 3 --out \"" + dir.string() + "\" > /dev/null";
      out.check(std::system(cmd.c_str()) == 0, name + " exit status");
      dirs.push_back(dir);
    }
    std::vector<fs::path> names;
    for (const auto& entry : fs::directory_iterator(dirs[0])) names.push_back(entry.path().filename());
    out.check(!names.empty(), name + " produced files");
    for (const fs::path& file : names) {
      ++files;
      out.check(fs::exists(dirs[1] / file) && read_stripped(dirs[0] / file) == read_stripped(dirs[1] / file),
                name + "/" + file.string() + " differs");
    }
  }
  out << runs.size() << " subcommands run twice (seed 777, 3 workers); " << files
      << " files byte-identical excluding generated_at";
  return out;
}

}  // namespace

int main() {
  fs::create_directories(kScratch);
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"group suite", group_suite},
      {"kernel closed forms", closed_forms},
      {"analytic derivatives", derivatives},
      {"normalization and Chapman-Kolmogorov", normalization},
      {"scaling laws", scaling_laws},
      {"L^p estimate", lp_estimate},
      {"sampler suite", sampler},
      {"Green functional identity", green_functional_identity},
      {"transform suite", transform_suite},
      {"reproducibility", reproducibility},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.check(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!o.pass) ++failures;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << i + 1 << " (" << criteria[i].first
              << "): " << o.detail.str() << " [" << std::fixed << std::setprecision(1) << secs << " s]"
              << std::defaultfloat << std::setprecision(6) << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
