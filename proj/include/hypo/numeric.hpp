#pragma once

#include <Eigen/Dense>
#include <gsl/gsl_integration.h>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <mutex>
#include <memory>
#include <numbers>
#include <span>
#include <vector>

#include "hypo/error.hpp"

namespace hypo {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Pairwise (cascade) summation. The result depends only on the order of
/// the input, never on how the caller partitioned the work.
inline double pairwise_sum(std::span<const double> values) {
  constexpr std::size_t kLeaf = 16;
  if (values.size() <= kLeaf) {
    double acc = 0.0;
    for (double v : values) acc += v;
    return acc;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

inline double pairwise_sum(const std::vector<double>& values) {
  return pairwise_sum(std::span<const double>(values.data(), values.size()));
}

struct MeanAndError {
  double mean = 0.0;
  double standard_error = 0.0;
};

inline MeanAndError mean_and_standard_error(const std::vector<double>& samples) {
  MeanAndError out;
  if (samples.empty()) return out;
  const double n = static_cast<double>(samples.size());
  out.mean = pairwise_sum(samples) / n;
  if (samples.size() < 2) return out;
  std::vector<double> sq(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double dev = samples[i] - out.mean;
    sq[i] = dev * dev;
  }
  out.standard_error = std::sqrt(pairwise_sum(sq) / (n - 1.0) / n);
  return out;
}

/// Symmetric PSD square root through an eigendecomposition. Eigenvalues below
/// clamp_rel * lambda_max are set to zero. Returns the smallest raw eigenvalue
/// through min_eigenvalue when requested.
inline Mat psd_sqrt(const Mat& a, double clamp_rel = 1e-12, double* min_eigenvalue = nullptr) {
  if (a.rows() == 1) {
    if (min_eigenvalue) *min_eigenvalue = a(0, 0);
    return Mat::Constant(1, 1, std::sqrt(std::max(a(0, 0), 0.0)));
  }
  Eigen::SelfAdjointEigenSolver<Mat> eig(0.5 * (a + a.transpose()));
  Vec lambda = eig.eigenvalues();
  if (min_eigenvalue) *min_eigenvalue = lambda.minCoeff();
  const double cutoff = clamp_rel * std::max(lambda.maxCoeff(), 0.0);
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    lambda(i) = lambda(i) <= cutoff ? 0.0 : std::sqrt(lambda(i));
  }
  return eig.eigenvectors() * lambda.asDiagonal() * eig.eigenvectors().transpose();
}

inline double operator_norm(const Mat& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Mat> svd(m);
  return svd.singularValues()(0);
}

inline double smallest_singular_value(const Mat& m) {
  Eigen::JacobiSVD<Mat> svd(m);
  const auto& sv = svd.singularValues();
  return sv.size() == 0 ? 0.0 : sv(sv.size() - 1);
}

/// Gauss-Legendre rule on [-1, 1] with runtime order.
struct GaussLegendre {
  std::vector<double> nodes;
  std::vector<double> weights;

  explicit GaussLegendre(std::size_t order) {
    require(order >= 2, ErrorCode::InvalidArgument, "Gauss-Legendre order must be >= 2");
    std::unique_ptr<gsl_integration_glfixed_table, decltype(&gsl_integration_glfixed_table_free)>
        table(gsl_integration_glfixed_table_alloc(order), &gsl_integration_glfixed_table_free);
    nodes.resize(order);
    weights.resize(order);
    for (std::size_t i = 0; i < order; ++i) {
      gsl_integration_glfixed_point(-1.0, 1.0, i, &nodes[i], &weights[i], table.get());
    }
  }

  std::size_t size() const { return nodes.size(); }
};

/// Cached rules, one per order.
inline const GaussLegendre& gauss_legendre(std::size_t order) {
  static std::mutex mutex;
  static std::map<std::size_t, std::unique_ptr<GaussLegendre>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[order];
  if (!slot) slot = std::make_unique<GaussLegendre>(order);
  return *slot;
}

/// Gauss-Hermite rule for the weight exp(-z^2/2). `weights` integrate
/// g(z) exp(-z^2/2); `plain_weights` integrate g(z) directly.
struct GaussHermite {
  std::vector<double> nodes;
  std::vector<double> weights;
  std::vector<double> plain_weights;

  explicit GaussHermite(std::size_t order) {
    require(order >= 1, ErrorCode::InvalidArgument, "Gauss-Hermite order must be >= 1");
    std::unique_ptr<gsl_integration_fixed_workspace, decltype(&gsl_integration_fixed_free)> ws(
        gsl_integration_fixed_alloc(gsl_integration_fixed_hermite, order, 0.0, 0.5, 0.0, 0.0),
        &gsl_integration_fixed_free);
    require(ws != nullptr, ErrorCode::InvalidArgument, "Gauss-Hermite rule allocation failed");
    const double* x = gsl_integration_fixed_nodes(ws.get());
    const double* w = gsl_integration_fixed_weights(ws.get());
    nodes.assign(x, x + order);
    weights.assign(w, w + order);
    plain_weights.resize(order);
    for (std::size_t i = 0; i < order; ++i) plain_weights[i] = weights[i] * std::exp(0.5 * nodes[i] * nodes[i]);
  }

  std::size_t size() const { return nodes.size(); }
};

inline const GaussHermite& gauss_hermite(std::size_t order) {
  static std::mutex mutex;
  static std::map<std::size_t, std::unique_ptr<GaussHermite>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[order];
  if (!slot) slot = std::make_unique<GaussHermite>(order);
  return *slot;
}

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

}  // namespace hypo
