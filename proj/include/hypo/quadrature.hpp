#pragma once

#include <cmath>
#include <optional>
#include <utility>
#include <string>
#include <vector>

#include "hypo/error.hpp"
#include "hypo/numeric.hpp"

namespace hypo {

/// Quadrature settings shared by the Green's-operator routines.
struct QuadratureSpec {
  /// Half-width of the integration box per axis. For Gaussian frames the
  /// radius is measured in whitened (standard deviation) units.
  std::vector<double> radius;
  /// Gauss-Legendre nodes per axis.
  std::vector<int> nodes;
  /// Nodes per time panel.
  int time_nodes = 8;
  /// "gauss-legendre" (box of half-width radius) or "gauss-hermite"
  /// (radius unused, exact for Gaussian times polynomial in the frame).
  std::string scheme = "gauss-legendre";
  /// Optional time window outside of which sources are treated as zero.
  std::optional<std::pair<double, double>> time_window;
  /// Equal panels the time window is split into.
  int window_panels = 16;
  /// Optional spatial focus (center, covariance). When set, spatial frames
  /// are the product of the kernel Gaussian with this one.
  std::optional<std::pair<Vec, Mat>> focus;

  bool hermite() const { return scheme == "gauss-hermite"; }

  void validate() const {
    require(scheme == "gauss-legendre" || scheme == "gauss-hermite", ErrorCode::InvalidArgument,
            "unknown quadrature scheme " + scheme);
    require(!radius.empty() && radius.size() == nodes.size(), ErrorCode::InvalidArgument,
            "radius and nodes must have one entry per axis");
    for (double r : radius) require(r > 0.0, ErrorCode::InvalidArgument, "quadrature radius must be positive");
    for (int n : nodes) require(n >= 2, ErrorCode::InvalidArgument, "need at least 2 nodes per axis");
    require(time_nodes >= 2, ErrorCode::InvalidArgument, "need at least 2 time nodes");
    require(window_panels >= 1, ErrorCode::InvalidArgument, "need at least one window panel");
    if (time_window) {
      require(time_window->first < time_window->second, ErrorCode::InvalidArgument, "empty time window");
    }
    if (focus) {
      require(focus->first.size() == focus->second.rows() && focus->second.rows() == focus->second.cols(),
              ErrorCode::DimensionMismatch, "focus center and covariance disagree");
    }
  }

  /// Uniform spec over `axes` axes.
  static QuadratureSpec uniform(int axes, double r, int n, int time_n = 8) {
    QuadratureSpec spec;
    spec.radius.assign(static_cast<std::size_t>(axes), r);
    spec.nodes.assign(static_cast<std::size_t>(axes), n);
    spec.time_nodes = time_n;
    return spec;
  }
};

/// Tensor Gauss-Legendre nodes on the affine image center + L [-1,1]^d of
/// per-axis half-widths. Calls fn(point, weight) for every node; weights
/// include the Jacobian |det L| * prod(half widths).
template <class Visit>
void for_each_frame_node(const Vec& center, const Mat& frame, const std::vector<double>& half_width,
                         const std::vector<int>& order, Visit&& visit) {
  const auto d = static_cast<std::size_t>(center.size());
  require(half_width.size() == d && order.size() == d, ErrorCode::DimensionMismatch,
          "quadrature spec dimension does not match the frame");
  std::vector<const GaussLegendre*> rules(d);
  double jac = std::abs(frame.determinant());
  for (std::size_t a = 0; a < d; ++a) {
    rules[a] = &gauss_legendre(static_cast<std::size_t>(order[a]));
    jac *= half_width[a];
  }
  std::vector<std::size_t> idx(d, 0);
  Vec z(static_cast<Eigen::Index>(d));
  while (true) {
    double w = jac;
    for (std::size_t a = 0; a < d; ++a) {
      z(static_cast<Eigen::Index>(a)) = half_width[a] * rules[a]->nodes[idx[a]];
      w *= rules[a]->weights[idx[a]];
    }
    visit(Vec(center + frame * z), w);
    std::size_t a = 0;
    for (; a < d; ++a) {
      if (++idx[a] < rules[a]->size()) break;
      idx[a] = 0;
    }
    if (a == d) break;
  }
}

/// Nodes of a spec over the frame center + L z. Gauss-Legendre covers
/// |z_a| <= radius[a]; Gauss-Hermite covers all of R^d.
template <class Visit>
void for_each_spec_node(const Vec& center, const Mat& frame, const QuadratureSpec& spec, Visit&& visit) {
  if (!spec.hermite()) {
    for_each_frame_node(center, frame, spec.radius, spec.nodes, visit);
    return;
  }
  const auto d = static_cast<std::size_t>(center.size());
  require(spec.nodes.size() == d, ErrorCode::DimensionMismatch, "quadrature spec dimension does not match the frame");
  std::vector<const GaussHermite*> rules(d);
  for (std::size_t a = 0; a < d; ++a) rules[a] = &gauss_hermite(static_cast<std::size_t>(spec.nodes[a]));
  const double jac = std::abs(frame.determinant());
  std::vector<std::size_t> idx(d, 0);
  Vec z(static_cast<Eigen::Index>(d));
  while (true) {
    double w = jac;
    for (std::size_t a = 0; a < d; ++a) {
      z(static_cast<Eigen::Index>(a)) = rules[a]->nodes[idx[a]];
      w *= rules[a]->plain_weights[idx[a]];
    }
    visit(Vec(center + frame * z), w);
    std::size_t a = 0;
    for (; a < d; ++a) {
      if (++idx[a] < rules[a]->size()) break;
      idx[a] = 0;
    }
    if (a == d) break;
  }
}

/// Integral of fn over center + L [-R, R]^d with an order-n rule per axis.
template <class F>
double integrate_frame(const Vec& center, const Mat& frame, double radius, int order, F&& fn) {
  const auto d = static_cast<std::size_t>(center.size());
  std::vector<double> terms;
  for_each_frame_node(center, frame, std::vector<double>(d, radius), std::vector<int>(d, order),
                      [&](const Vec& y, double w) { terms.push_back(w * fn(y)); });
  return pairwise_sum(terms);
}

/// Gauss-Legendre nodes and weights mapped to [lo, hi].
inline void interval_rule(double lo, double hi, int order, std::vector<double>& nodes,
                          std::vector<double>& weights) {
  const GaussLegendre& rule = gauss_legendre(static_cast<std::size_t>(order));
  const double half = 0.5 * (hi - lo);
  const double mid = 0.5 * (hi + lo);
  nodes.resize(rule.size());
  weights.resize(rule.size());
  for (std::size_t i = 0; i < rule.size(); ++i) {
    nodes[i] = mid + half * rule.nodes[i];
    weights[i] = half * rule.weights[i];
  }
}

}  // namespace hypo
