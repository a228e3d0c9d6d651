#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "hypo/error.hpp"
#include "hypo/numeric.hpp"
#include "hypo/parallel.hpp"
#include "hypo/rng.hpp"
#include "hypo/simulate.hpp"

namespace hypo {

struct LawDistanceOptions {
  int permutations = 499;
  /// Paths used from each ensemble (the first ones).
  std::size_t max_samples = 1000;
  std::uint64_t seed = 0x5eedULL;
  /// Scale coordinates by the pooled standard deviation. The pooled sample
  /// is permutation invariant, so calibration is unaffected.
  bool standardize = true;
  int workers = 1;
};

struct ProjectionResult {
  std::size_t projection = 0;
  double statistic = 0.0;
  double p_value = 1.0;
};

struct TimeComparison {
  double t = 0.0;
  double energy = 0.0;
  double energy_p = 1.0;
  std::vector<ProjectionResult> ks;
};

struct LawDistanceReport {
  std::vector<TimeComparison> times;
  int permutations = 0;
  std::size_t n_a = 0;
  std::size_t n_b = 0;

  double min_energy_p() const {
    double out = 1.0;
    for (const auto& t : times) out = std::min(out, t.energy_p);
    return out;
  }

  /// Bonferroni across evaluation times on the energy p-values.
  bool rejected(double alpha) const {
    return !times.empty() && min_energy_p() < alpha / static_cast<double>(times.size());
  }
};

namespace detail {

/// nm/(n+m) times the V-statistic energy distance for the labelling `in_a`.
inline double energy_statistic(const std::vector<double>& dist, std::size_t total_n, const std::vector<char>& in_a,
                               std::size_t n, std::size_t m, double grand_total) {
  double s_aa = 0.0;
  double s_ab = 0.0;
  for (std::size_t i = 0; i < total_n; ++i) {
    const double* row = dist.data() + i * total_n;
    double r = 0.0;
    for (std::size_t j = 0; j < total_n; ++j) r += in_a[j] ? row[j] : 0.0;
    if (in_a[i]) {
      s_aa += r;
    } else {
      s_ab += r;
    }
  }
  const double s_bb = grand_total - s_aa - 2.0 * s_ab;
  const double dn = static_cast<double>(n);
  const double dm = static_cast<double>(m);
  const double e = 2.0 * s_ab / (dn * dm) - s_aa / (dn * dn) - s_bb / (dm * dm);
  return dn * dm / (dn + dm) * e;
}

/// Two-sample KS statistic; `order` sorts `values` ascending.
inline double ks_statistic(const std::vector<double>& values, const std::vector<std::size_t>& order,
                           const std::vector<char>& in_a, std::size_t n, std::size_t m) {
  double fa = 0.0;
  double fb = 0.0;
  double best = 0.0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    const std::size_t i = order[k];
    if (in_a[i]) {
      fa += 1.0 / static_cast<double>(n);
    } else {
      fb += 1.0 / static_cast<double>(m);
    }
    const bool tie_next = k + 1 < order.size() && values[order[k + 1]] == values[i];
    if (!tie_next) best = std::max(best, std::abs(fa - fb));
  }
  return best;
}

}  // namespace detail

/// Per time: energy distance and projected KS statistics between the two
/// ensembles, both calibrated by the same label permutations.
inline LawDistanceReport law_distance(const Ensemble& a, const Ensemble& b, const std::vector<double>& times,
                                      const std::vector<Vec>& projections, const LawDistanceOptions& opt = {}) {
  require(a.n_paths() > 0 && b.n_paths() > 0, ErrorCode::EmptyEnsemble, "both ensembles need paths");
  require(a.dim() == b.dim(), ErrorCode::DimensionMismatch, "ensembles of different dimension");
  require(opt.permutations >= 200, ErrorCode::InvalidArgument, "use at least 200 permutations");
  require(!times.empty(), ErrorCode::InvalidArgument, "no evaluation times");
  for (const Vec& v : projections) {
    require(v.size() == a.dim(), ErrorCode::DimensionMismatch, "projection dimension");
  }
  const std::size_t n = std::min(a.n_paths(), opt.max_samples);
  const std::size_t m = std::min(b.n_paths(), opt.max_samples);
  const std::size_t total = n + m;
  const int d = a.dim();

  LawDistanceReport report;
  report.permutations = opt.permutations;
  report.n_a = n;
  report.n_b = m;

  for (double t : times) {
    const auto ia = a.index_of(t);
    const auto ib = b.index_of(t);
    require(ia.has_value() && ib.has_value(), ErrorCode::InvalidArgument, "evaluation time missing from a grid");
    Mat pooled(d, static_cast<Eigen::Index>(total));
    for (std::size_t p = 0; p < n; ++p) pooled.col(static_cast<Eigen::Index>(p)) = a.state(p, *ia);
    for (std::size_t p = 0; p < m; ++p) pooled.col(static_cast<Eigen::Index>(n + p)) = b.state(p, *ib);

    Mat z = pooled;
    if (opt.standardize) {
      for (int i = 0; i < d; ++i) {
        const double mean = pooled.row(i).mean();
        const double sd = std::sqrt((pooled.row(i).array() - mean).square().sum() / static_cast<double>(total));
        if (sd > 0.0) z.row(i) = (pooled.row(i).array() - mean) / sd;
      }
    }
    std::vector<double> dist(total * total);
    parallel_for(total, opt.workers, [&](std::size_t begin, std::size_t end) {
      for (std::size_t i = begin; i < end; ++i) {
        for (std::size_t j = 0; j < total; ++j) {
          dist[i * total + j] = (z.col(static_cast<Eigen::Index>(i)) - z.col(static_cast<Eigen::Index>(j))).norm();
        }
      }
    });
    const double grand_total = pairwise_sum(dist);

    std::vector<std::vector<double>> proj_values(projections.size(), std::vector<double>(total));
    std::vector<std::vector<std::size_t>> proj_order(projections.size());
    for (std::size_t q = 0; q < projections.size(); ++q) {
      for (std::size_t i = 0; i < total; ++i) {
        proj_values[q][i] = projections[q].dot(pooled.col(static_cast<Eigen::Index>(i)));
      }
      proj_order[q].resize(total);
      std::iota(proj_order[q].begin(), proj_order[q].end(), std::size_t{0});
      std::stable_sort(proj_order[q].begin(), proj_order[q].end(),
                       [&](std::size_t x, std::size_t y) { return proj_values[q][x] < proj_values[q][y]; });
    }

    std::vector<char> labels(total, 0);
    std::fill(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(n), 1);
    TimeComparison tc;
    tc.t = t;
    tc.energy = detail::energy_statistic(dist, total, labels, n, m, grand_total);
    std::vector<double> ks_obs(projections.size());
    for (std::size_t q = 0; q < projections.size(); ++q) {
      ks_obs[q] = detail::ks_statistic(proj_values[q], proj_order[q], labels, n, m);
    }

    const auto n_perm = static_cast<std::size_t>(opt.permutations);
    std::vector<double> perm_energy(n_perm);
    std::vector<std::vector<double>> perm_ks(projections.size(), std::vector<double>(n_perm));
    parallel_for(n_perm, opt.workers, [&](std::size_t begin, std::size_t end) {
      std::vector<char> perm(labels);
      for (std::size_t r = begin; r < end; ++r) {
        Stream stream(opt.seed ^ mix64(std::bit_cast<std::uint64_t>(t)), r);
        perm = labels;
        std::shuffle(perm.begin(), perm.end(), stream);
        perm_energy[r] = detail::energy_statistic(dist, total, perm, n, m, grand_total);
        for (std::size_t q = 0; q < projections.size(); ++q) {
          perm_ks[q][r] = detail::ks_statistic(proj_values[q], proj_order[q], perm, n, m);
        }
      }
    });
    auto p_value = [&](const std::vector<double>& null, double obs) {
      // Relative slack so ties from rounding count as "at least as extreme".
      const double cut = obs * (1.0 - 1e-12);
      const auto count = std::count_if(null.begin(), null.end(), [&](double v) { return v >= cut; });
      return (1.0 + static_cast<double>(count)) / (1.0 + static_cast<double>(null.size()));
    };
    tc.energy_p = p_value(perm_energy, tc.energy);
    for (std::size_t q = 0; q < projections.size(); ++q) {
      tc.ks.push_back({q, ks_obs[q], p_value(perm_ks[q], ks_obs[q])});
    }
    report.times.push_back(std::move(tc));
  }
  return report;
}

/// Coordinate axes of R^d.
inline std::vector<Vec> coordinate_projections(int d) {
  std::vector<Vec> out;
  for (int i = 0; i < d; ++i) out.push_back(Vec::Unit(d, i));
  return out;
}

}  // namespace hypo
