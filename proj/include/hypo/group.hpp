#pragma once

#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "hypo/error.hpp"
#include "hypo/numeric.hpp"

namespace hypo {

/// A point (s, x) of the space-time group R x R^d.
struct GroupPoint {
  double s = 0.0;
  Vec x;

  GroupPoint() = default;
  GroupPoint(double time, Vec state) : s(time), x(std::move(state)) {}

  Eigen::Index dim() const { return x.size(); }

  /// Stacked (s, x) as a vector in R^{1+d}.
  Vec stacked() const {
    Vec out(1 + x.size());
    out(0) = s;
    out.tail(x.size()) = x;
    return out;
  }

  static GroupPoint from_stacked(const Vec& v) { return {v(0), v.tail(v.size() - 1)}; }
};

/// Drift matrix with the nilpotent block structure
///
///     [ 0    0   ...  0    0 ]
///     [ B_1  0   ...  0    0 ]
///     [ 0    B_2 ...  0    0 ]
///     [ ...              ... ]
///     [ 0    0   ...  B_n  0 ]
///
/// where B_i is d_i x d_{i-1} of full row rank d_i and (d_0, ..., d_n) is
/// nonincreasing. Construct through validate_structure().
class StructuralMatrix {
 public:
  static constexpr double kZeroTolerance = 1e-14;
  static constexpr double kRankTolerance = 1e-10;

  const Mat& matrix() const { return b_; }
  const std::vector<int>& block_dims() const { return dims_; }
  int dim() const { return d_; }
  /// Number of sub-diagonal blocks; B^{n+1} = 0.
  int depth() const { return static_cast<int>(dims_.size()) - 1; }
  int diffusive_dim() const { return dims_.front(); }
  /// Homogeneous dimension 2 + sum_i (2i+1) d_i.
  int homogeneous_dim() const { return dbar_; }
  /// Row offset of block i inside x.
  int block_offset(int i) const { return offsets_[static_cast<std::size_t>(i)]; }
  /// B^k for k = 0..n.
  const Mat& power(int k) const { return powers_[static_cast<std::size_t>(k)]; }

  /// Sub-diagonal block B_i, i = 1..n.
  Mat block(int i) const {
    return b_.block(block_offset(i), block_offset(i - 1), dims_[static_cast<std::size_t>(i)],
                    dims_[static_cast<std::size_t>(i - 1)]);
  }

  /// Dilation exponent of coordinate k of x (the time coordinate carries 2).
  const std::vector<int>& spatial_exponents() const { return exponents_; }

  friend StructuralMatrix validate_structure(const Mat& b, const std::vector<int>& block_dims);

 private:
  Mat b_;
  std::vector<int> dims_;
  std::vector<int> offsets_;
  std::vector<int> exponents_;
  std::vector<Mat> powers_;
  int d_ = 0;
  int dbar_ = 0;
};

inline StructuralMatrix validate_structure(const Mat& b, const std::vector<int>& block_dims) {
  require(!block_dims.empty(), ErrorCode::DimensionMismatch, "block_dims must be nonempty");
  for (int di : block_dims) {
    require(di > 0, ErrorCode::DimensionMismatch, "block dimensions must be positive");
  }
  require(b.rows() == b.cols(), ErrorCode::DimensionMismatch, "B must be square");
  const int d = std::accumulate(block_dims.begin(), block_dims.end(), 0);
  require(b.rows() == d, ErrorCode::DimensionMismatch,
          "block_dims sum to " + std::to_string(d) + " but B is " + std::to_string(b.rows()) +
              "x" + std::to_string(b.cols()));
  for (std::size_t i = 1; i < block_dims.size(); ++i) {
    require(block_dims[i] <= block_dims[i - 1], ErrorCode::NonIncreasingViolation,
            "block_dims must be nonincreasing");
  }
  require(b.allFinite(), ErrorCode::InvalidArgument, "B has non-finite entries");

  StructuralMatrix sm;
  sm.b_ = b;
  sm.dims_ = block_dims;
  sm.d_ = d;
  sm.offsets_.resize(block_dims.size() + 1, 0);
  for (std::size_t i = 0; i < block_dims.size(); ++i) {
    sm.offsets_[i + 1] = sm.offsets_[i] + block_dims[i];
  }

  // Everything outside the first sub-diagonal block row must vanish.
  Mat stray = b;
  for (int i = 1; i <= sm.depth(); ++i) {
    stray.block(sm.block_offset(i), sm.block_offset(i - 1), block_dims[static_cast<std::size_t>(i)],
                block_dims[static_cast<std::size_t>(i - 1)])
        .setZero();
  }
  require(stray.cwiseAbs().maxCoeff() <= StructuralMatrix::kZeroTolerance,
          ErrorCode::NonZeroOutsideBlocks, "B has nonzero entries outside the sub-diagonal blocks");

  for (int i = 1; i <= sm.depth(); ++i) {
    Eigen::JacobiSVD<Mat> svd(sm.block(i));
    const auto& sv = svd.singularValues();
    const double largest = sv(0);
    const double smallest = sv(sv.size() - 1);
    require(largest > 0.0 && smallest > StructuralMatrix::kRankTolerance * largest,
            ErrorCode::RankDeficientBlock, "block B_" + std::to_string(i) + " is rank deficient");
  }

  sm.powers_.reserve(static_cast<std::size_t>(sm.depth()) + 1);
  sm.powers_.push_back(Mat::Identity(d, d));
  for (int k = 1; k <= sm.depth(); ++k) sm.powers_.push_back(sm.powers_.back() * b);
  const Mat next = sm.powers_.back() * b;
  require(next.size() == 0 || next.cwiseAbs().maxCoeff() <= StructuralMatrix::kZeroTolerance,
          ErrorCode::InvalidArgument, "B is not nilpotent of the declared degree");

  sm.exponents_.reserve(static_cast<std::size_t>(d));
  sm.dbar_ = 2;
  for (std::size_t i = 0; i < block_dims.size(); ++i) {
    const int e = 2 * static_cast<int>(i) + 1;
    sm.dbar_ += e * block_dims[i];
    for (int k = 0; k < block_dims[i]; ++k) sm.exponents_.push_back(e);
  }
  return sm;
}

/// Assembles B from its sub-diagonal blocks B_1..B_n.
inline StructuralMatrix structure_from_blocks(const std::vector<int>& block_dims,
                                              const std::vector<Mat>& blocks) {
  require(!block_dims.empty() && blocks.size() + 1 == block_dims.size(),
          ErrorCode::DimensionMismatch, "need exactly one block per sub-diagonal position");
  const int d = std::accumulate(block_dims.begin(), block_dims.end(), 0);
  Mat b = Mat::Zero(d, d);
  int row = block_dims[0];
  int col = 0;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    require(blocks[i].rows() == block_dims[i + 1] && blocks[i].cols() == block_dims[i],
            ErrorCode::DimensionMismatch, "block B_" + std::to_string(i + 1) + " has wrong shape");
    b.block(row, col, blocks[i].rows(), blocks[i].cols()) = blocks[i];
    col += block_dims[i];
    row += block_dims[i + 1];
  }
  return validate_structure(b, block_dims);
}

/// The d = 2 chain B = [[0,0],[1,0]].
inline StructuralMatrix kolmogorov_structure() {
  Mat b = Mat::Zero(2, 2);
  b(1, 0) = 1.0;
  return validate_structure(b, {1, 1});
}

/// e^{tB} by the terminating series sum_{k<=n} t^k B^k / k!.
inline Mat matrix_exp(const StructuralMatrix& sm, double t) {
  Mat out = sm.power(0);
  double coeff = 1.0;
  for (int k = 1; k <= sm.depth(); ++k) {
    coeff *= t / k;
    out += coeff * sm.power(k);
  }
  return out;
}

/// (s, x) o (t, y) = (s + t, e^{tB} x + y).
inline GroupPoint compose(const StructuralMatrix& sm, const GroupPoint& p, const GroupPoint& q) {
  return {p.s + q.s, matrix_exp(sm, q.s) * p.x + q.x};
}

/// (s, x)^{-1} = (-s, -e^{-sB} x).
inline GroupPoint inverse(const StructuralMatrix& sm, const GroupPoint& p) {
  return {-p.s, -(matrix_exp(sm, -p.s) * p.x)};
}

/// Diagonal of the spatial dilation delta_lambda.
inline Vec dilation_diagonal(const StructuralMatrix& sm, double lambda) {
  Vec diag(sm.dim());
  const auto& e = sm.spatial_exponents();
  for (int k = 0; k < sm.dim(); ++k) diag(k) = std::pow(lambda, e[static_cast<std::size_t>(k)]);
  return diag;
}

inline GroupPoint dilate(const StructuralMatrix& sm, double lambda, const GroupPoint& p) {
  require(lambda > 0.0, ErrorCode::NonPositiveLambda, "dilation factor must be positive");
  return {lambda * lambda * p.s, dilation_diagonal(sm, lambda).cwiseProduct(p.x)};
}

/// rho(p) = inf { lambda > 0 : |delta_lambda^{-1} p| <= 1 }.
inline double homogeneous_norm(const StructuralMatrix& sm, const GroupPoint& p) {
  const auto& e = sm.spatial_exponents();
  auto scaled_norm2 = [&](double lambda) {
    const double ts = p.s / (lambda * lambda);
    double acc = ts * ts;
    for (int k = 0; k < sm.dim(); ++k) {
      const double v = p.x(k) / std::pow(lambda, e[static_cast<std::size_t>(k)]);
      acc += v * v;
    }
    return acc;
  };

  double start = std::sqrt(std::abs(p.s));
  for (int k = 0; k < sm.dim(); ++k) {
    start = std::max(start, std::pow(std::abs(p.x(k)), 1.0 / e[static_cast<std::size_t>(k)]));
  }
  if (start == 0.0) return 0.0;

  // The largest single coordinate equals 1 at `start`, so the norm is >= 1 there.
  double lo = start;
  double hi = start;
  while (scaled_norm2(hi) > 1.0) hi *= 2.0;
  while (hi - lo > 1e-12 * std::min(1.0, hi) && hi - lo > 4.0 * std::numeric_limits<double>::epsilon() * hi) {
    const double mid = 0.5 * (lo + hi);
    if (scaled_norm2(mid) > 1.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace hypo
