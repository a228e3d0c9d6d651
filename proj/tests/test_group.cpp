#include <gtest/gtest.h>

#include "hypo/group.hpp"
#include "test_support.hpp"

using namespace hypo;
using hypo::testing::max_abs;
using hypo::testing::random_point;

namespace {

ErrorCode code_of(const auto& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected hypo::Error";
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST(ValidateStructure, KolmogorovIsValid) {
  const StructuralMatrix sm = kolmogorov_structure();
  EXPECT_EQ(sm.dim(), 2);
  EXPECT_EQ(sm.depth(), 1);
  EXPECT_EQ(sm.homogeneous_dim(), 6);
}

TEST(ValidateStructure, RejectsDiagonalEntries) {
  EXPECT_EQ(code_of([] { validate_structure(Mat::Identity(2, 2), {1, 1}); }), ErrorCode::NonZeroOutsideBlocks);
}

TEST(ValidateStructure, RejectsIncreasingDims) {
  Mat b = Mat::Zero(3, 3);
  b(1, 0) = 1.0;
  b(2, 0) = 1.0;
  EXPECT_EQ(code_of([&] { validate_structure(b, {1, 2}); }), ErrorCode::NonIncreasingViolation);
}

TEST(ValidateStructure, RejectsRankDeficientBlock) {
  Mat b = Mat::Zero(4, 4);
  b(2, 0) = 1.0;
  b(3, 0) = 2.0;  // B_1 = [[1,0],[2,0]] has rank 1 < d_1 = 2
  EXPECT_EQ(code_of([&] { validate_structure(b, {2, 2}); }), ErrorCode::RankDeficientBlock);
}

TEST(ValidateStructure, RejectsDimensionMismatch) {
  EXPECT_EQ(code_of([] { validate_structure(Mat::Zero(3, 3), {1, 1}); }), ErrorCode::DimensionMismatch);
  EXPECT_EQ(code_of([] { validate_structure(Mat::Zero(2, 3), {1, 1}); }), ErrorCode::DimensionMismatch);
  EXPECT_EQ(code_of([] { validate_structure(Mat::Zero(2, 2), {0, 2}); }), ErrorCode::DimensionMismatch);
}

TEST(ValidateStructure, StrayEntryAboveTolerance) {
  Mat b = kolmogorov_structure().matrix();
  b(0, 1) = 1e-13;
  EXPECT_EQ(code_of([&] { validate_structure(b, {1, 1}); }), ErrorCode::NonZeroOutsideBlocks);
  b(0, 1) = 1e-15;
  EXPECT_NO_THROW(validate_structure(b, {1, 1}));
}

TEST(ValidateStructure, HomogeneousDimensionAndNilpotency) {
  for (const auto& sm : hypo::testing::sample_structures()) {
    int expected = 2;
    for (std::size_t i = 0; i < sm.block_dims().size(); ++i) {
      expected += static_cast<int>(2 * i + 1) * sm.block_dims()[i];
    }
    EXPECT_EQ(sm.homogeneous_dim(), expected);
    const Mat next = sm.power(sm.depth()) * sm.matrix();
    EXPECT_LE(max_abs(next), 1e-14);
  }
}

TEST(MatrixExp, KolmogorovValues) {
  const StructuralMatrix sm = kolmogorov_structure();
  EXPECT_LE(max_abs(matrix_exp(sm, 0.0) - Mat::Identity(2, 2)), 0.0);
  Mat expected(2, 2);
  expected << 1, 0, 2, 1;
  EXPECT_LE(max_abs(matrix_exp(sm, 2.0) - expected), 0.0);
}

TEST(MatrixExp, OneParameterGroup) {
  for (const auto& sm : hypo::testing::sample_structures()) {
    EXPECT_LE(max_abs(matrix_exp(sm, 1.0) * matrix_exp(sm, 2.0) - matrix_exp(sm, 3.0)), 1e-14);
  }
}

TEST(Compose, KolmogorovExample) {
  const StructuralMatrix sm = kolmogorov_structure();
  const GroupPoint r = compose(sm, {1.0, Vec::Unit(2, 0)}, {1.0, Vec::Zero(2)});
  EXPECT_DOUBLE_EQ(r.s, 2.0);
  EXPECT_DOUBLE_EQ(r.x(0), 1.0);
  EXPECT_DOUBLE_EQ(r.x(1), 1.0);
}

TEST(Compose, GroupAxioms) {
  std::mt19937_64 rng(7);
  for (const auto& sm : hypo::testing::sample_structures()) {
    const GroupPoint identity{0.0, Vec::Zero(sm.dim())};
    for (int trial = 0; trial < 100; ++trial) {
      const GroupPoint p = random_point(rng, sm.dim());
      const GroupPoint q = random_point(rng, sm.dim());
      const GroupPoint r = random_point(rng, sm.dim());
      const GroupPoint pe = compose(sm, p, identity);
      EXPECT_LE((pe.stacked() - p.stacked()).cwiseAbs().maxCoeff(), 1e-12);
      const GroupPoint lhs = compose(sm, compose(sm, p, q), r);
      const GroupPoint rhs = compose(sm, p, compose(sm, q, r));
      EXPECT_LE((lhs.stacked() - rhs.stacked()).cwiseAbs().maxCoeff(), 1e-12);
      const GroupPoint e1 = compose(sm, p, inverse(sm, p));
      const GroupPoint e2 = compose(sm, inverse(sm, p), p);
      EXPECT_LE(e1.stacked().cwiseAbs().maxCoeff(), 1e-12);
      EXPECT_LE(e2.stacked().cwiseAbs().maxCoeff(), 1e-12);
    }
  }
}

TEST(Inverse, Examples) {
  const StructuralMatrix sm = kolmogorov_structure();
  const GroupPoint zero = inverse(sm, {0.0, Vec::Zero(2)});
  EXPECT_EQ(zero.s, 0.0);
  EXPECT_EQ(zero.x.cwiseAbs().maxCoeff(), 0.0);
  const GroupPoint inv = inverse(sm, {1.0, Vec::Unit(2, 0)});
  EXPECT_DOUBLE_EQ(inv.s, -1.0);
  EXPECT_DOUBLE_EQ(inv.x(0), -1.0);
  EXPECT_DOUBLE_EQ(inv.x(1), 1.0);
}

TEST(Dilate, Examples) {
  const StructuralMatrix sm = kolmogorov_structure();
  const GroupPoint p{1.0, Vec::Ones(2)};
  const GroupPoint same = dilate(sm, 1.0, p);
  EXPECT_EQ((same.stacked() - p.stacked()).cwiseAbs().maxCoeff(), 0.0);
  const GroupPoint two = dilate(sm, 2.0, p);
  EXPECT_DOUBLE_EQ(two.s, 4.0);
  EXPECT_DOUBLE_EQ(two.x(0), 2.0);
  EXPECT_DOUBLE_EQ(two.x(1), 8.0);
  EXPECT_EQ(code_of([&] { dilate(sm, 0.0, p); }), ErrorCode::NonPositiveLambda);
  EXPECT_EQ(code_of([&] { dilate(sm, -1.0, p); }), ErrorCode::NonPositiveLambda);
}

TEST(Dilate, AutomorphismAndConjugation) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> lam(0.3, 3.0);
  for (const auto& sm : hypo::testing::sample_structures()) {
    for (int trial = 0; trial < 100; ++trial) {
      const double l = lam(rng);
      const GroupPoint p = random_point(rng, sm.dim());
      const GroupPoint q = random_point(rng, sm.dim());
      const GroupPoint lhs = dilate(sm, l, compose(sm, p, q));
      const GroupPoint rhs = compose(sm, dilate(sm, l, p), dilate(sm, l, q));
      const double scale = std::max(1.0, lhs.stacked().cwiseAbs().maxCoeff());
      EXPECT_LE((lhs.stacked() - rhs.stacked()).cwiseAbs().maxCoeff() / scale, 1e-12);

      const double t = p.s;
      const Vec dg = dilation_diagonal(sm, l);
      const Mat conj = dg.asDiagonal() * matrix_exp(sm, t) * dg.cwiseInverse().asDiagonal();
      EXPECT_LE(max_abs(conj - matrix_exp(sm, l * l * t)), 1e-12 * std::max(1.0, max_abs(conj)));

      const double det = l * l * dg.prod();
      EXPECT_LE(std::abs(det / std::pow(l, sm.homogeneous_dim()) - 1.0), 1e-10);
    }
  }
}

TEST(HomogeneousNorm, Examples) {
  const StructuralMatrix sm = kolmogorov_structure();
  EXPECT_EQ(homogeneous_norm(sm, {0.0, Vec::Zero(2)}), 0.0);
  Vec x(2);
  x << 0.0, 8.0;
  EXPECT_NEAR(homogeneous_norm(sm, {0.0, x}), 2.0, 1e-12);
}

TEST(HomogeneousNorm, ScalingAndEuclideanComparison) {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> lam(0.2, 5.0);
  std::uniform_real_distribution<double> size(0.05, 3.0);
  for (const auto& sm : hypo::testing::sample_structures()) {
    for (int trial = 0; trial < 200; ++trial) {
      GroupPoint p = random_point(rng, sm.dim());
      const double l = lam(rng);
      const double rho = homogeneous_norm(sm, p);
      EXPECT_LE(hypo::testing::rel_err(homogeneous_norm(sm, dilate(sm, l, p)), l * rho), 1e-10);

      // Rescale the Euclidean length to straddle 1.
      const double target = size(rng);
      const Vec v = p.stacked() * (target / p.stacked().norm());
      const GroupPoint pv = GroupPoint::from_stacked(v);
      const double euclid = v.norm();
      const double r = homogeneous_norm(sm, pv);
      if (euclid <= 1.0) {
        EXPECT_LE(euclid, r * (1.0 + 1e-12));
      } else {
        EXPECT_LE(r, euclid * (1.0 + 1e-12));
      }
    }
  }
}
