#include <gtest/gtest.h>

#include <cmath>

#include "magt/rng.hpp"
#include "magt/schedule.hpp"

using namespace magt;

TEST(Schedule, HalfLevelIsSymmetric) {
  const NoiseLevel l = vp_level(0.5);
  EXPECT_DOUBLE_EQ(l.alpha, 0.7071067811865476);
  EXPECT_DOUBLE_EQ(l.sigma, 0.7071067811865476);
}

TEST(Schedule, AlphaIsExactAtPointNineteen) { EXPECT_EQ(vp_level(0.19).alpha, 0.9); }

TEST(Schedule, RejectsEndpointsAndOutside) {
  for (double t : {0.0, 1.0, -0.1, 1.5, std::nan("")}) EXPECT_THROW(vp_level(t), ConfigError) << t;
}

TEST(Schedule, VariancePreservedToRounding) {
  for (double t = 0.01; t < 1.0; t += 0.0137) {
    const NoiseLevel l = vp_level(t);
    EXPECT_NEAR(l.alpha * l.alpha + l.sigma * l.sigma, 1.0, 1e-15);
  }
}

TEST(Schedule, CorruptExamples) {
  const NoiseLevel l = vp_level(0.19);
  Vector y0(1), z(1);
  y0 << 1.0;
  z << 2.0;
  EXPECT_NEAR(corrupt(l, y0, z)[0], 1.7717797887, 1e-9);  // 0.9 + 2 sqrt(0.19)
  EXPECT_EQ(corrupt(l, y0, Vector::Zero(1))[0], l.alpha);
  EXPECT_EQ(corrupt(l, Vector::Zero(1), z)[0], l.sigma * 2.0);
}

TEST(Schedule, CorruptRejectsMismatchedDimensions) {
  EXPECT_THROW(corrupt(vp_level(0.3), Vector::Zero(2), Vector::Zero(3)), DimensionError);
  EXPECT_THROW(corrupt_rows(vp_level(0.3), Matrix::Zero(2, 2), Matrix::Zero(3, 2)), DimensionError);
}

TEST(Schedule, SecondMomentIsAlphaSquaredPlusDSigmaSquared) {
  Rng rng(5, Stream::Experiment);
  Vector y0(3);
  y0 << 0.6, 0.0, 0.8;
  for (double t : {0.1, 0.5, 0.9}) {
    const NoiseLevel l = vp_level(t);
    double acc = 0.0;
    const int draws = 100000;
    for (int i = 0; i < draws; ++i) {
      Vector z(3);
      for (int r = 0; r < 3; ++r) z[r] = rng.normal();
      acc += corrupt(l, y0, z).squaredNorm();
    }
    const double expected = l.alpha * l.alpha + 3.0 * l.sigma * l.sigma;
    EXPECT_NEAR(acc / draws, expected, 0.02 * expected) << t;
  }
}

TEST(Schedule, UnitNormSignalKeepsUnitPowerInOneDimension) {
  Rng rng(6, Stream::Experiment);
  Vector y0(1);
  y0 << 1.0;
  const NoiseLevel l = vp_level(0.37);
  double acc = 0.0;
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) {
    Vector z(1);
    z << rng.normal();
    acc += corrupt(l, y0, z).squaredNorm();
  }
  EXPECT_NEAR(acc / draws, 1.0, 0.02);
}

TEST(Rng, SameKeyReproducesAndStreamsDiffer) {
  Rng a(42, Stream::Anchors), b(42, Stream::Anchors), c(42, Stream::Dataset), d(42, Stream::Anchors, 1);
  for (int i = 0; i < 100; ++i) {
    const auto va = a.next_u64();
    EXPECT_EQ(va, b.next_u64());
    EXPECT_NE(va, c.next_u64());
    EXPECT_NE(va, d.next_u64());
  }
}

TEST(Rng, NormalMomentsAndUniformRange) {
  Rng rng(9, Stream::Experiment);
  double s = 0.0, s2 = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    s += x;
    s2 += x * x;
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
  EXPECT_NEAR(s / n, 0.0, 0.01);
  EXPECT_NEAR(s2 / n, 1.0, 0.015);
}

TEST(Rng, BelowStaysInRangeAndSplitIsIndependentOfParentState) {
  Rng rng(3, Stream::Shuffle);
  for (int i = 0; i < 1000; ++i) ASSERT_LT(rng.below(7), 7u);
  Rng parent(3, Stream::Shuffle);
  const auto child_before = parent.split(5).next_u64();
  parent.next_u64();
  EXPECT_EQ(parent.split(5).next_u64(), child_before);
}
