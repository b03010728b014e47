#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "magt/manifolds.hpp"
#include "magt/rng.hpp"

using namespace magt;

namespace {

ManifoldSpec noiseless(ManifoldName name) { return ManifoldSpec::preset(name, 0.0); }

// Dense brute-force curve distance: plain scan over `samples` parameter values.
double brute_curve_distance(const ManifoldSpec& spec, const Vector& p, int samples) {
  const CurveParam range = curve_range(spec);
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < samples; ++i) {
    const double s = range.lo + (range.hi - range.lo) * i / (samples - 1);
    best = std::min(best, (curve_point(spec, s) - p).squaredNorm());
  }
  return std::sqrt(best);
}

Matrix rotation_z(double angle, int dim) {
  Matrix r = Matrix::Identity(dim, dim);
  r(0, 0) = std::cos(angle);
  r(0, 1) = -std::sin(angle);
  r(1, 0) = std::sin(angle);
  r(1, 1) = std::cos(angle);
  return r;
}

}  // namespace

TEST(Manifolds, NamesRoundTripAndUnknownIsConfigError) {
  for (ManifoldName n : all_manifolds()) EXPECT_EQ(parse_manifold_name(manifold_name(n)), n);
  EXPECT_THROW(parse_manifold_name("swissroll"), ConfigError);
}

TEST(Manifolds, PresetDimensions) {
  EXPECT_EQ(ManifoldSpec::preset(ManifoldName::Rings2d).intrinsic_dim, 1);
  EXPECT_EQ(ManifoldSpec::preset(ManifoldName::Spiral2d).intrinsic_dim, 1);
  EXPECT_EQ(ManifoldSpec::preset(ManifoldName::Moons2d).intrinsic_dim, 2);
  EXPECT_EQ(ManifoldSpec::preset(ManifoldName::Checker2d).intrinsic_dim, 2);
  EXPECT_EQ(ManifoldSpec::preset(ManifoldName::Helix3d).ambient_dim, 3);
  EXPECT_EQ(ManifoldSpec::preset(ManifoldName::Torus3d).intrinsic_dim, 2);
  for (ManifoldName n : all_manifolds()) {
    const auto s = ManifoldSpec::preset(n);
    EXPECT_LE(s.intrinsic_dim, s.ambient_dim);
    EXPECT_EQ(s.jitter_sigma, 0.02);
  }
}

TEST(Manifolds, InvalidSpecsRejected) {
  auto s = ManifoldSpec::preset(ManifoldName::Rings2d);
  s.shape.ring_radii = {0.5, 0.25};
  EXPECT_THROW(s.validate(), ConfigError);
  s.shape.ring_radii = {0.0, 0.25};
  EXPECT_THROW(s.validate(), ConfigError);
  EXPECT_THROW(ManifoldSpec::preset(ManifoldName::Rings2d, -0.1), ConfigError);
  EXPECT_THROW(sample_dataset(ManifoldSpec::preset(ManifoldName::Rings2d), 0, 1), ConfigError);
}

TEST(Manifolds, TorusPointSatisfiesImplicitEquation) {
  const Dataset d = sample_dataset(noiseless(ManifoldName::Torus3d), 1, 17);
  const auto p = d.points.row(0);
  EXPECT_NEAR(std::pow(std::hypot(p[0], p[1]) - 2.0, 2) + p[2] * p[2], 1.0, 1e-12);
}

TEST(Manifolds, RingPointHasConfiguredRadius) {
  const Dataset d = sample_dataset(noiseless(ManifoldName::Rings2d), 1, 5);
  const double norm = d.points.row(0).norm();
  double best = 1.0;
  for (double r : {0.25, 0.5, 0.75, 1.0}) best = std::min(best, std::abs(norm - r));
  EXPECT_LT(best, 1e-12);
}

TEST(Manifolds, NoiselessSamplesLieOnSupport) {
  for (ManifoldName n : all_manifolds()) {
    const auto spec = noiseless(n);
    const Dataset d = sample_dataset(spec, 1000, 3);
    for (Eigen::Index i = 0; i < d.points.rows(); ++i)
      ASSERT_LT(distance_to_manifold(spec, d.points.row(i).transpose()), 1e-6) << manifold_name(n) << " row " << i;
    EXPECT_EQ(off_manifold_rate(spec, d.points, 1e-4), 0.0) << manifold_name(n);
  }
}

TEST(Manifolds, SameSeedIsBitIdenticalDifferentSeedDiffers) {
  for (ManifoldName n : all_manifolds()) {
    const auto spec = ManifoldSpec::preset(n);
    const Dataset a = sample_dataset(spec, 200, 99);
    const Dataset b = sample_dataset(spec, 200, 99);
    const Dataset c = sample_dataset(spec, 200, 100);
    EXPECT_TRUE((a.points.array() == b.points.array()).all());
    EXPECT_FALSE((a.points.array() == c.points.array()).all());
    EXPECT_TRUE(a.points.allFinite());
  }
}

TEST(Manifolds, JitterScaleShowsUpInDistances) {
  const auto spec = ManifoldSpec::preset(ManifoldName::Torus3d, 0.02);
  const Dataset d = sample_dataset(spec, 4000, 8);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < d.points.rows(); ++i) acc += std::pow(distance_to_manifold(spec, d.points.row(i).transpose()), 2);
  // Only the normal component of 3-D jitter moves a point off a 2-D surface.
  EXPECT_NEAR(std::sqrt(acc / d.points.rows()), 0.02, 0.002);
}

TEST(Manifolds, ClosedFormDistanceExamples) {
  EXPECT_NEAR(distance_to_manifold(noiseless(ManifoldName::Torus3d), Vector{{3.0, 0.0, 0.0}}), 0.0, 1e-15);
  EXPECT_NEAR(distance_to_manifold(noiseless(ManifoldName::Rings2d), Vector{{0.6, 0.0}}), 0.1, 1e-15);
  // Inside a black checker cell the distance is zero, inside a white one it is positive.
  const auto checker = noiseless(ManifoldName::Checker2d);
  EXPECT_EQ(distance_to_manifold(checker, Vector{{-0.75, -0.75}}), 0.0);
  EXPECT_NEAR(distance_to_manifold(checker, Vector{{-0.25, -0.75}}), 0.25, 1e-15);  // white cell center
  EXPECT_NEAR(distance_to_manifold(checker, Vector{{-0.25, -0.6}}), 0.1, 1e-15);
  EXPECT_EQ(distance_to_manifold(checker, Vector{{-0.5, -0.75}}), 0.0);  // shared edge
  EXPECT_NEAR(distance_to_manifold(checker, Vector{{-1.2, -0.75}}), 0.2, 1e-15);
  // Moons: the upper arc's apex and the lower arc's trough.
  const auto moons = noiseless(ManifoldName::Moons2d);
  EXPECT_NEAR(distance_to_manifold(moons, Vector{{0.0, 1.1}}), 0.1, 1e-12);
  EXPECT_NEAR(distance_to_manifold(moons, Vector{{1.0, -0.5}}), 0.0, 1e-12);
  EXPECT_NEAR(distance_to_manifold(moons, Vector{{-1.0, -0.3}}), 0.3, 1e-12);  // beyond an endpoint
}

TEST(Manifolds, HelixOffsetAlongNormalMeasuresOffset) {
  const auto helix = noiseless(ManifoldName::Helix3d);
  const double s = 1.0;
  // Principal normal of (cos s, sin s, s) points to the axis: (-cos s, -sin s, 0).
  const Vector p = curve_point(helix, s) + 0.05 * Vector{{-std::cos(s), -std::sin(s), 0.0}};
  EXPECT_NEAR(distance_to_manifold(helix, p), 0.05, 1e-4);
  EXPECT_NEAR(brute_curve_distance(helix, p, 1000000), 0.05, 1e-4);
}

TEST(Manifolds, CurveSearchAgreesWithDenserBruteForce) {
  Rng rng(21, Stream::Experiment);
  for (ManifoldName n : {ManifoldName::Spiral2d, ManifoldName::Helix3d}) {
    const auto spec = noiseless(n);
    for (int k = 0; k < 100; ++k) {
      Vector p(spec.ambient_dim);
      for (int r = 0; r < spec.ambient_dim; ++r) p[r] = rng.uniform(-2.2, 2.2);
      if (n == ManifoldName::Helix3d) p[2] = rng.uniform(-0.5, 6.8);
      const double fast = distance_to_manifold(spec, p);
      const double brute = brute_curve_distance(spec, p, 10 * kCurveSearchGrid);
      EXPECT_LE(fast, brute + 1e-12);
      EXPECT_NEAR(fast, brute, 1e-5) << manifold_name(n) << " point " << k;
    }
  }
}

TEST(Manifolds, DistanceInvariantUnderSymmetryRotations) {
  Rng rng(4, Stream::Experiment);
  for (ManifoldName n : {ManifoldName::Rings2d, ManifoldName::Torus3d}) {
    const auto spec = noiseless(n);
    for (int k = 0; k < 50; ++k) {
      Vector p(spec.ambient_dim);
      for (int r = 0; r < spec.ambient_dim; ++r) p[r] = rng.uniform(-3.0, 3.0);
      const Vector q = rotation_z(rng.uniform(0.0, 2.0 * std::numbers::pi), spec.ambient_dim) * p;
      EXPECT_NEAR(distance_to_manifold(spec, p), distance_to_manifold(spec, q), 1e-9);
    }
  }
}

TEST(Manifolds, OffManifoldRateCountsAgainstThreshold) {
  const auto rings = noiseless(ManifoldName::Rings2d);
  // Radial positions outside the ring at 1.0; distances 0.01 .. 0.19 in steps of 0.02.
  Matrix pts(10, 2);
  int expected = 0;
  for (int i = 0; i < 10; ++i) {
    const double dist = 0.01 + 0.02 * i;
    pts(i, 0) = 1.0 + dist;
    pts(i, 1) = 0.0;
    if (dist > 0.1) ++expected;
  }
  EXPECT_DOUBLE_EQ(off_manifold_rate(rings, pts, 0.1), expected / 10.0);
  EXPECT_EQ(expected, 5);
  Matrix far = Matrix::Constant(5, 2, 0.0);
  for (int i = 0; i < 5; ++i) far(i, 0) = 2.0;  // distance 1 from the outer ring
  EXPECT_EQ(off_manifold_rate(rings, far, 0.1), 1.0);
  EXPECT_THROW(off_manifold_rate(rings, Matrix(0, 2), 0.1), ConfigError);
  EXPECT_THROW(off_manifold_rate(rings, far, 0.0), ConfigError);
  EXPECT_THROW(distance_to_manifold(rings, Vector::Zero(3)), DimensionError);
}
