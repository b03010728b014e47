#pragma once
// Synthetic benchmark datasets and exact distance-to-support oracles.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "magt/common.hpp"

namespace magt {

enum class ManifoldName { Rings2d, Spiral2d, Moons2d, Checker2d, Helix3d, Torus3d };

struct ShapeParams {
  std::vector<double> ring_radii{0.25, 0.5, 0.75, 1.0};
  // r(s) = spiral_a + spiral_b * s, s in [spiral_s_min, spiral_s_max]
  double spiral_a = 0.25;
  double spiral_b = 0.15;
  double spiral_s_min = 0.0;
  double spiral_s_max = 12.566370614359172;  // 4 pi
  double moons_delta = 0.5;
  int checker_cells = 4;
  double torus_major = 2.0;
  double torus_minor = 1.0;
};

struct ManifoldSpec {
  ManifoldName name = ManifoldName::Rings2d;
  int ambient_dim = 2;
  int intrinsic_dim = 1;
  double jitter_sigma = 0.02;
  ShapeParams shape;

  /// Default spec for a dataset; throws ConfigError if the parameters break
  /// the invariants.
  static ManifoldSpec preset(ManifoldName name, double jitter_sigma = 0.02);
  void validate() const;
};

std::string_view manifold_name(ManifoldName name);
/// Throws ConfigError for unknown names.
ManifoldName parse_manifold_name(std::string_view text);
const std::vector<ManifoldName>& all_manifolds();

struct Dataset {
  Matrix points;  // n x D
  ManifoldSpec spec;
  std::uint64_t seed = 0;
};

Dataset sample_dataset(const ManifoldSpec& spec, std::size_t n, std::uint64_t seed);

/// Euclidean distance from `point` to the noiseless support.
double distance_to_manifold(const ManifoldSpec& spec, const Eigen::Ref<const Vector>& point);

/// Fraction of rows farther than `threshold` from the support.
double off_manifold_rate(const ManifoldSpec& spec, const Matrix& points, double threshold = 0.1);

/// Parameter-grid density of the spiral/helix distance search (before the
/// local refinement).
inline constexpr int kCurveSearchGrid = 8192;

/// Parameter range and embedding of the 1-D curve datasets (spiral, helix).
struct CurveParam {
  double lo;
  double hi;
};
CurveParam curve_range(const ManifoldSpec& spec);
/// Point on the spiral/helix at parameter s. Throws for non-curve specs.
Vector curve_point(const ManifoldSpec& spec, double s);

}  // namespace magt
