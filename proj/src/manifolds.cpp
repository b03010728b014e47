#include "magt/manifolds.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

#include "magt/rng.hpp"

namespace magt {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct NameEntry {
  ManifoldName name;
  std::string_view text;
};
constexpr std::array<NameEntry, 6> kNames{{{ManifoldName::Rings2d, "rings2d"},
                                           {ManifoldName::Spiral2d, "spiral2d"},
                                           {ManifoldName::Moons2d, "moons2d"},
                                           {ManifoldName::Checker2d, "checker2d"},
                                           {ManifoldName::Helix3d, "helix3d"},
                                           {ManifoldName::Torus3d, "torus3d"}}};

bool is_curve(ManifoldName name) {
  return name == ManifoldName::Spiral2d || name == ManifoldName::Helix3d;
}

// Distance from q to the arc {c + (cos a, sin a) : a in [0, pi]} when
// `upper`, or {c + (cos a, -sin a)} otherwise (unit radius).
double half_circle_distance(double qx, double qy, double cx, double cy, bool upper) {
  const double dx = qx - cx;
  const double dy = upper ? qy - cy : cy - qy;
  if (dy >= 0.0) return std::abs(std::hypot(dx, dy) - 1.0);
  const double left = std::hypot(dx + 1.0, dy);
  const double right = std::hypot(dx - 1.0, dy);
  return std::min(left, right);
}

double box_distance(double x, double y, double x0, double x1, double y0, double y1) {
  const double dx = std::max({x0 - x, 0.0, x - x1});
  const double dy = std::max({y0 - y, 0.0, y - y1});
  return std::hypot(dx, dy);
}

double curve_sq_distance(const ManifoldSpec& spec, const double* p, double s) {
  if (spec.name == ManifoldName::Spiral2d) {
    const double r = spec.shape.spiral_a + spec.shape.spiral_b * s;
    const double dx = p[0] - r * std::cos(s);
    const double dy = p[1] - r * std::sin(s);
    return dx * dx + dy * dy;
  }
  const double dx = p[0] - std::cos(s);
  const double dy = p[1] - std::sin(s);
  const double dz = p[2] - s;
  return dx * dx + dy * dy + dz * dz;
}

// Precomputed curve samples on the search grid.
struct CurveGrid {
  CurveParam range;
  double step;
  Matrix points;  // kCurveSearchGrid x D
};

CurveGrid make_grid(const ManifoldSpec& spec) {
  CurveGrid grid;
  grid.range = curve_range(spec);
  grid.step = (grid.range.hi - grid.range.lo) / (kCurveSearchGrid - 1);
  grid.points.resize(kCurveSearchGrid, spec.ambient_dim);
  for (int i = 0; i < kCurveSearchGrid; ++i)
    grid.points.row(i) = curve_point(spec, grid.range.lo + i * grid.step).transpose();
  return grid;
}

// Ternary search on [lo, hi] to parameter tolerance 1e-9 (well below the
// required 1e-6 absolute distance tolerance).
double refine(const ManifoldSpec& spec, const double* p, double lo, double hi) {
  while (hi - lo > 1e-9) {
    const double m1 = lo + (hi - lo) / 3.0;
    const double m2 = hi - (hi - lo) / 3.0;
    if (curve_sq_distance(spec, p, m1) <= curve_sq_distance(spec, p, m2))
      hi = m2;
    else
      lo = m1;
  }
  return curve_sq_distance(spec, p, 0.5 * (lo + hi));
}

double curve_distance(const ManifoldSpec& spec, const CurveGrid& grid,
                      const Eigen::Ref<const Vector>& point) {
  const int n = kCurveSearchGrid;
  const int dim = spec.ambient_dim;
  std::vector<double> d2(n);
  for (int i = 0; i < n; ++i) {
    double acc = 0.0;
    for (int r = 0; r < dim; ++r) {
      const double diff = point[r] - grid.points(i, r);
      acc += diff * diff;
    }
    d2[i] = acc;
  }
  // Refine the best few local minima; distinct branches of the curve can be
  // nearly equidistant.
  constexpr int kCandidates = 4;
  std::vector<std::pair<double, int>> minima;
  for (int i = 0; i < n; ++i) {
    const bool left_ok = i == 0 || d2[i] <= d2[i - 1];
    const bool right_ok = i == n - 1 || d2[i] <= d2[i + 1];
    if (left_ok && right_ok) minima.emplace_back(d2[i], i);
  }
  std::partial_sort(minima.begin(), minima.begin() + std::min<std::size_t>(kCandidates, minima.size()),
                    minima.end());
  const double* p = point.data();
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < std::min<std::size_t>(kCandidates, minima.size()); ++c) {
    const int i = minima[c].second;
    const double lo = grid.range.lo + std::max(i - 1, 0) * grid.step;
    const double hi = grid.range.lo + std::min(i + 1, n - 1) * grid.step;
    best = std::min({best, minima[c].first, refine(spec, p, lo, hi)});
  }
  return std::sqrt(best);
}

double closed_form_distance(const ManifoldSpec& spec, const Eigen::Ref<const Vector>& p) {
  const ShapeParams& s = spec.shape;
  switch (spec.name) {
    case ManifoldName::Rings2d: {
      const double norm = std::hypot(p[0], p[1]);
      double best = std::numeric_limits<double>::infinity();
      for (double r : s.ring_radii) best = std::min(best, std::abs(norm - r));
      return best;
    }
    case ManifoldName::Moons2d: {
      const double first = half_circle_distance(p[0], p[1], 0.0, 0.0, true);
      const double second = half_circle_distance(p[0], p[1], 1.0, 1.0 - s.moons_delta, false);
      return std::min(first, second);
    }
    case ManifoldName::Checker2d: {
      const int m = s.checker_cells;
      const double w = 2.0 / m;
      double best = std::numeric_limits<double>::infinity();
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
          if ((i + j) % 2 == 0)
            best = std::min(best, box_distance(p[0], p[1], -1.0 + i * w, -1.0 + (i + 1) * w,
                                               -1.0 + j * w, -1.0 + (j + 1) * w));
      return best;
    }
    case ManifoldName::Torus3d: {
      const double ring = std::hypot(p[0], p[1]) - s.torus_major;
      return std::abs(std::hypot(ring, p[2]) - s.torus_minor);
    }
    default:
      break;
  }
  throw ConfigError("closed-form distance not available for " +
                    std::string(manifold_name(spec.name)));
}

}  // namespace

std::string_view manifold_name(ManifoldName name) {
  for (const auto& entry : kNames)
    if (entry.name == name) return entry.text;
  return "unknown";
}

ManifoldName parse_manifold_name(std::string_view text) {
  for (const auto& entry : kNames)
    if (entry.text == text) return entry.name;
  throw ConfigError("unknown dataset name: " + std::string(text));
}

const std::vector<ManifoldName>& all_manifolds() {
  static const std::vector<ManifoldName> names = [] {
    std::vector<ManifoldName> out;
    for (const auto& entry : kNames) out.push_back(entry.name);
    return out;
  }();
  return names;
}

ManifoldSpec ManifoldSpec::preset(ManifoldName name, double jitter_sigma) {
  ManifoldSpec spec;
  spec.name = name;
  spec.jitter_sigma = jitter_sigma;
  switch (name) {
    case ManifoldName::Rings2d:
    case ManifoldName::Spiral2d:
      spec.ambient_dim = 2;
      spec.intrinsic_dim = 1;
      break;
    case ManifoldName::Moons2d:
    case ManifoldName::Checker2d:
      spec.ambient_dim = 2;
      spec.intrinsic_dim = 2;
      break;
    case ManifoldName::Helix3d:
      spec.ambient_dim = 3;
      spec.intrinsic_dim = 1;
      break;
    case ManifoldName::Torus3d:
      spec.ambient_dim = 3;
      spec.intrinsic_dim = 2;
      break;
  }
  spec.validate();
  return spec;
}

void ManifoldSpec::validate() const {
  if (intrinsic_dim < 1 || intrinsic_dim > 2 || intrinsic_dim > ambient_dim)
    throw ConfigError("intrinsic dimension must be 1 or 2 and at most the ambient dimension");
  if (!(jitter_sigma >= 0.0)) throw ConfigError("jitter sigma must be nonnegative");
  const auto& radii = shape.ring_radii;
  if (radii.empty()) throw ConfigError("at least one ring radius required");
  for (std::size_t i = 0; i < radii.size(); ++i) {
    if (!(radii[i] > 0.0)) throw ConfigError("ring radii must be positive");
    if (i > 0 && !(radii[i] > radii[i - 1]))
      throw ConfigError("ring radii must be strictly increasing");
  }
  if (shape.checker_cells < 1) throw ConfigError("checker grid needs at least one cell");
  if (!(shape.spiral_s_max > shape.spiral_s_min)) throw ConfigError("empty spiral range");
}

CurveParam curve_range(const ManifoldSpec& spec) {
  if (spec.name == ManifoldName::Spiral2d) return {spec.shape.spiral_s_min, spec.shape.spiral_s_max};
  if (spec.name == ManifoldName::Helix3d) return {0.0, kTwoPi};
  throw ConfigError(std::string(manifold_name(spec.name)) + " is not a curve dataset");
}

Vector curve_point(const ManifoldSpec& spec, double s) {
  if (spec.name == ManifoldName::Spiral2d) {
    const double r = spec.shape.spiral_a + spec.shape.spiral_b * s;
    return Vector{{r * std::cos(s), r * std::sin(s)}};
  }
  if (spec.name == ManifoldName::Helix3d) return Vector{{std::cos(s), std::sin(s), s}};
  throw ConfigError(std::string(manifold_name(spec.name)) + " is not a curve dataset");
}

Dataset sample_dataset(const ManifoldSpec& spec, std::size_t n, std::uint64_t seed) {
  spec.validate();
  if (n == 0) throw ConfigError("dataset size must be at least 1");
  Rng rng(seed, Stream::Dataset, static_cast<std::uint64_t>(spec.name));
  const ShapeParams& s = spec.shape;
  Matrix pts(static_cast<Eigen::Index>(n), spec.ambient_dim);
  for (Eigen::Index i = 0; i < pts.rows(); ++i) {
    switch (spec.name) {
      case ManifoldName::Rings2d: {
        const double r = s.ring_radii[rng.below(s.ring_radii.size())];
        const double theta = rng.uniform(0.0, kTwoPi);
        pts(i, 0) = r * std::cos(theta);
        pts(i, 1) = r * std::sin(theta);
        break;
      }
      case ManifoldName::Spiral2d:
      case ManifoldName::Helix3d: {
        const CurveParam range = curve_range(spec);
        pts.row(i) = curve_point(spec, rng.uniform(range.lo, range.hi)).transpose();
        break;
      }
      case ManifoldName::Moons2d: {
        const bool second = rng.below(2) == 1;
        const double theta = rng.uniform(0.0, std::numbers::pi);
        if (!second) {
          pts(i, 0) = std::cos(theta);
          pts(i, 1) = std::sin(theta);
        } else {
          pts(i, 0) = 1.0 - std::cos(theta);
          pts(i, 1) = 1.0 - std::sin(theta) - s.moons_delta;
        }
        break;
      }
      case ManifoldName::Checker2d: {
        const int m = s.checker_cells;
        const double w = 2.0 / m;
        // Enumerate black cells (i + j even) and pick one uniformly.
        const std::uint64_t black = (static_cast<std::uint64_t>(m) * m + 1) / 2;
        const std::uint64_t pick = rng.below(black);
        int ci = 0, cj = 0;
        std::uint64_t seen = 0;
        for (int a = 0; a < m; ++a)
          for (int b = 0; b < m; ++b)
            if ((a + b) % 2 == 0 && seen++ == pick) {
              ci = a;
              cj = b;
            }
        pts(i, 0) = rng.uniform(-1.0 + ci * w, -1.0 + (ci + 1) * w);
        pts(i, 1) = rng.uniform(-1.0 + cj * w, -1.0 + (cj + 1) * w);
        break;
      }
      case ManifoldName::Torus3d: {
        const double u = rng.uniform(0.0, kTwoPi);
        const double v = rng.uniform(0.0, kTwoPi);
        const double ring = s.torus_major + s.torus_minor * std::cos(v);
        pts(i, 0) = ring * std::cos(u);
        pts(i, 1) = ring * std::sin(u);
        pts(i, 2) = s.torus_minor * std::sin(v);
        break;
      }
    }
    if (spec.jitter_sigma > 0.0)
      for (int r = 0; r < spec.ambient_dim; ++r) pts(i, r) += spec.jitter_sigma * rng.normal();
  }
  return Dataset{std::move(pts), spec, seed};
}

double distance_to_manifold(const ManifoldSpec& spec, const Eigen::Ref<const Vector>& point) {
  require_dims(point.size() == spec.ambient_dim, "point dimension does not match dataset");
  if (is_curve(spec.name)) return curve_distance(spec, make_grid(spec), point);
  return closed_form_distance(spec, point);
}

double off_manifold_rate(const ManifoldSpec& spec, const Matrix& points, double threshold) {
  if (points.rows() == 0) throw ConfigError("off-manifold rate of an empty point set");
  if (!(threshold > 0.0)) throw ConfigError("off-manifold threshold must be positive");
  require_dims(points.cols() == spec.ambient_dim, "point dimension does not match dataset");
  const bool curve = is_curve(spec.name);
  const CurveGrid grid = curve ? make_grid(spec) : CurveGrid{};
  std::size_t off = 0;
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    const Vector p = points.row(i).transpose();
    const double dist = curve ? curve_distance(spec, grid, p) : closed_form_distance(spec, p);
    if (dist > threshold) ++off;
  }
  return static_cast<double>(off) / static_cast<double>(points.rows());
}

}  // namespace magt
