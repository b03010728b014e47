#pragma once
// Factorized latent base distributions.

#include "magt/common.hpp"
#include "magt/rng.hpp"

namespace magt {

class LatentPrior {
 public:
  enum class Kind { StandardNormal, Uniform };

  static LatentPrior standard_normal(int dim) { return LatentPrior(Kind::StandardNormal, dim, 0.0, 1.0); }
  /// Uniform on the box [lo, hi)^dim.
  static LatentPrior uniform(int dim, double lo = 0.0, double hi = 1.0);

  Kind kind() const { return kind_; }
  int dim() const { return dim_; }
  double lo() const { return lo_; }
  double hi() const { return hi_; }

  double log_density(const Eigen::Ref<const Vector>& u) const;
  /// Gradient of log_density (zero inside the uniform box).
  Vector grad_log_density(const Eigen::Ref<const Vector>& u) const;
  Vector log_density_rows(const Matrix& latents) const;

  Matrix sample(Rng& rng, Eigen::Index n) const;

  /// Coordinate-wise inverse CDF of points in [0,1)^dim. Normal coordinates are
  /// clamped to [2^-33, 1 - 2^-33] before inversion so the corner 0 stays finite.
  Matrix from_unit_cube(const Matrix& unit) const;

 private:
  LatentPrior(Kind kind, int dim, double lo, double hi) : kind_(kind), dim_(dim), lo_(lo), hi_(hi) {}

  Kind kind_;
  int dim_;
  double lo_;
  double hi_;
};

}  // namespace magt
