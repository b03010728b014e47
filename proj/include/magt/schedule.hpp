#pragma once
// Variance-preserving noise levels: alpha_t = sqrt(1 - t), sigma_t = sqrt(t).

#include "magt/common.hpp"

namespace magt {

struct NoiseLevel {
  double t;
  double alpha;
  double sigma;
};

/// Throws ConfigError unless 0 < t < 1.
NoiseLevel vp_level(double t);

/// alpha * y0 + sigma * noise. The caller supplies the standard-normal draw.
Vector corrupt(const NoiseLevel& level, const Eigen::Ref<const Vector>& y0,
               const Eigen::Ref<const Vector>& noise);

/// Row-wise corrupt for a batch.
Matrix corrupt_rows(const NoiseLevel& level, const Matrix& y0, const Matrix& noise);

}  // namespace magt
