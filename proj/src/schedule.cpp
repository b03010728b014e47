#include "magt/schedule.hpp"

#include <cmath>
#include <string>

namespace magt {

NoiseLevel vp_level(double t) {
  if (!(t > 0.0 && t < 1.0)) throw ConfigError("noise level t must lie in (0, 1), got " + std::to_string(t));
  return NoiseLevel{t, std::sqrt(1.0 - t), std::sqrt(t)};
}

Vector corrupt(const NoiseLevel& level, const Eigen::Ref<const Vector>& y0,
               const Eigen::Ref<const Vector>& noise) {
  require_dims(y0.size() == noise.size(), "corrupt: signal and noise sizes differ");
  return level.alpha * y0 + level.sigma * noise;
}

Matrix corrupt_rows(const NoiseLevel& level, const Matrix& y0, const Matrix& noise) {
  require_dims(y0.rows() == noise.rows() && y0.cols() == noise.cols(),
               "corrupt: signal and noise shapes differ");
  return level.alpha * y0 + level.sigma * noise;
}

}  // namespace magt
