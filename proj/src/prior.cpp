#include "magt/prior.hpp"

#include <algorithm>
#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <limits>
#include <numbers>

namespace magt {
namespace {
const double kLogTwoPi = std::log(2.0 * std::numbers::pi);
}

LatentPrior LatentPrior::uniform(int dim, double lo, double hi) {
  if (!(hi > lo)) throw ConfigError("uniform prior needs lo < hi");
  return LatentPrior(Kind::Uniform, dim, lo, hi);
}

double LatentPrior::log_density(const Eigen::Ref<const Vector>& u) const {
  require_dims(u.size() == dim_, "prior: latent dimension mismatch");
  if (kind_ == Kind::StandardNormal) return -0.5 * (dim_ * kLogTwoPi + u.squaredNorm());
  for (Eigen::Index i = 0; i < u.size(); ++i)
    if (u[i] < lo_ || u[i] >= hi_) return -std::numeric_limits<double>::infinity();
  return -dim_ * std::log(hi_ - lo_);
}

Vector LatentPrior::grad_log_density(const Eigen::Ref<const Vector>& u) const {
  require_dims(u.size() == dim_, "prior: latent dimension mismatch");
  if (kind_ == Kind::StandardNormal) return -u;
  return Vector::Zero(dim_);
}

Vector LatentPrior::log_density_rows(const Matrix& latents) const {
  Vector out(latents.rows());
  for (Eigen::Index i = 0; i < latents.rows(); ++i) out[i] = log_density(latents.row(i).transpose());
  return out;
}

Matrix LatentPrior::sample(Rng& rng, Eigen::Index n) const {
  if (kind_ == Kind::StandardNormal) return rng.normal_matrix(n, dim_);
  Matrix out(n, dim_);
  for (Eigen::Index i = 0; i < out.size(); ++i) out.data()[i] = rng.uniform(lo_, hi_);
  return out;
}

Matrix LatentPrior::from_unit_cube(const Matrix& unit) const {
  require_dims(unit.cols() == dim_, "prior: unit-cube point dimension mismatch");
  Matrix out(unit.rows(), unit.cols());
  if (kind_ == Kind::Uniform) {
    out = (lo_ + (hi_ - lo_) * unit.array()).matrix();
    return out;
  }
  const boost::math::normal_distribution<double> normal;
  constexpr double kEdge = 0x1.0p-33;
  for (Eigen::Index i = 0; i < unit.size(); ++i)
    out.data()[i] = boost::math::quantile(normal, std::clamp(unit.data()[i], kEdge, 1.0 - kEdge));
  return out;
}

}  // namespace magt
