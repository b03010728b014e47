#pragma once
// Intrinsic (chart) log-density on the learned image manifold and the
// anchor-bank estimate of the smoothed ambient log-density at a fixed level.

#include <cstdint>

#include "magt/anchor_score.hpp"
#include "magt/common.hpp"
#include "magt/prior.hpp"
#include "magt/schedule.hpp"
#include "magt/transport_net.hpp"

namespace magt {

/// Smallest eigenvalue of J^T J accepted before reporting rank deficiency.
inline constexpr double kMinGramEigenvalue = 1e-12;

/// log pi(u) - 1/2 log det(J^T J) for a D x d Jacobian J. Throws
/// NumericalError when J^T J is numerically singular.
double chart_log_density(double prior_log_density, const Matrix& jacobian);

/// Chart formula at h(latent), using the network's input Jacobian.
double intrinsic_log_density(const TransportNet& net, const LatentPrior& prior,
                             const Eigen::Ref<const Vector>& latent);

/// log[(1/K) sum_j N(y; alpha h_j, sigma^2 I)], in the log domain. Throws
/// ConfigError for MAP banks.
double smoothed_ambient_log_density(const NoiseLevel& level, const AnchorBank& bank,
                                    const Eigen::Ref<const Vector>& y);

struct PreimageOptions {
  int restarts = 16;
  int max_iters = 200;
  double tol = 1e-10;  // on the squared residual
  std::uint64_t seed = 0;
};

struct PreimageResult {
  Vector latent;
  double residual = 0.0;  // |h(latent) - y|
  int iterations = 0;
};

/// Best-effort latent u with h(u) close to y: Levenberg-Marquardt from the
/// best of several prior draws. Finds one preimage; non-injective fibers are
/// not enumerated.
PreimageResult find_preimage(const TransportNet& net, const LatentPrior& prior,
                             const Eigen::Ref<const Vector>& y, const PreimageOptions& opts = {});

}  // namespace magt
