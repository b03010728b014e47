#pragma once
// Anchor-based estimation of the posterior mean E[h(U) | Y_t = y] and of the
// fixed-level score, by self-normalized importance sampling over a bank of
// transported latents.

#include <cstdint>
#include <functional>
#include <optional>
#include <string_view>

#include "magt/common.hpp"
#include "magt/prior.hpp"
#include "magt/schedule.hpp"
#include "magt/transport_net.hpp"

namespace magt {

enum class ProposalKind { PriorMc, PriorQmc, MapLaplace };

std::string_view proposal_name(ProposalKind kind);
ProposalKind parse_proposal(std::string_view text);

/// Any map from a batch of latents (rows) to ambient points (rows).
using TransportFn = std::function<Matrix(const Matrix&)>;

struct AnchorBank {
  Matrix latents;         // K x d
  Matrix outputs;         // K x D, h(latents) at construction time
  Matrix outputs_by_dim;  // D x K copy of outputs for the distance kernel
  ProposalKind proposal = ProposalKind::PriorMc;
  Vector prior_log_density;                    // K
  std::optional<Vector> proposal_log_density;  // K, MAP banks only
  /// TransportNet::version() of the network that produced `outputs`, or
  /// nullopt when built from an arbitrary TransportFn.
  std::optional<std::uint64_t> net_version;

  Eigen::Index size() const { return latents.rows(); }
  int ambient_dim() const { return static_cast<int>(outputs.cols()); }
  bool fresh_for(const TransportNet& net) const { return !net_version || *net_version == net.version(); }
};

/// Assembles a bank from precomputed outputs (validates shapes).
AnchorBank make_bank(Matrix latents, Matrix outputs, ProposalKind proposal, Vector prior_log_density,
                     std::optional<Vector> proposal_log_density = std::nullopt,
                     std::optional<std::uint64_t> net_version = std::nullopt);

struct ScoreEstimate {
  Vector score;           // (alpha * posterior_mean - y) / sigma^2
  Vector posterior_mean;  // sum_j w_j outputs_j
  double log_normalizer;  // logsumexp(log-weights) - log K
  double effective_sample_size;  // 1 / sum_j w_j^2 for normalized w
};

/// Unnormalized log-weights
///   log pi(u_j) - log q(u_j) - |y - alpha h(u_j)|^2 / (2 sigma^2)
/// with the Gaussian normalizing constant dropped. The ratio term is zero for
/// prior proposals.
Vector log_weights(const NoiseLevel& level, const AnchorBank& bank, const Eigen::Ref<const Vector>& y);

/// Log-weights this far below the maximum get weight exactly 0. exp(-600) is
/// ~1e-261, so sums are unaffected, and subnormals never reach the GEMMs.
inline constexpr double kLogWeightFloor = -600.0;

/// Softmax of `log_w` with max subtraction; returns log-sum-exp.
double normalize_log_weights(const Vector& log_w, Vector& weights);

ScoreEstimate estimate_score(const NoiseLevel& level, const AnchorBank& bank,
                             const Eigen::Ref<const Vector>& y);

/// Score for each row of `ys` (n x D), written into the rows of the result.
Matrix estimate_scores(const NoiseLevel& level, const AnchorBank& bank, const Matrix& ys);

// --- bank construction -----------------------------------------------------

AnchorBank build_bank_mc(const TransportNet& net, const LatentPrior& prior, Eigen::Index count,
                         std::uint64_t seed);
AnchorBank build_bank_mc(const TransportFn& transport, const LatentPrior& prior,
                         Eigen::Index count, std::uint64_t seed);

/// Sobol' points mapped through the prior's inverse CDF. Without a scramble
/// seed the raw (unrandomized) sequence is used.
AnchorBank build_bank_qmc(const TransportNet& net, const LatentPrior& prior, Eigen::Index count,
                          std::optional<std::uint64_t> scramble_seed);
AnchorBank build_bank_qmc(const TransportFn& transport, const LatentPrior& prior,
                          Eigen::Index count, std::optional<std::uint64_t> scramble_seed);

struct LaplaceOptions {
  int max_iters = 200;
  double grad_tol = 1e-6;
  int init_draws = 64;
  double armijo_c = 1e-4;
  int max_backtracks = 60;
  double zeta = 1.0;
  double tau2 = 1e-4;
  std::uint64_t seed = 0;  // initialization draws
};

struct LaplaceProposal {
  Vector map_point;  // d
  Matrix precision;  // zeta * (I + alpha^2/sigma^2 J^T J) + tau2 * I
  Matrix precision_cholesky;  // lower factor L with L L^T = precision
  double zeta = 1.0;
  double tau2 = 0.0;
  int iterations = 0;
  double final_grad_norm = 0.0;

  /// log N(u; map_point, precision^{-1})
  double log_density(const Eigen::Ref<const Vector>& u) const;
};

/// Negative log-posterior Phi(u) = |y - alpha h(u)|^2 / (2 sigma^2) - log pi(u).
double negative_log_posterior(const TransportNet& net, const LatentPrior& prior,
                              const NoiseLevel& level, const Eigen::Ref<const Vector>& y,
                              const Eigen::Ref<const Vector>& u);

/// Gradient descent with Armijo backtracking from the best of
/// `opts.init_draws` prior draws; Gauss-Newton precision at the end point.
/// Throws NumericalError on non-finite Phi or a non positive definite
/// precision.
LaplaceProposal fit_laplace_proposal(const TransportNet& net, const LatentPrior& prior,
                                     const NoiseLevel& level, const Eigen::Ref<const Vector>& y,
                                     const LaplaceOptions& opts = {});

/// Gaussian proposal with a given center and precision (no fitting).
LaplaceProposal make_gaussian_proposal(Vector center, Matrix precision);

/// K i.i.d. draws from the proposal, with prior and proposal log densities
/// recorded for the importance ratio.
AnchorBank build_bank_map(const TransportNet& net, const LatentPrior& prior,
                          const LaplaceProposal& proposal, Eigen::Index count, std::uint64_t seed);
AnchorBank build_bank_map(const TransportFn& transport, const LatentPrior& prior,
                          const LaplaceProposal& proposal, Eigen::Index count, std::uint64_t seed);
/// Fit + draw in one call.
AnchorBank build_bank_map(const TransportNet& net, const LatentPrior& prior,
                          const NoiseLevel& level, const Eigen::Ref<const Vector>& y,
                          Eigen::Index count, std::uint64_t seed, const LaplaceOptions& opts = {});

}  // namespace magt
