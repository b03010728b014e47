#pragma once
// Single-level denoising score matching with anchor-bank score estimates:
// loss, closed-form gradients w.r.t. the anchor outputs, the two-phase
// parameter update and the per-t training / selection loop.

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string_view>
#include <vector>

#include "magt/anchor_score.hpp"
#include "magt/common.hpp"
#include "magt/prior.hpp"
#include "magt/schedule.hpp"
#include "magt/transport_net.hpp"

namespace magt {

enum class OptimizerKind { Sgd, Adam };
std::string_view optimizer_name(OptimizerKind kind);
OptimizerKind parse_optimizer(std::string_view text);

enum class LrSchedule { Constant, Cosine };
std::string_view lr_schedule_name(LrSchedule schedule);
LrSchedule parse_lr_schedule(std::string_view text);

struct TrainConfig {
  std::vector<double> t_candidates{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  int latent_dim = 2;
  LatentPrior::Kind prior = LatentPrior::Kind::StandardNormal;
  std::vector<int> hidden{512, 512, 512, 512, 512};
  Eigen::Index anchor_count = 1024;  // K
  Eigen::Index batch_size = 256;     // B
  Eigen::Index chunk_size = 1024;    // K_c
  double learning_rate = 1e-4;
  OptimizerKind optimizer = OptimizerKind::Adam;
  /// Multiplier on the He-initialized output-layer weights.
  double output_init_scale = 0.1;
  LrSchedule lr_schedule = LrSchedule::Constant;
  int max_epochs = 200;
  /// Hard cap on updates per candidate t (0 = no cap beyond max_epochs).
  long max_updates = 0;
  std::uint64_t seed = 0;
  ProposalKind proposal = ProposalKind::PriorMc;
  /// Validation rows used for W2 (0 = all of them).
  Eigen::Index val_points = 5000;
  /// Validate every this many epochs; the last epoch is always validated.
  int validate_every = 0;

  void validate() const;
  LatentPrior make_prior() const;
  std::vector<int> layer_dims(int ambient_dim) const;
};

struct BatchLossReport {
  double loss = 0.0;  // mean over the batch of 1/2 |s_hat - target|^2
  double mean_ess = 0.0;
  double min_ess = 0.0;
  double grad_norm = 0.0;  // norm of the parameter gradient (two_phase_update only)
};

/// Mean loss; y_t = alpha y0 + sigma z, target -z / sigma. Throws ConfigError
/// if the bank was built from other parameter values than `net`'s.
BatchLossReport batch_loss(const TransportNet& net, const NoiseLevel& level, const AnchorBank& bank,
                           const Matrix& batch_y0, const Matrix& batch_noise);
/// Same without the freshness check.
BatchLossReport batch_loss(const NoiseLevel& level, const AnchorBank& bank, const Matrix& batch_y0,
                           const Matrix& batch_noise);

/// d(sum_b loss_b) / d(anchor output k), as a K x D matrix.
Matrix center_gradients(const NoiseLevel& level, const AnchorBank& bank, const Matrix& batch_y0,
                        const Matrix& batch_noise);

/// Gradient of sum_k <h(latents_k), center_grads_k> w.r.t. the parameters,
/// accumulated chunk by chunk (chunks of at most `chunk_size` rows).
ParameterGradient anchor_parameter_gradient(const TransportNet& net, const Matrix& latents,
                                            const Matrix& center_grads, Eigen::Index chunk_size);

class Optimizer {
 public:
  Optimizer(OptimizerKind kind, double learning_rate, std::size_t parameter_count,
            double beta1 = 0.9, double beta2 = 0.999, double epsilon = 1e-8);
  void step(TransportNet& net, const ParameterGradient& grad);
  void set_learning_rate(double lr) { lr_ = lr; }
  double learning_rate() const { return lr_; }
  long steps() const { return steps_; }

 private:
  OptimizerKind kind_;
  double lr_;
  double beta1_;
  double beta2_;
  double epsilon_;
  long steps_ = 0;
  std::vector<double> m_;
  std::vector<double> v_;
};

/// Anchor latents for one update: prior draws (mc) or a scrambled Sobol'
/// block mapped through the prior (qmc).
Matrix draw_anchor_latents(const LatentPrior& prior, ProposalKind proposal, Eigen::Index count,
                           std::uint64_t seed);

struct UpdateResult {
  BatchLossReport report;
  ParameterGradient gradient;  // gradient of the mean batch loss
};

/// Gradient of the mean batch loss for fixed anchor latents. Phase 1 runs the
/// bank forward without a tape (or keeps the tape when one chunk covers all
/// anchors) and forms the center gradients; Phase 2 backpropagates them chunk
/// by chunk.
UpdateResult two_phase_gradient(const TransportNet& net, const NoiseLevel& level, const Matrix& latents,
                                ProposalKind proposal, const LatentPrior& prior, const Matrix& batch_y0,
                                const Matrix& batch_noise, Eigen::Index chunk_size);

/// Fresh anchors from `anchor_seed`, gradient, one optimizer step.
BatchLossReport two_phase_update(TransportNet& net, const NoiseLevel& level, const TrainConfig& config,
                                 const LatentPrior& prior, const Matrix& batch_y0,
                                 const Matrix& batch_noise, Optimizer& optimizer,
                                 std::uint64_t anchor_seed);

struct EpochLogRow {
  int epoch = 0;
  double t = 0.0;
  double loss = 0.0;
  double grad_norm = 0.0;
  double mean_ess = 0.0;
  double val_metric = std::numeric_limits<double>::quiet_NaN();
};

struct TrainedCandidate {
  double t = 0.0;
  TransportNet net;
  double val_w2 = 0.0;
  double final_loss = 0.0;
  long updates = 0;
  double seconds = 0.0;
};

struct SelectionResult {
  std::vector<TrainedCandidate> candidates;  // one per t, in candidate order
  std::size_t selected = 0;
  std::vector<EpochLogRow> log;

  const TrainedCandidate& best() const { return candidates.at(selected); }
};

/// Validation W2 between |val| (or config.val_points) one-shot samples and the
/// validation rows.
double validation_w2(const TransportNet& net, const LatentPrior& prior, const Matrix& val,
                     Eigen::Index points, std::uint64_t seed);

/// Index of the smallest validation W2 (first on ties).
std::size_t select_candidate(const std::vector<TrainedCandidate>& candidates);

using EpochCallback = std::function<void(const EpochLogRow&)>;

/// Trains one freshly initialized network at level t.
TrainedCandidate train_single_level(const Matrix& train, const Matrix& val, double t,
                                    const TrainConfig& config, const EpochCallback& on_epoch = {},
                                    std::vector<EpochLogRow>* log = nullptr);

/// Trains one network per candidate t and picks the smallest validation W2.
SelectionResult train_and_select(const Matrix& train, const Matrix& val, const TrainConfig& config,
                                 const EpochCallback& on_epoch = {});

}  // namespace magt
