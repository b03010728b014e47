#include "magt/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "magt/metrics.hpp"
#include "magt/qmc.hpp"
#include "magt/rng.hpp"
#include "magt/samplers.hpp"

namespace magt {
namespace {

struct Phase1 {
  Matrix center_grads;  // K x D, gradient of the summed loss
  BatchLossReport report;
};

Phase1 run_phase1(const NoiseLevel& level, const AnchorBank& bank, const Matrix& y0,
                  const Matrix& noise, bool want_grads) {
  require_dims(y0.rows() == noise.rows() && y0.cols() == noise.cols(),
               "batch: clean points and noise shapes differ");
  require_dims(y0.cols() == bank.ambient_dim(), "batch: ambient dimension differs from the bank");
  const Eigen::Index batch = y0.rows();
  if (batch < 1) throw ConfigError("empty training batch");
  const Eigen::Index count = bank.size();
  const double a = level.alpha;
  const double s2 = level.sigma * level.sigma;

  const Matrix y_t = corrupt_rows(level, y0, noise);
  Matrix weights(batch, count);
  Vector w;
  Phase1 out;
  out.report.min_ess = std::numeric_limits<double>::infinity();
  for (Eigen::Index b = 0; b < batch; ++b) {
    normalize_log_weights(log_weights(level, bank, y_t.row(b).transpose()), w);
    weights.row(b) = w.transpose();
    const double ess = 1.0 / w.squaredNorm();
    out.report.mean_ess += ess;
    out.report.min_ess = std::min(out.report.min_ess, ess);
  }
  out.report.mean_ess /= static_cast<double>(batch);

  const Matrix means = weights * bank.outputs;                        // B x D
  const Matrix residual = (a * means - y_t) / s2 + noise / level.sigma;  // s_hat - target
  out.report.loss = 0.5 * residual.squaredNorm() / static_cast<double>(batch);
  if (!std::isfinite(out.report.loss)) throw NumericalError("training loss is non-finite");
  if (!want_grads) return out;

  const Matrix c = (a / s2) * residual;                                    // B x D
  const Vector mean_dot_c = (means.array() * c.array()).rowwise().sum();  // B
  Matrix e = c * bank.outputs.transpose();                                // B x K: <y_k, c_b>
  e.colwise() -= mean_dot_c;
  e.array() *= weights.array();
  const Vector e_colsum = e.colwise().sum().transpose();  // K
  Matrix g = weights.transpose() * c;
  g.noalias() += (a / s2) * (e.transpose() * y_t);
  g -= ((a * a / s2) * e_colsum).asDiagonal() * bank.outputs;
  out.center_grads = std::move(g);
  return out;
}

double lr_at(const TrainConfig& config, long update, long total) {
  if (config.lr_schedule == LrSchedule::Constant || total <= 1) return config.learning_rate;
  const double frac = static_cast<double>(update) / static_cast<double>(total);
  return config.learning_rate * 0.5 * (1.0 + std::cos(std::numbers::pi * frac));
}

std::uint64_t level_key(double t) { return static_cast<std::uint64_t>(std::llround(t * 1e9)); }

}  // namespace

std::string_view optimizer_name(OptimizerKind kind) { return kind == OptimizerKind::Sgd ? "sgd" : "adam"; }

OptimizerKind parse_optimizer(std::string_view text) {
  if (text == "sgd") return OptimizerKind::Sgd;
  if (text == "adam") return OptimizerKind::Adam;
  throw ConfigError("unknown optimizer: " + std::string(text) + " (expected sgd or adam)");
}

std::string_view lr_schedule_name(LrSchedule schedule) {
  return schedule == LrSchedule::Constant ? "constant" : "cosine";
}

LrSchedule parse_lr_schedule(std::string_view text) {
  if (text == "constant") return LrSchedule::Constant;
  if (text == "cosine") return LrSchedule::Cosine;
  throw ConfigError("unknown learning-rate schedule: " + std::string(text));
}

void TrainConfig::validate() const {
  if (t_candidates.empty()) throw ConfigError("no candidate smoothing levels");
  for (double t : t_candidates)
    if (!(t > 0.0 && t < 1.0)) throw ConfigError("smoothing level t must lie in (0, 1)");
  if (latent_dim < 1) throw ConfigError("latent dimension must be positive");
  for (int w : hidden)
    if (w < 1) throw ConfigError("hidden widths must be positive");
  if (anchor_count < 1) throw ConfigError("anchor count K must be positive");
  if (chunk_size < 1 || chunk_size > anchor_count) throw ConfigError("chunk size must satisfy 1 <= K_c <= K");
  if (batch_size < 1) throw ConfigError("batch size must be positive");
  if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  if (!(output_init_scale > 0.0)) throw ConfigError("output init scale must be positive");
  if (max_epochs < 1) throw ConfigError("max_epochs must be positive");
  if (max_updates < 0) throw ConfigError("max_updates must be non-negative");
  if (val_points < 0) throw ConfigError("val_points must be non-negative");
  if (validate_every < 0) throw ConfigError("validate_every must be non-negative");
  if (proposal == ProposalKind::MapLaplace)
    throw ConfigError("training supports mc and qmc anchors; map proposals are per-query only");
}

LatentPrior TrainConfig::make_prior() const {
  return prior == LatentPrior::Kind::StandardNormal ? LatentPrior::standard_normal(latent_dim)
                                                    : LatentPrior::uniform(latent_dim);
}

std::vector<int> TrainConfig::layer_dims(int ambient_dim) const {
  std::vector<int> dims{latent_dim};
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(ambient_dim);
  return dims;
}

BatchLossReport batch_loss(const NoiseLevel& level, const AnchorBank& bank, const Matrix& batch_y0,
                           const Matrix& batch_noise) {
  return run_phase1(level, bank, batch_y0, batch_noise, false).report;
}

BatchLossReport batch_loss(const TransportNet& net, const NoiseLevel& level, const AnchorBank& bank,
                           const Matrix& batch_y0, const Matrix& batch_noise) {
  if (!bank.fresh_for(net)) throw ConfigError("anchor bank is stale: the network changed after it was built");
  return batch_loss(level, bank, batch_y0, batch_noise);
}

Matrix center_gradients(const NoiseLevel& level, const AnchorBank& bank, const Matrix& batch_y0,
                        const Matrix& batch_noise) {
  return run_phase1(level, bank, batch_y0, batch_noise, true).center_grads;
}

ParameterGradient anchor_parameter_gradient(const TransportNet& net, const Matrix& latents,
                                            const Matrix& center_grads, Eigen::Index chunk_size) {
  require_dims(latents.rows() == center_grads.rows(), "phase 2: latents and center gradients differ in rows");
  require_dims(center_grads.cols() == net.output_dim(), "phase 2: center gradient width mismatch");
  if (chunk_size < 1) throw ConfigError("chunk size must be positive");
  ParameterGradient grad = net.zero_gradient();
  ForwardTape tape;
  Eigen::Index covered = 0;
  for (Eigen::Index start = 0; start < latents.rows(); start += chunk_size) {
    const Eigen::Index rows = std::min(chunk_size, latents.rows() - start);
    net.forward(latents.middleRows(start, rows), tape);
    net.backward_params(tape, center_grads.middleRows(start, rows), grad);
    covered += rows;
  }
  if (covered != latents.rows()) throw NumericalError("phase 2 chunks do not partition the anchors");
  return grad;
}

Optimizer::Optimizer(OptimizerKind kind, double learning_rate, std::size_t parameter_count, double beta1,
                     double beta2, double epsilon)
    : kind_(kind), lr_(learning_rate), beta1_(beta1), beta2_(beta2), epsilon_(epsilon) {
  if (kind_ == OptimizerKind::Adam) {
    m_.assign(parameter_count, 0.0);
    v_.assign(parameter_count, 0.0);
  }
}

void Optimizer::step(TransportNet& net, const ParameterGradient& grad) {
  require_dims(grad.values.size() == net.parameter_count(), "optimizer: gradient size mismatch");
  std::span<double> params = net.mutable_parameters();
  ++steps_;
  if (kind_ == OptimizerKind::Sgd) {
    for (std::size_t i = 0; i < params.size(); ++i) params[i] -= lr_ * grad.values[i];
    return;
  }
  require_dims(m_.size() == params.size(), "optimizer: state size mismatch");
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(steps_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grad.values[i];
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * g;
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * g * g;
    params[i] -= lr_ * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + epsilon_);
  }
}

Matrix draw_anchor_latents(const LatentPrior& prior, ProposalKind proposal, Eigen::Index count,
                           std::uint64_t seed) {
  switch (proposal) {
    case ProposalKind::PriorMc: {
      Rng rng(seed, Stream::Anchors);
      return prior.sample(rng, count);
    }
    case ProposalKind::PriorQmc:
      return prior.from_unit_cube(sobol_points(static_cast<std::size_t>(count), prior.dim(), seed));
    case ProposalKind::MapLaplace:
      break;
  }
  throw ConfigError("anchor latents for map proposals depend on the query point");
}

UpdateResult two_phase_gradient(const TransportNet& net, const NoiseLevel& level, const Matrix& latents,
                                ProposalKind proposal, const LatentPrior& prior, const Matrix& batch_y0,
                                const Matrix& batch_noise, Eigen::Index chunk_size) {
  if (proposal == ProposalKind::MapLaplace) throw ConfigError("training supports mc and qmc anchors only");
  if (chunk_size < 1) throw ConfigError("chunk size must be positive");
  require_dims(latents.cols() == net.input_dim(), "anchor latents do not match the network input");
  const bool single_chunk = chunk_size >= latents.rows();

  // Phase 1. When one chunk covers the bank the forward pass is recorded once
  // and reused by phase 2 instead of being recomputed.
  ForwardTape tape;
  Matrix outputs = single_chunk ? net.forward(latents, tape) : net.forward(latents);
  const AnchorBank bank =
      make_bank(latents, std::move(outputs), proposal, prior.log_density_rows(latents), std::nullopt, net.version());
  Phase1 p1 = run_phase1(level, bank, batch_y0, batch_noise, true);
  p1.center_grads /= static_cast<double>(batch_y0.rows());

  // Phase 2.
  UpdateResult result;
  if (single_chunk) {
    result.gradient = net.zero_gradient();
    net.backward_params(tape, p1.center_grads, result.gradient);
  } else {
    result.gradient = anchor_parameter_gradient(net, latents, p1.center_grads, chunk_size);
  }
  result.report = p1.report;
  result.report.grad_norm = result.gradient.norm();
  if (!std::isfinite(result.report.grad_norm)) throw NumericalError("parameter gradient is non-finite");
  return result;
}

BatchLossReport two_phase_update(TransportNet& net, const NoiseLevel& level, const TrainConfig& config,
                                 const LatentPrior& prior, const Matrix& batch_y0,
                                 const Matrix& batch_noise, Optimizer& optimizer,
                                 std::uint64_t anchor_seed) {
  config.validate();
  const Matrix latents = draw_anchor_latents(prior, config.proposal, config.anchor_count, anchor_seed);
  UpdateResult r = two_phase_gradient(net, level, latents, config.proposal, prior, batch_y0, batch_noise,
                                      config.chunk_size);
  optimizer.step(net, r.gradient);
  return r.report;
}

double validation_w2(const TransportNet& net, const LatentPrior& prior, const Matrix& val,
                     Eigen::Index points, std::uint64_t seed) {
  const Eigen::Index n = points > 0 ? std::min(points, val.rows()) : val.rows();
  if (n < 1) throw ConfigError("validation set is empty");
  const Matrix samples = sample_one_shot(net, prior, n, seed).samples;
  if (!samples.allFinite()) throw NumericalError("one-shot samples are non-finite");
  if (n <= kMaxExactW2Points) return w2_exact(samples, val.topRows(n));
  return w2_subsampled(samples, val.topRows(n), 2000, 5, seed).mean;
}

std::size_t select_candidate(const std::vector<TrainedCandidate>& candidates) {
  if (candidates.empty()) throw ConfigError("no candidates to select from");
  std::size_t best = 0;
  for (std::size_t i = 1; i < candidates.size(); ++i)
    if (candidates[i].val_w2 < candidates[best].val_w2) best = i;
  return best;
}

TrainedCandidate train_single_level(const Matrix& train, const Matrix& val, double t,
                                    const TrainConfig& config, const EpochCallback& on_epoch,
                                    std::vector<EpochLogRow>* log) {
  config.validate();
  if (train.rows() < 1) throw ConfigError("training set is empty");
  require_dims(val.cols() == train.cols(), "train and validation dimensions differ");
  const NoiseLevel level = vp_level(t);
  const LatentPrior prior = config.make_prior();
  const int ambient = static_cast<int>(train.cols());
  const std::uint64_t key = level_key(t);

  TrainedCandidate cand{t, TransportNet::init(config.layer_dims(ambient), Rng(config.seed, Stream::Init, key).next_u64()),
                        0.0, 0.0, 0, 0.0};
  cand.net.mutable_weight(cand.net.layer_count() - 1) *= config.output_init_scale;
  cand.net.touch();
  Optimizer opt(config.optimizer, config.learning_rate, cand.net.parameter_count());

  const Eigen::Index batch = std::min(config.batch_size, train.rows());
  const Eigen::Index per_epoch = train.rows() / batch;
  long total = static_cast<long>(per_epoch) * config.max_epochs;
  if (config.max_updates > 0) total = std::min(total, config.max_updates);

  const Rng shuffle_root(config.seed, Stream::Shuffle, key);
  const Rng noise_root(config.seed, Stream::TrainNoise, key);
  const Rng anchor_root(config.seed, Stream::Anchors, key);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(train.rows()));
  Matrix y0(batch, ambient);
  const auto start = std::chrono::steady_clock::now();

  long update = 0;
  for (int epoch = 1; epoch <= config.max_epochs && update < total; ++epoch) {
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    Rng shuffle = shuffle_root.split(static_cast<std::uint64_t>(epoch));
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[shuffle.below(i)]);

    EpochLogRow row;
    row.epoch = epoch;
    row.t = t;
    long done = 0;
    for (Eigen::Index b = 0; b < per_epoch && update < total; ++b, ++update, ++done) {
      for (Eigen::Index i = 0; i < batch; ++i) y0.row(i) = train.row(order[static_cast<std::size_t>(b * batch + i)]);
      Rng noise_rng = noise_root.split(static_cast<std::uint64_t>(update));
      const Matrix noise = noise_rng.normal_matrix(batch, ambient);
      const std::uint64_t anchor_seed = anchor_root.split(static_cast<std::uint64_t>(update)).next_u64();
      opt.set_learning_rate(lr_at(config, update, total));
      const BatchLossReport rep = two_phase_update(cand.net, level, config, prior, y0, noise, opt, anchor_seed);
      row.loss += rep.loss;
      row.grad_norm += rep.grad_norm;
      row.mean_ess += rep.mean_ess;
    }
    if (done > 0) {
      row.loss /= static_cast<double>(done);
      row.grad_norm /= static_cast<double>(done);
      row.mean_ess /= static_cast<double>(done);
    }
    const bool last = epoch == config.max_epochs || update >= total;
    if (last || (config.validate_every > 0 && epoch % config.validate_every == 0)) {
      row.val_metric = validation_w2(cand.net, prior, val, config.val_points,
                                     Rng(config.seed, Stream::Sampler, key).next_u64());
      cand.val_w2 = row.val_metric;
    }
    cand.final_loss = row.loss;
    if (log) log->push_back(row);
    if (on_epoch) on_epoch(row);
  }
  cand.updates = update;
  cand.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return cand;
}

SelectionResult train_and_select(const Matrix& train, const Matrix& val, const TrainConfig& config,
                                 const EpochCallback& on_epoch) {
  config.validate();
  SelectionResult result;
  for (double t : config.t_candidates)
    result.candidates.push_back(train_single_level(train, val, t, config, on_epoch, &result.log));
  result.selected = select_candidate(result.candidates);
  return result;
}

}  // namespace magt
