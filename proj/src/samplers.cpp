#include "magt/samplers.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "magt/anchor_score.hpp"
#include "magt/kernels.hpp"
#include "magt/rng.hpp"

namespace magt {

void SamplerConfig::validate() const {
  if (kind == Kind::OneShot) return;
  if (!(t_low > 0.0 && t_high < 1.0 && t_low < t_high))
    throw ConfigError("M-DDIM needs 0 < t_low < t_high < 1");
  if (steps < 1) throw ConfigError("M-DDIM needs at least one step");
  if (!(eta >= 0.0 && eta <= 1.0)) throw ConfigError("M-DDIM eta must lie in [0, 1]");
  if (bank_size < 1) throw ConfigError("M-DDIM bank size must be positive");
}

std::string_view sampler_name(SamplerConfig::Kind kind) {
  return kind == SamplerConfig::Kind::OneShot ? "one_shot" : "m_ddim";
}

SamplerConfig::Kind parse_sampler(std::string_view text) {
  if (text == "one_shot" || text == "one-shot" || text == "magt") return SamplerConfig::Kind::OneShot;
  if (text == "m_ddim" || text == "m-ddim") return SamplerConfig::Kind::MDdim;
  throw ConfigError("unknown sampler: " + std::string(text) + " (expected one_shot or m_ddim)");
}

SampleResult sample_one_shot(const TransportNet& net, const LatentPrior& prior, Eigen::Index n,
                             std::uint64_t seed) {
  require_dims(prior.dim() == net.input_dim(), "sampler: prior and network latent dimensions differ");
  Rng rng(seed, Stream::Sampler);
  const Matrix latents = prior.sample(rng, n);
  return SampleResult{net.forward(latents), 1};
}

std::vector<double> m_ddim_levels(const SamplerConfig& config) {
  config.validate();
  std::vector<double> ts(static_cast<std::size_t>(config.steps));
  if (config.steps == 1) {
    ts[0] = config.t_high;
    return ts;
  }
  for (int i = 0; i < config.steps; ++i)
    ts[static_cast<std::size_t>(i)] =
        config.t_high + (config.t_low - config.t_high) * static_cast<double>(i) / (config.steps - 1);
  ts.back() = config.t_low;
  return ts;
}

double ddim_sigma(const NoiseLevel& from, const NoiseLevel& to, double eta) {
  if (to.sigma <= 0.0) return 0.0;
  const double ratio = (from.alpha * from.alpha * to.sigma * to.sigma) /
                       (to.alpha * to.alpha * from.sigma * from.sigma);
  const double value = eta * to.sigma * std::sqrt(std::max(0.0, 1.0 - ratio));
  return std::clamp(value, 0.0, to.sigma);
}

SampleResult sample_m_ddim(const AnchorBank& bank, const SamplerConfig& config, Eigen::Index n,
                           std::uint64_t seed, const TrajectoryObserver& observer) {
  const std::vector<double> ts = m_ddim_levels(config);
  std::vector<NoiseLevel> levels;
  for (double t : ts) levels.push_back(vp_level(t));
  levels.push_back(NoiseLevel{0.0, 1.0, 0.0});

  const auto& kern = kernels::active();
  const int dim = bank.ambient_dim();
  const Eigen::Index count = bank.size();
  const bool ratio = bank.proposal == ProposalKind::MapLaplace;
  Vector log_w(count);
  Vector mean(dim);
  Vector x(dim);
  Vector x0(dim);
  Matrix out(n, dim);

  for (Eigen::Index traj = 0; traj < n; ++traj) {
    Rng rng(seed, Stream::Sampler, static_cast<std::uint64_t>(traj) + 1);
    for (int r = 0; r < dim; ++r) x[r] = rng.normal();
    for (int step = 0; step < config.steps; ++step) {
      const NoiseLevel& cur = levels[static_cast<std::size_t>(step)];
      const NoiseLevel& next = levels[static_cast<std::size_t>(step) + 1];
      if (observer) observer(traj, step, cur, x);

      kern.sq_dist(x.data(), bank.outputs_by_dim.data(), count, dim, count, cur.alpha, log_w.data());
      log_w *= -0.5 / (cur.sigma * cur.sigma);
      if (ratio) log_w += bank.prior_log_density - *bank.proposal_log_density;
      const double top = log_w.maxCoeff();
      if (!std::isfinite(top))
        throw NumericalError("M-DDIM importance weights became non-finite at step " + std::to_string(step));
      double total = 0.0;
      for (Eigen::Index k = 0; k < count; ++k) {
        const double shifted = log_w[k] - top;
        const double w = shifted < kLogWeightFloor ? 0.0 : std::exp(shifted);
        log_w[k] = w;
        total += w;
      }
      for (int r = 0; r < dim; ++r)
        mean[r] = kern.dot(log_w.data(), bank.outputs_by_dim.data() + r * count, count) / total;

      // Tweedie: x0 = (x + sigma^2 score) / alpha with score = (alpha m - x) / sigma^2, i.e. x0 = m.
      const Vector score = (cur.alpha * mean - x) / (cur.sigma * cur.sigma);
      x0 = (x + cur.sigma * cur.sigma * score) / cur.alpha;
      const Vector eps_hat = (x - cur.alpha * x0) / cur.sigma;
      const double noise_scale = ddim_sigma(cur, next, config.eta);
      const double keep = std::sqrt(std::max(0.0, next.sigma * next.sigma - noise_scale * noise_scale));
      x = next.alpha * x0 + keep * eps_hat;
      if (noise_scale > 0.0)
        for (int r = 0; r < dim; ++r) x[r] += noise_scale * rng.normal();
      if (!x.allFinite())
        throw NumericalError("M-DDIM state became non-finite at step " + std::to_string(step) +
                             " (trajectory " + std::to_string(traj) + ")");
    }
    if (observer) observer(traj, config.steps, levels.back(), x);
    out.row(traj) = x.transpose();
  }
  return SampleResult{std::move(out), config.steps};
}

SampleResult sample_m_ddim(const TransportNet& net, const LatentPrior& prior,
                           const SamplerConfig& config, Eigen::Index n, std::uint64_t seed,
                           const TrajectoryObserver& observer) {
  config.validate();
  const AnchorBank bank = build_bank_mc(net, prior, config.bank_size, seed);
  return sample_m_ddim(bank, config, n, seed, observer);
}

}  // namespace magt
