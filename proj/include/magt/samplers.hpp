#pragma once
// One-shot transport sampling and M-DDIM: DDIM(eta) refinement driven by the
// anchor score estimator with one cached bank.

#include <cstdint>
#include <functional>
#include <string_view>
#include <vector>

#include "magt/common.hpp"
#include "magt/prior.hpp"
#include "magt/schedule.hpp"
#include "magt/transport_net.hpp"

namespace magt {

struct SamplerConfig {
  enum class Kind { OneShot, MDdim };
  Kind kind = Kind::OneShot;
  double t_high = 0.90;
  double t_low = 0.05;
  int steps = 205;
  double eta = 1.0;
  Eigen::Index bank_size = 1024;

  void validate() const;
};

std::string_view sampler_name(SamplerConfig::Kind kind);
SamplerConfig::Kind parse_sampler(std::string_view text);

struct SampleResult {
  Matrix samples;  // n x D
  long nfe = 0;    // network (score) evaluations per sample batch
};

/// Rows h(u_i) with u_i drawn from the prior.
SampleResult sample_one_shot(const TransportNet& net, const LatentPrior& prior, Eigen::Index n,
                             std::uint64_t seed);

/// Levels visited by M-DDIM: `steps` values of t uniformly spaced from t_high
/// down to t_low (just t_high when steps == 1).
std::vector<double> m_ddim_levels(const SamplerConfig& config);

/// Called with the state x of one trajectory on arrival at each level
/// (step < steps) and with the returned sample (step == steps, clean level).
using TrajectoryObserver =
    std::function<void(Eigen::Index trajectory, int step, const NoiseLevel& level, const Vector& x)>;

/// One score evaluation per level; each step forms the Tweedie prediction
/// x0 = (x + sigma^2 s) / alpha and moves to the next level with the DDIM(eta)
/// transition. The last transition targets the clean level (alpha = 1,
/// sigma = 0), so the returned sample is the final Tweedie prediction.
/// Trajectory i draws its noise from its own stream.
SampleResult sample_m_ddim(const TransportNet& net, const LatentPrior& prior,
                           const SamplerConfig& config, Eigen::Index n, std::uint64_t seed,
                           const TrajectoryObserver& observer = {});

/// The same refinement with an explicit (e.g. exact, finite-atom) bank.
struct AnchorBank;
SampleResult sample_m_ddim(const AnchorBank& bank, const SamplerConfig& config, Eigen::Index n,
                           std::uint64_t seed, const TrajectoryObserver& observer = {});

/// DDIM(eta) noise scale for a move from `from` to `to`, clipped to [0, to.sigma].
double ddim_sigma(const NoiseLevel& from, const NoiseLevel& to, double eta);

}  // namespace magt
