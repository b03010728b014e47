#pragma once
// Counter-based random numbers keyed by (seed, stream). Every consumer draws
// from its own stream so datasets, anchors, training noise and
// initialization can be regenerated independently of one another.

#include <cmath>
#include <cstdint>
#include <numbers>

#include "magt/common.hpp"

namespace magt {

enum class Stream : std::uint64_t {
  Dataset = 1,
  Init = 2,
  Anchors = 3,
  TrainNoise = 4,
  Shuffle = 5,
  Sampler = 6,
  Subsample = 7,
  Laplace = 8,
  Scramble = 9,
  Experiment = 10,
};

constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Output i of a key is mix64(key + (i + 1) * golden), i.e. SplitMix64 run as
/// a pure function of (key, counter).
class Rng {
 public:
  Rng(std::uint64_t seed, Stream stream, std::uint64_t substream = 0)
      : key_(mix64(seed ^ mix64(static_cast<std::uint64_t>(stream) * 0x9e3779b97f4a7c15ULL +
                                mix64(substream + 0x632be59bd9b4e019ULL)))) {}

  /// Independent child generator; does not advance this one.
  Rng split(std::uint64_t child) const { return Rng(key_, child); }

  std::uint64_t next_u64() { return mix64(key_ + (++counter_) * 0x9e3779b97f4a7c15ULL); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    // Lemire's multiply-shift; bias is < n / 2^64 and irrelevant at our sizes.
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  /// Standard normal via Box-Muller; the second variate is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  Matrix normal_matrix(Eigen::Index rows, Eigen::Index cols) {
    Matrix out(rows, cols);
    for (Eigen::Index i = 0; i < out.size(); ++i) out.data()[i] = normal();
    return out;
  }

  std::uint64_t counter() const { return counter_; }

 private:
  Rng(std::uint64_t parent_key, std::uint64_t child) : key_(mix64(parent_key ^ mix64(child + 1))) {}

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace magt
