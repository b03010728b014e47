#pragma once
// Benchmark protocol shared by the CLI and the acceptance runner: data
// splits, evaluation rows and run identifiers.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "magt/manifolds.hpp"
#include "magt/metrics.hpp"

namespace magt {

struct DataSplits {
  Matrix train;
  Matrix val;
  Matrix test;
};

/// Independent train/val/test draws; each split has its own dataset seed
/// derived from `seed`. A split of size 0 is an empty matrix.
DataSplits make_splits(const ManifoldSpec& spec, std::size_t n_train, std::size_t n_val, std::size_t n_test,
                       std::uint64_t seed);

struct EvalRow {
  std::string dataset;
  std::string method;
  double t = 0.0;
  long anchors = 0;  // K
  double w2_mean = 0.0;
  double w2_sd = 0.0;
  double off_manifold = 0.0;
  double seconds = 0.0;
  long nfe = 0;
  std::uint64_t seed = 0;

  static std::vector<std::string> columns();
  std::vector<std::string> fields() const;
};

struct SampleQuality {
  W2Estimate w2;
  double off_manifold = 0.0;
};

/// Subsampled W2 against `test` (2000 points x 5 repeats, or exact when both
/// sets are smaller) and the off-manifold rate at threshold 0.1.
SampleQuality evaluate_samples(const ManifoldSpec& spec, const Matrix& samples, const Matrix& test,
                               std::uint64_t seed);

/// 16 hex digits of FNV-1a over the sorted key=value lines.
std::string run_id(const std::map<std::string, std::string>& settings);

/// Seed from the MAGT_SEED environment variable, if set. Throws ConfigError
/// when it is not an unsigned integer.
std::optional<std::uint64_t> seed_from_env();

}  // namespace magt
