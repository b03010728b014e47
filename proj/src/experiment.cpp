#include "magt/experiment.hpp"

#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <cstring>

#include "magt/io.hpp"
#include "magt/rng.hpp"

namespace magt {

DataSplits make_splits(const ManifoldSpec& spec, std::size_t n_train, std::size_t n_val, std::size_t n_test,
                       std::uint64_t seed) {
  Rng root(seed, Stream::Experiment);
  DataSplits s;
  auto draw = [&](std::size_t n, std::uint64_t child) {
    return n == 0 ? Matrix(0, spec.ambient_dim) : sample_dataset(spec, n, root.split(child).next_u64()).points;
  };
  s.train = draw(n_train, 1);
  s.val = draw(n_val, 2);
  s.test = draw(n_test, 3);
  return s;
}

std::vector<std::string> EvalRow::columns() {
  return {"dataset", "method", "t", "K", "W2_mean", "W2_sd", "offmanifold", "seconds", "NFE", "seed"};
}

std::vector<std::string> EvalRow::fields() const {
  return {dataset,
          method,
          format_double(t),
          std::to_string(anchors),
          format_double(w2_mean),
          format_double(w2_sd),
          format_double(off_manifold),
          format_double(seconds),
          std::to_string(nfe),
          std::to_string(seed)};
}

SampleQuality evaluate_samples(const ManifoldSpec& spec, const Matrix& samples, const Matrix& test,
                               std::uint64_t seed) {
  require_dims(samples.cols() == test.cols(), "evaluate: sample and test dimensions differ");
  if (!samples.allFinite()) throw NumericalError("evaluate: samples contain non-finite values");
  SampleQuality q;
  const Eigen::Index points = std::min<Eigen::Index>({2000, samples.rows(), test.rows()});
  q.w2 = w2_subsampled(samples, test, points, 5, seed);
  q.off_manifold = off_manifold_rate(spec, samples);
  return q;
}

std::string run_id(const std::map<std::string, std::string>& settings) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&h](const std::string& s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
  };
  for (const auto& [key, value] : settings) feed(key + "=" + value + "\n");
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::optional<std::uint64_t> seed_from_env() {
  const char* raw = std::getenv("MAGT_SEED");
  if (!raw) return std::nullopt;
  std::uint64_t v = 0;
  const char* end = raw + std::strlen(raw);
  const auto res = std::from_chars(raw, end, v);
  if (res.ec != std::errc() || res.ptr != end || raw == end)
    throw ConfigError(std::string("MAGT_SEED must be an unsigned integer, got '") + raw + "'");
  return v;
}

}  // namespace magt
