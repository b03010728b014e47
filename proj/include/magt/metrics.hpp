#pragma once
// Empirical 2-Wasserstein distance by exact assignment, plus timing helpers.

#include <cstdint>
#include <functional>
#include <vector>

#include "magt/common.hpp"

namespace magt {

/// Minimum-cost perfect matching of a dense n x n cost matrix (row-major) by
/// the Jonker-Volgenant shortest augmenting path method. Returns the column
/// assigned to each row.
std::vector<int> solve_assignment(const Matrix& cost);

inline constexpr Eigen::Index kMaxExactW2Points = 8192;

/// sqrt(min over matchings of sum |a_i - b_pi(i)|^2 / N) for equal-size sets.
double w2_exact(const Matrix& a, const Matrix& b);

struct W2Estimate {
  double mean = 0.0;
  double sd = 0.0;  // sample standard deviation over repeats (0 for one repeat)
  std::vector<double> values;
};

/// Mean and spread of w2_exact over `repeats` subsample pairs of `points`
/// rows each (without replacement). Sets of equal size share the row indices.
W2Estimate w2_subsampled(const Matrix& a, const Matrix& b, Eigen::Index points = 2000,
                         int repeats = 5, std::uint64_t seed = 0);

struct Timing {
  double seconds = 0.0;
  long nfe = 0;
};

/// Runs `sampler(n)` once to warm up, then once more under a monotonic clock.
/// The sampler returns its network-evaluation count.
Timing timing_harness(const std::function<long(Eigen::Index)>& sampler, Eigen::Index n);

}  // namespace magt
