#pragma once
// Base-2 digital low-discrepancy points (Sobol' construction) with optional
// nested uniform (Owen) scrambling.

#include <cstdint>
#include <optional>

#include "magt/common.hpp"

namespace magt {

inline constexpr int kMaxSobolDim = 32;

/// First `count` points of the Sobol' sequence in natural (non-Gray) order,
/// 32-bit resolution. With a scramble seed each coordinate receives an
/// independent hash-based nested uniform scramble. Throws ConfigError for
/// dim > 32 or count > 2^32.
Matrix sobol_points(std::size_t count, int dim, std::optional<std::uint64_t> scramble_seed);

}  // namespace magt
