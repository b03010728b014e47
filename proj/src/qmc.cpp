#include "magt/qmc.hpp"

#include <array>
#include <string>

#include "magt/rng.hpp"

namespace magt {
namespace {

// Primitive polynomial degree s, interior coefficients a and initial
// direction integers m_1..m_s for dimensions 2..32 (Joe & Kuo, new-joe-kuo-6.21201).
struct Primitive {
  int degree;
  std::uint32_t a;
  std::array<std::uint32_t, 7> m;
};

constexpr std::array<Primitive, kMaxSobolDim - 1> kPrimitives{{
    {1, 0, {1}},
    {2, 1, {1, 3}},
    {3, 1, {1, 3, 1}},
    {3, 2, {1, 1, 1}},
    {4, 1, {1, 1, 3, 3}},
    {4, 4, {1, 3, 5, 13}},
    {5, 2, {1, 1, 5, 5, 17}},
    {5, 4, {1, 1, 5, 5, 5}},
    {5, 7, {1, 1, 7, 11, 19}},
    {5, 11, {1, 1, 5, 1, 1}},
    {5, 13, {1, 1, 1, 3, 11}},
    {5, 14, {1, 3, 5, 5, 31}},
    {6, 1, {1, 3, 3, 9, 7, 49}},
    {6, 13, {1, 1, 1, 15, 21, 21}},
    {6, 16, {1, 3, 1, 13, 27, 49}},
    {6, 19, {1, 1, 1, 15, 7, 5}},
    {6, 22, {1, 3, 1, 15, 13, 25}},
    {6, 25, {1, 1, 5, 5, 19, 61}},
    {7, 1, {1, 3, 7, 11, 23, 15, 103}},
    {7, 4, {1, 3, 7, 13, 13, 15, 69}},
    {7, 7, {1, 1, 3, 13, 7, 35, 63}},
    {7, 8, {1, 3, 5, 9, 1, 25, 53}},
    {7, 14, {1, 3, 1, 13, 9, 35, 107}},
    {7, 19, {1, 3, 1, 5, 27, 61, 31}},
    {7, 21, {1, 1, 5, 11, 19, 41, 61}},
    {7, 28, {1, 3, 5, 3, 3, 13, 69}},
    {7, 31, {1, 1, 7, 13, 1, 19, 1}},
    {7, 32, {1, 3, 7, 5, 13, 19, 59}},
    {7, 37, {1, 1, 3, 9, 25, 29, 41}},
    {7, 41, {1, 3, 5, 13, 23, 1, 55}},
    {7, 42, {1, 3, 7, 3, 13, 59, 17}},
}};

using Directions = std::array<std::uint32_t, 32>;

Directions directions_for(int dim_index) {
  Directions v{};
  if (dim_index == 0) {
    for (int k = 0; k < 32; ++k) v[k] = 1u << (31 - k);
    return v;
  }
  const Primitive& p = kPrimitives[dim_index - 1];
  const int s = p.degree;
  for (int k = 0; k < s; ++k) v[k] = p.m[k] << (31 - k);
  for (int k = s; k < 32; ++k) {
    std::uint32_t value = v[k - s] ^ (v[k - s] >> s);
    for (int j = 1; j < s; ++j)
      if ((p.a >> (s - 1 - j)) & 1u) value ^= v[k - j];
    v[k] = value;
  }
  return v;
}

std::uint32_t reverse_bits(std::uint32_t x) {
  x = ((x >> 1) & 0x55555555u) | ((x & 0x55555555u) << 1);
  x = ((x >> 2) & 0x33333333u) | ((x & 0x33333333u) << 2);
  x = ((x >> 4) & 0x0f0f0f0fu) | ((x & 0x0f0f0f0fu) << 4);
  x = ((x >> 8) & 0x00ff00ffu) | ((x & 0x00ff00ffu) << 8);
  return (x >> 16) | (x << 16);
}

// Hash whose output bit k depends only on input bits <= k, applied to the
// bit-reversed digits: every digit is flipped as a function of the more
// significant digits only, which is a nested uniform scramble.
std::uint32_t owen_scramble(std::uint32_t x, std::uint32_t seed) {
  x = reverse_bits(x);
  x += seed;
  x ^= x * 0x6c50b47cu;
  x ^= x * 0xb82f1e52u;
  x ^= x * 0xc7afe638u;
  x ^= x * 0x8d22f6e6u;
  return reverse_bits(x);
}

}  // namespace

Matrix sobol_points(std::size_t count, int dim, std::optional<std::uint64_t> scramble_seed) {
  if (dim < 1 || dim > kMaxSobolDim)
    throw ConfigError("Sobol' points support 1.." + std::to_string(kMaxSobolDim) +
                      " dimensions, got " + std::to_string(dim));
  if (count > (std::size_t{1} << 32)) throw ConfigError("at most 2^32 Sobol' points");
  Matrix out(static_cast<Eigen::Index>(count), dim);
  for (int j = 0; j < dim; ++j) {
    const Directions v = directions_for(j);
    std::uint32_t seed = 0;
    if (scramble_seed) seed = static_cast<std::uint32_t>(Rng(*scramble_seed, Stream::Scramble, j).next_u64());
    for (std::size_t i = 0; i < count; ++i) {
      std::uint32_t x = 0;
      std::uint64_t index = i;
      for (int k = 0; index != 0; ++k, index >>= 1)
        if (index & 1u) x ^= v[k];
      if (scramble_seed) x = owen_scramble(x, seed);
      out(static_cast<Eigen::Index>(i), j) = static_cast<double>(x) * 0x1.0p-32;
    }
  }
  return out;
}

}  // namespace magt
