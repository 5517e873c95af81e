#pragma once

#include <cstdint>
#include <random>

namespace tristream {

using Rng = std::mt19937_64;

/// Uniform integer in [0, n) by Lemire's multiply-and-reject. n must be > 0.
/// Used instead of std::uniform_int_distribution so draws are identical across
/// standard library implementations.
inline std::uint64_t uniform_below(Rng& rng, std::uint64_t n) {
  __extension__ using u128 = unsigned __int128;
  std::uint64_t x = rng();
  u128 m = static_cast<u128>(x) * n;
  auto low = static_cast<std::uint64_t>(m);
  if (low < n) {
    const std::uint64_t threshold = (0 - n) % n;
    while (low < threshold) {
      x = rng();
      m = static_cast<u128>(x) * n;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace tristream
