#pragma once

#include <cstdint>
#include <random>

namespace tunekit {

// All randomness flows through an explicitly owned engine. mt19937_64 output is
// fixed by the standard, so sequences are identical across toolchains as long as
// we avoid the implementation-defined std distributions.
using Rng = std::mt19937_64;

// Unbiased integer in [0, n) by rejection on the top of the 64-bit range.
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  if (n <= 1) {
    return 0;
  }
  const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % n);
  std::uint64_t draw = rng();
  while (draw >= limit) {
    draw = rng();
  }
  return draw % n;
}

// Seeds for derived streams (per tree, per fit). splitmix64 finalizer.
inline std::uint64_t mix_seed(std::uint64_t base, std::uint64_t salt) {
  std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace tunekit
