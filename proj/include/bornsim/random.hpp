#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace bornsim::random {

// SplitMix64. Hand-rolled so that seeded runs are bit-identical across
// platforms and standard-library versions (std:: distributions are
// implementation-defined).
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

// Parallel trials use derived seeds: seed + trial index. Callers that fan
// out work must pass derive_seed(seed, i) for trial i, never the raw seed.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t trial) {
  return seed + trial;
}

/// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(SplitMix64& rng) {
  return static_cast<double>(rng.next() >> 11) * 0x1.0p-53;
}

/// Uniform integer in [0, n), unbiased via rejection.
inline std::uint64_t uniform_below(SplitMix64& rng, std::uint64_t n) {
  const std::uint64_t threshold = -n % n;  // 2^64 mod n
  for (;;) {
    const std::uint64_t x = rng.next();
    if (x >= threshold) return x % n;
  }
}

/// Standard normal draw (Box-Muller, no cached spare).
inline double gaussian(SplitMix64& rng) {
  const double u1 = 1.0 - uniform01(rng);  // (0, 1]
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
}

/// In-place Fisher-Yates shuffle driven by the given engine.
template <typename T>
void shuffle(std::vector<T>& values, SplitMix64& rng) {
  for (std::size_t i = values.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(uniform_below(rng, i));
    std::swap(values[i - 1], values[j]);
  }
}

}  // namespace bornsim::random
