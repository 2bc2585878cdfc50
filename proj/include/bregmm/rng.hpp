#pragma once

#include <cstdint>
#include <random>

namespace bregmm::rng {

// splitmix64 mixing step; decorrelates nearby seeds before they enter a
// generator, which keeps per-bin substreams (seed ^ bin index) independent.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Substream `index` of the generator family identified by `seed`.
inline std::mt19937_64 stream(std::uint64_t seed, std::uint64_t index = 0) {
  return std::mt19937_64(splitmix64(seed ^ index));
}

// Uniform in [0, 1). Hand-rolled so draws are identical across standard
// library implementations (uniform_real_distribution is not bit-portable).
inline double uniform01(std::mt19937_64& g) {
  return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

inline double uniform(std::mt19937_64& g, double lo, double hi) {
  return lo + (hi - lo) * uniform01(g);
}

}  // namespace bregmm::rng
