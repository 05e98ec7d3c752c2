#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string_view>
#include <vector>

namespace dlgreward {

// All randomness in the library flows through these helpers. The mt19937_64
// engine is bit-exact per the standard; the samplers below avoid
// std::*_distribution, whose output is implementation-defined, so seeded runs
// produce the same bytes on every platform.
using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Derives the seed of a named substream from a root seed and up to two labels.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a,
                              std::uint64_t b = 0) {
  return splitmix64(splitmix64(seed ^ splitmix64(a)) ^ splitmix64(b));
}

inline Rng make_rng(std::uint64_t seed) { return Rng(seed); }

// Uniform in [0, n). n must be positive.
inline std::size_t uniform_index(Rng& rng, std::size_t n) {
  const std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
  const std::uint64_t limit = max - max % static_cast<std::uint64_t>(n);
  std::uint64_t x = rng();
  while (x >= limit) x = rng();
  return static_cast<std::size_t>(x % static_cast<std::uint64_t>(n));
}

// Uniform in [lo, hi) with 53-bit resolution.
inline double uniform_real(Rng& rng, double lo = 0.0, double hi = 1.0) {
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return lo + u * (hi - lo);
}

// Box-Muller without spare caching, so draw order stays one-to-one.
inline double gaussian(Rng& rng, double mean = 0.0, double stddev = 1.0) {
  constexpr double two_pi = 6.283185307179586476925286766559;
  double u1 = uniform_real(rng, 0.0, 1.0);
  while (u1 <= 0.0) u1 = uniform_real(rng, 0.0, 1.0);
  const double u2 = uniform_real(rng, 0.0, 1.0);
  const double mag = std::sqrt(-2.0 * std::log(u1));
  return mean + stddev * mag * std::cos(two_pi * u2);
}

// Fisher-Yates; std::shuffle is implementation-defined.
template <typename T>
void shuffle_in_place(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::swap(v[i - 1], v[uniform_index(rng, i)]);
  }
}

}  // namespace dlgreward
