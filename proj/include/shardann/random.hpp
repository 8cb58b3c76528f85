#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace shardann {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Derives an independent stream seed from a root seed and a path of
/// counters, e.g. derive_seed(seed, {repetition, level}). Streams depend only
/// on the path, never on the order in which tasks run.
constexpr std::uint64_t derive_seed(std::uint64_t seed,
                                    std::initializer_list<std::uint64_t> path) {
  std::uint64_t state = mix64(seed);
  for (std::uint64_t p : path) state = mix64(state ^ mix64(p + 0x632be59bd9b4e019ULL));
  return state;
}

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t seed, std::initializer_list<std::uint64_t> path = {}) {
  return Rng(derive_seed(seed, path));
}

/// Uniform integer in [0, bound) without relying on std distributions, whose
/// output differs between standard library implementations.
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t bound) {
  // Lemire's multiply-shift with rejection.
  std::uint64_t x = rng();
  __uint128_t m = static_cast<__uint128_t>(x) * bound;
  auto low = static_cast<std::uint64_t>(m);
  if (low < bound) {
    const std::uint64_t threshold = (0 - bound) % bound;
    while (low < threshold) {
      x = rng();
      m = static_cast<__uint128_t>(x) * bound;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

/// Uniform double in [0, 1).
inline double uniform_unit(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Standard normal sample (Box-Muller, one value per call).
double standard_normal(Rng& rng);

/// Samples `count` distinct values from [0, n) uniformly, returned in
/// ascending order.
std::vector<std::uint32_t> sample_without_replacement(Rng& rng, std::uint32_t n,
                                                      std::uint32_t count);

}  // namespace shardann
