/// Seeded random streams.  Every stochastic routine takes an engine (or a
/// seed it expands itself); per-trial substreams are derived from
/// (seed, index) so parallel runs reproduce byte-identical results.

#pragma once

#include <cstdint>
#include <random>

namespace mzikd::rng {

/// SplitMix64 step; used to decorrelate seeds and trial indices.
inline std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline std::mt19937_64 make_engine(std::uint64_t seed) {
  return std::mt19937_64(mix(seed));
}

/// Derived seed for trial `index` of a run seeded with `seed`.
inline std::uint64_t subseed(std::uint64_t seed, std::uint64_t index) {
  return mix(mix(seed) ^ mix(index + 0x51ed2701ull));
}

/// Independent engine for trial `index` of a run seeded with `seed`.
inline std::mt19937_64 substream(std::uint64_t seed, std::uint64_t index) {
  return std::mt19937_64(subseed(seed, index));
}

/// Fair coin.
inline int coin(std::mt19937_64& g) { return static_cast<int>(g() >> 63); }

inline double uniform(std::mt19937_64& g, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(g);
}

inline double gaussian(std::mt19937_64& g, double sd) {
  if (sd <= 0.0) return 0.0;
  return std::normal_distribution<double>(0.0, sd)(g);
}

}  // namespace mzikd::rng
