#pragma once

#include <cstdint>
#include <random>

namespace pricelab {

using Rng = std::mt19937_64;

// SplitMix64 finalizer. Used to derive independent seeds from a master seed.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Seed-splitting rule: child = splitmix64(splitmix64(parent) ^ (stream + 1)).
// Repetition r of an experiment uses derive_seed(master, r); inside an episode
// the feature, noise and policy streams use derive_seed(episode_seed, 0/1/2).
constexpr std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t stream) {
  return splitmix64(splitmix64(parent) ^ (stream + 1));
}

namespace stream {
inline constexpr std::uint64_t kFeatures = 0;
inline constexpr std::uint64_t kNoise = 1;
inline constexpr std::uint64_t kPolicy = 2;
}  // namespace stream

}  // namespace pricelab
