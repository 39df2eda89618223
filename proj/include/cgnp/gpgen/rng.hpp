#pragma once

#include <cstdint>
#include <random>

namespace cgnp {

using Rng = std::mt19937_64;

/// Tags that separate independent random streams derived from one seed.
enum class StreamDomain : std::uint64_t {
  kTrainBatch = 1,
  kTestEpisode = 2,
  kHeldOut = 3,
  kInit = 4,
};

/// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Seed for stream `index` of `domain`: mix64(mix64(mix64(seed) ^ domain) ^ index).
constexpr std::uint64_t derive_seed(std::uint64_t master_seed, StreamDomain domain,
                                    std::uint64_t index) {
  return mix64(mix64(mix64(master_seed) ^ static_cast<std::uint64_t>(domain)) ^ index);
}

inline Rng make_rng(std::uint64_t master_seed, StreamDomain domain, std::uint64_t index) {
  return Rng(derive_seed(master_seed, domain, index));
}

}  // namespace cgnp
