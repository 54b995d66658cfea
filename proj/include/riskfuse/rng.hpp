#pragma once

#include <cstdint>
#include <random>

namespace riskfuse {

/// splitmix64 finalizer; used to derive independent sub-stream seeds.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

using Rng = std::mt19937_64;

/// Named sub-stream `index` of master `seed`. The same (seed, index) pair always
/// yields the same sequence, independent of which thread consumes it.
inline Rng substream(std::uint64_t seed, std::uint64_t index, std::uint64_t salt = 0) {
  return Rng(mix64(mix64(seed ^ mix64(salt)) + index));
}

inline double uniform01(Rng& rng) {
  // 53 random bits -> [0, 1)
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace riskfuse
