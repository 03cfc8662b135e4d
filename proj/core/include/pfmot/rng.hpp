#pragma once

#include <cstdint>
#include <random>

namespace pfmot {

using Rng = std::mt19937_64;

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed of a named random stream. Each part is folded through splitmix64 in
/// order, so (base, a, b) and (base, b, a) give unrelated streams.
template <typename... Parts>
constexpr std::uint64_t stream_seed(std::uint64_t base, Parts... parts) {
  std::uint64_t h = splitmix64(base);
  ((h = splitmix64(h ^ static_cast<std::uint64_t>(static_cast<std::int64_t>(parts)))), ...);
  return h;
}

template <typename... Parts>
Rng make_stream(std::uint64_t base, Parts... parts) {
  return Rng(stream_seed(base, parts...));
}

/// Stream tags used by the tracker and simulator.
enum class StreamTag : std::int64_t {
  kPredict = 1,
  kLegacyResample = 2,
  kBirthSample = 3,
  kNewResample = 4,
  kSimMotion = 11,
  kSimDetect = 12,
  kSimClutter = 13,
  kSimShuffle = 14,
  kMonteCarloRun = 21,
};

}  // namespace pfmot
