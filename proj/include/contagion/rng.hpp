#pragma once

#include <cstdint>
#include <random>

namespace contagion {

using Engine = std::mt19937_64;

// Named substreams of one realization. Each draws from its own engine so
// that the sequence seen by one mechanism never depends on another.
enum class Stream : std::uint64_t {
  kReconstruction = 1,
  kRateNoise = 2,
  kShockTargeting = 3,
  kReleverageOrder = 4,
};

// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Counter-based split: the seed of realization `index` under `master`.
constexpr std::uint64_t realization_seed(std::uint64_t master,
                                         std::uint64_t index) noexcept {
  return mix64(mix64(master) ^ mix64(index + 0x632be59bd9b4e019ULL));
}

constexpr std::uint64_t stream_seed(std::uint64_t seed, Stream stream) noexcept {
  return mix64(seed ^ mix64(static_cast<std::uint64_t>(stream) << 32));
}

inline Engine make_engine(std::uint64_t seed, Stream stream) {
  return Engine(stream_seed(seed, stream));
}

// Uniform double in [0, 1) built from the top 53 bits, identical on every
// standard library.
inline double uniform01(Engine& engine) {
  return static_cast<double>(engine() >> 11) * 0x1.0p-53;
}

}  // namespace contagion
