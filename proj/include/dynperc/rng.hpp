#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>

namespace dynperc {

// SplitMix64 step. Used both as a seed expander and as the mixing function
// for deriving independent streams.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Stream families. Each workload draws from its own family so that, e.g.,
// bootstrap resampling never shares a stream with block simulation.
enum class StreamTag : std::uint64_t {
  blocks = 1,
  trajectories = 2,
  coupled = 3,
  monotone = 4,
  bootstrap = 5,
  anchored = 6,
  continuous = 7,
  test = 99,
};

/// xoshiro256** seeded through SplitMix64.
///
/// A stream is identified by (seed, tag, index): the state is the SplitMix64
/// expansion of mix64(mix64(mix64(seed) ^ tag) ^ index). Block i of a run is
/// always simulated from stream (seed, tag, i), whichever worker executes it.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed = 0) noexcept {
    std::uint64_t z = seed;
    for (auto& w : s_) {
      z += 0x9E3779B97F4A7C15ULL;
      w = mix64(z);
    }
  }

  static Rng stream(std::uint64_t seed, StreamTag tag, std::uint64_t index) noexcept {
    const auto t = static_cast<std::uint64_t>(tag);
    return Rng(mix64(mix64(mix64(seed) ^ t) ^ index));
  }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  double exponential(double rate) noexcept { return -std::log1p(-uniform()) / rate; }

  bool bernoulli(double p) noexcept { return uniform() < p; }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
    return (x << k) | (x >> (64 - k));
  }

  std::array<std::uint64_t, 4> s_{};
};

}  // namespace dynperc
