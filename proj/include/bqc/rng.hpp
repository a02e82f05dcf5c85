#pragma once

// Reproducible random streams shared by every experiment.
//
// The stream layout is fixed so results can be regenerated bit-for-bit by
// other implementations:
//   * seeding:   SplitMix64, four outputs fill the xoshiro256++ state
//   * uniforms:  u = (next() >> 11) * 2^-53
//   * normals:   Box-Muller, cosine branch only, u1 = ((next() >> 11) + 1) * 2^-53
//   * run seeds: first SplitMix64 output of (seed XOR run_index)

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace bqc {

inline std::uint64_t splitmix64_next(std::uint64_t& state) noexcept {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Sub-seed for repetition `run_index` of an experiment seeded with `seed`.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t run_index) noexcept {
  std::uint64_t s = seed ^ run_index;
  return splitmix64_next(s);
}

class Xoshiro256pp {
 public:
  using result_type = std::uint64_t;

  explicit Xoshiro256pp(std::uint64_t seed) noexcept {
    std::uint64_t sm = seed;
    for (auto& w : s_) w = splitmix64_next(sm);
  }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return ~result_type{0}; }

  result_type operator()() noexcept { return next(); }

  result_type next() noexcept {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  /// Uniform in [0, 1).
  double uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, bound), unbiased by rejection.
  std::uint64_t uniform_index(std::uint64_t bound) noexcept {
    const std::uint64_t limit = max() - max() % bound;
    std::uint64_t v;
    do {
      v = next();
    } while (v >= limit);
    return v % bound;
  }

  double normal(double mean, double stddev) noexcept {
    const double u1 = static_cast<double>((next() >> 11) + 1) * 0x1.0p-53;
    const double u2 = static_cast<double>(next() >> 11) * 0x1.0p-53;
    const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    return mean + stddev * z;
  }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
    return (x << k) | (x >> (64 - k));
  }

  std::array<std::uint64_t, 4> s_{};
};

}  // namespace bqc
