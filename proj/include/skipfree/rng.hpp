#pragma once

// SplitMix64 (Steele, Lea, Flood; public-domain reference by S. Vigna) used both as
// the per-path generator and as the mixing function that derives path streams.

#include <cmath>
#include <cstdint>
#include <limits>

namespace skipfree {

inline constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Seedable, splittable 64-bit generator. Satisfies UniformRandomBitGenerator.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;
  static constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;

  constexpr explicit SplitMix64(std::uint64_t seed = 0) noexcept : state_(seed) {}

  /// Stream for path `index` under `master_seed`. Depends only on the pair, never on
  /// which worker runs the path.
  static constexpr std::uint64_t stream_seed(std::uint64_t master_seed,
                                             std::uint64_t index) noexcept {
    return mix64(master_seed ^ mix64(index * kGamma + 0x632be59bd9b4e019ULL));
  }
  static constexpr SplitMix64 for_stream(std::uint64_t master_seed, std::uint64_t index) noexcept {
    return SplitMix64(stream_seed(master_seed, index));
  }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  constexpr result_type operator()() noexcept {
    state_ += kGamma;
    return mix64(state_);
  }

  /// Independent child generator; advances this one.
  constexpr SplitMix64 split() noexcept { return SplitMix64(mix64((*this)())); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  /// Exponential with the given rate (> 0).
  double exponential(double rate) noexcept { return -std::log1p(-uniform()) / rate; }

  constexpr std::uint64_t state() const noexcept { return state_; }

 private:
  std::uint64_t state_;
};

}  // namespace skipfree
