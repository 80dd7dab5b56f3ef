#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace ras {

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline constexpr std::uint64_t kGoldenGamma = 0x9e3779b97f4a7c15ULL;

// Key for child stream `index` of `parent`. Streams derived from distinct
// (parent, index) pairs are statistically independent.
constexpr std::uint64_t derive_key(std::uint64_t parent, std::uint64_t index) noexcept {
  return mix64(parent ^ mix64((index + 1) * kGoldenGamma));
}

/// Counter-based 64-bit generator.
///
/// Draw k of a stream with key K is mix64(K + (k + 1) * gamma). Any draw can
/// be computed without generating the ones before it, which is what makes
/// per-step and per-edge randomness replayable.
class CounterRng {
 public:
  constexpr explicit CounterRng(std::uint64_t key) noexcept : key_(key) {}

  static constexpr CounterRng stream(std::uint64_t seed, std::uint64_t index) noexcept {
    return CounterRng(derive_key(mix64(seed), index));
  }

  constexpr std::uint64_t key() const noexcept { return key_; }
  constexpr std::uint64_t counter() const noexcept { return counter_; }

  constexpr std::uint64_t at(std::uint64_t k) const noexcept {
    return mix64(key_ + (k + 1) * kGoldenGamma);
  }
  constexpr std::uint64_t next() noexcept { return at(counter_++); }

  // Uniform in [0, 1) with 53 random bits.
  static constexpr double to_unit(std::uint64_t bits) noexcept {
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
  }
  constexpr double uniform() noexcept { return to_unit(next()); }
  constexpr double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
  constexpr double uniform_at(std::uint64_t k) const noexcept { return to_unit(at(k)); }

  constexpr CounterRng child(std::uint64_t index) const noexcept {
    return CounterRng(derive_key(key_, index));
  }

  // Rejection sample from the closed ball of the given radius in R^3.
  std::array<double, 3> in_ball(double radius) noexcept {
    for (;;) {
      std::array<double, 3> p{uniform(-1.0, 1.0), uniform(-1.0, 1.0), uniform(-1.0, 1.0)};
      double r2 = p[0] * p[0] + p[1] * p[1] + p[2] * p[2];
      if (r2 <= 1.0) {
        for (auto& c : p) c *= radius;
        return p;
      }
    }
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace ras
