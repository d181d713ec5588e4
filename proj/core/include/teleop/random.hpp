#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>

#include "teleop/pose.hpp"

namespace teleop {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Derives an independent key for sub-stream `index` of `key`.
constexpr std::uint64_t derive_key(std::uint64_t key, std::uint64_t index) noexcept {
  return splitmix64(splitmix64(key) ^ splitmix64(index + 0x632BE59BD9B4E019ULL));
}

/// Counter-based stream: the i-th draw is a pure function of (key, i), so a
/// stream can be split or replayed at any offset.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t key, std::uint64_t counter = 0) noexcept
      : key_(splitmix64(key ^ 0xD1B54A32D192ED03ULL)), counter_(counter) {}

  std::uint64_t next_u64() noexcept {
    return splitmix64(key_ + (counter_++) * 0x9E3779B97F4A7C15ULL);
  }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() noexcept {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

  /// Box-Muller, one value per call.
  double normal() noexcept {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  Vec3 unit_vector() noexcept {
    const double z = uniform(-1.0, 1.0);
    const double phi = uniform(0.0, 2.0 * std::numbers::pi);
    const double s = std::sqrt(std::max(0.0, 1.0 - z * z));
    return {s * std::cos(phi), s * std::sin(phi), z};
  }

  std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_;
};

}  // namespace teleop
