#pragma once

#include <cmath>
#include <cstdint>
#include <span>

namespace ratelab {

/// Counter-based splittable random stream.
///
/// Output i of a stream is a hash of (key, i), and `split(lane)` derives a
/// child stream with a fresh key without advancing the parent. Sweeps use
/// this to hand every (seed, run-index) pair an independent stream with no
/// coordination; identical keys always replay identical sequences.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : key_(mix64(seed ^ kSeedDomain)) {}

  /// Child stream for `lane`; deterministic, parent state untouched.
  Rng split(std::uint64_t lane) const {
    return Rng(mix64(key_ ^ mix64(lane ^ kSplitDomain)), 0);
  }

  std::uint64_t next_u64() { return mix64(key_ + kGolden * ++counter_); }

  /// Uniform on the open interval (0, 1); never returns 0 or 1 exactly.
  double uniform01() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  bool bernoulli(double p) { return uniform01() < p; }

  double normal(double mean = 0.0, double stddev = 1.0) {
    // Box-Muller; both uniforms are strictly inside (0,1) so the log is safe.
    const double u1 = uniform01();
    const double u2 = uniform01();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    return mean + stddev * radius * std::cos(2.0 * kPi * u2);
  }

  /// Unbiased integer in [0, n); n must be positive.
  std::uint64_t uniform_below(std::uint64_t n) {
    // Lemire's multiply-shift with rejection.
    std::uint64_t x = next_u64();
    __uint128_t m = static_cast<__uint128_t>(x) * n;
    auto low = static_cast<std::uint64_t>(m);
    if (low < n) {
      const std::uint64_t threshold = (0 - n) % n;
      while (low < threshold) {
        x = next_u64();
        m = static_cast<__uint128_t>(x) * n;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  /// Index sampled from an inclusive-prefix-sum table (last entry = total).
  int index_from_cdf(std::span<const double> cdf) {
    const double u = uniform01() * cdf.back();
    for (std::size_t i = 0; i < cdf.size(); ++i) {
      if (u < cdf[i]) return static_cast<int>(i);
    }
    return static_cast<int>(cdf.size()) - 1;
  }

 private:
  Rng(std::uint64_t key, std::uint64_t counter) : key_(key), counter_(counter) {}

  static std::uint64_t mix64(std::uint64_t z) {
    // murmur3 finalizer
    z ^= z >> 33;
    z *= 0xff51afd7ed558ccdULL;
    z ^= z >> 33;
    z *= 0xc4ceb9fe1a85ec53ULL;
    z ^= z >> 33;
    return z;
  }

  static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
  static constexpr std::uint64_t kSeedDomain = 0xA0761D6478BD642FULL;
  static constexpr std::uint64_t kSplitDomain = 0xD6E8FEB86659FD93ULL;
  static constexpr double kPi = 3.14159265358979323846;

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace ratelab
