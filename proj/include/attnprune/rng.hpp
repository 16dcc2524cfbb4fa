#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace attnprune {

/// SplitMix64 generator. State advances by the golden-ratio increment; the
/// output is the standard 30/27/31 xor-shift-multiply finalizer, so a given
/// seed produces the same stream on every platform.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

  std::uint64_t next() noexcept {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  /// Uniform in (0, 1]: top 53 bits, offset by one ulp so log() is safe.
  double uniform() noexcept {
    return (static_cast<double>(next() >> 11) + 1.0) * 0x1.0p-53;
  }

  /// Uniform in [lo, hi).
  double uniform(double lo, double hi) noexcept {
    return lo + (hi - lo) * (static_cast<double>(next() >> 11) * 0x1.0p-53);
  }

  /// Uniform integer in [0, bound) by rejection.
  std::uint64_t below(std::uint64_t bound) noexcept {
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
    std::uint64_t r = 0;
    do {
      r = next();
    } while (r >= limit);
    return r % bound;
  }

  /// Standard normal via Box-Muller; each call consumes two uniforms and
  /// returns the cosine branch. No state is cached between calls.
  double normal() noexcept {
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::uint64_t state_;
};

/// Derives an independent sub-seed from (seed, stream) by one SplitMix64
/// finalization of seed ^ (stream * golden).
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
  SplitMix64 g(seed ^ (stream * 0x9E3779B97F4A7C15ull + 0x632BE59BD9B4E019ull));
  return g.next();
}

}  // namespace attnprune
