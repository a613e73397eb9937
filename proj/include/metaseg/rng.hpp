#pragma once

#include <cstdint>
#include <string_view>

namespace metaseg {

/// SplitMix64 step. Used for seed expansion and for mixing derived seeds.
std::uint64_t splitmix64(std::uint64_t& state);

/// 64-bit FNV-1a hash of a string. Stable across platforms.
std::uint64_t fnv1a64(std::string_view text);

/// Derive a child seed from a parent seed and a textual tag.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag);

/// xoshiro256** 1.0 (Blackman & Vigna), seeded by expanding a 64-bit seed
/// through SplitMix64. Output sequences are identical on every platform, which
/// std::mt19937 plus std::uniform_*_distribution do not guarantee.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed);

  std::uint64_t next();
  std::uint64_t operator()() { return next(); }
  static constexpr std::uint64_t min() { return 0; }
  static constexpr std::uint64_t max() { return ~std::uint64_t{0}; }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform();
  /// Uniform double in [lo, hi).
  double uniform(double lo, double hi);
  /// Unbiased uniform integer in [0, bound); bound must be positive.
  std::uint64_t below(std::uint64_t bound);
  /// Standard normal deviate (Box-Muller, no cached second value).
  double normal();

 private:
  std::uint64_t s_[4];
};

}  // namespace metaseg
