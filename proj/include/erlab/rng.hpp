#pragma once

#include <cstdint>
#include <limits>

namespace erlab {

// SplitMix64: a counter-based generator. The k-th output is a fixed bijective
// mix of (key + k * golden_gamma), so a stream is fully determined by its
// key and independent streams are obtained by giving each trial its own key.
// The user seed is itself passed through the finalizer, which keeps
// consecutive seeds (base_seed + i) from producing shifted copies of one
// another.
class Rng {
 public:
  using result_type = std::uint64_t;

  static constexpr const char* kName = "splitmix64";

  explicit Rng(std::uint64_t seed) noexcept : state_(mix(seed ^ kSeedSalt)) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() noexcept {
    state_ += kGamma;
    return mix(state_);
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() noexcept {
    return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
  }

  /// Child generator whose stream does not overlap this one in practice.
  Rng split() noexcept { return Rng((*this)()); }

  static constexpr std::uint64_t mix(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  static constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;
  static constexpr std::uint64_t kSeedSalt = 0x6a09e667f3bcc909ULL;
  std::uint64_t state_;
};

}  // namespace erlab
