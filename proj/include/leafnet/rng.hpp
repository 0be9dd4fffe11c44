#pragma once

#include <cstdint>

namespace leafnet {

/// PCG32 (XSH-RR, 64-bit state, 64-bit stream selector). Value type: copy it
/// to fork a sequence, derive a new stream to get an independent one.
class Rng {
 public:
  static constexpr std::uint64_t kDefaultStream = 54;

  explicit Rng(std::uint64_t seed, std::uint64_t stream = kDefaultStream);

  std::uint32_t next_u32();

  /// Unbiased integer in [0, bound). bound must be >= 1.
  std::uint32_t bounded(std::uint32_t bound);

  /// Uniform double in [0, 1) with 32 bits of resolution.
  double next_unit();

  /// Standard normal via Box-Muller (consumes two draws per call).
  double next_gaussian();

  std::uint64_t state() const { return state_; }
  std::uint64_t increment() const { return inc_; }

  friend bool operator==(const Rng&, const Rng&) = default;

 private:
  std::uint64_t state_ = 0;
  std::uint64_t inc_ = 0;
};

/// Uniform value in [lo, hi). Throws ArgumentError when lo >= hi.
double rng_uniform(Rng& rng, double lo, double hi);

/// SplitMix64 finalizer; used to turn (base seed, index) pairs into
/// well-separated seeds.
std::uint64_t mix_seed(std::uint64_t base_seed, std::uint64_t index);

/// Stream selectors, so that shuffling, augmentation, splitting and
/// initialization never share a sequence even when seeded identically.
namespace streams {
inline constexpr std::uint64_t kInit = 1;
inline constexpr std::uint64_t kSplit = 2;
inline constexpr std::uint64_t kShuffle = 3;
inline constexpr std::uint64_t kAugment = 4;
inline constexpr std::uint64_t kSynthetic = 5;
inline constexpr std::uint64_t kTsne = 6;
inline constexpr std::uint64_t kGradcheck = 7;
}  // namespace streams

}  // namespace leafnet
