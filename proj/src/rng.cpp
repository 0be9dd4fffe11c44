#include "leafnet/rng.hpp"

#include <cmath>
#include <numbers>

#include "leafnet/errors.hpp"

namespace leafnet {

Rng::Rng(std::uint64_t seed, std::uint64_t stream) : inc_((stream << 1u) | 1u) {
  next_u32();
  state_ += seed;
  next_u32();
}

std::uint32_t Rng::next_u32() {
  const std::uint64_t old = state_;
  state_ = old * 6364136223846793005ULL + inc_;
  const auto xorshifted = static_cast<std::uint32_t>(((old >> 18u) ^ old) >> 27u);
  const auto rot = static_cast<std::uint32_t>(old >> 59u);
  return (xorshifted >> rot) | (xorshifted << ((-rot) & 31u));
}

std::uint32_t Rng::bounded(std::uint32_t bound) {
  if (bound == 0) throw ArgumentError("Rng::bounded: bound must be >= 1");
  const std::uint32_t threshold = (-bound) % bound;
  for (;;) {
    const std::uint32_t r = next_u32();
    if (r >= threshold) return r % bound;
  }
}

double Rng::next_unit() { return std::ldexp(static_cast<double>(next_u32()), -32); }

double Rng::next_gaussian() {
  // 1 - u keeps the log argument in (0, 1].
  const double u1 = 1.0 - next_unit();
  const double u2 = next_unit();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double rng_uniform(Rng& rng, double lo, double hi) {
  if (!(lo < hi)) throw ArgumentError("rng_uniform: require lo < hi");
  const double v = lo + (hi - lo) * rng.next_unit();
  // Rounding can land exactly on hi for narrow ranges.
  return v < hi ? v : std::nextafter(hi, lo);
}

std::uint64_t mix_seed(std::uint64_t base_seed, std::uint64_t index) {
  std::uint64_t z = (base_seed ^ index) + 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30u)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27u)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31u);
}

}  // namespace leafnet
