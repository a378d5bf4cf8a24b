#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace dscope::rng {

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Counter-based stream: the draw for (seed, index, slot) is a pure function of
// its key, so observation i gets the same numbers in any generation order.
class CounterRng {
 public:
  constexpr CounterRng(std::uint64_t seed, std::uint64_t index)
      : key_(mix64(mix64(seed) ^ (index * 0xd1b54a32d192ed03ULL))) {}

  constexpr std::uint64_t bits(std::uint64_t slot) const { return mix64(key_ ^ mix64(slot + 1)); }

  // [0, 1)
  double uniform(std::uint64_t slot) const {
    return static_cast<double>(bits(slot) >> 11) * 0x1.0p-53;
  }

  // Box-Muller on slots (slot, slot + 1).
  double normal(std::uint64_t slot) const {
    const double u1 = 1.0 - uniform(slot);  // (0, 1]
    const double u2 = uniform(slot + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::uint64_t key_;
};

// Independent child seed for replicate `k` of a master seed.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t k) {
  return mix64(master ^ mix64(k + 0x632be59bd9b4e019ULL));
}

}  // namespace dscope::rng
