#pragma once

#include <cstdint>

#include "polylab/lattice.hpp"

namespace polylab {

// Counter-based randomness: every sample is a pure function of a handful of
// 64-bit words run through a strong mixer. No generator state anywhere.

inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t mix64(std::uint64_t a, std::uint64_t b) {
  return mix64(mix64(a) ^ (b * 0x9e3779b97f4a7c15ULL));
}

inline std::uint64_t mix64(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  return mix64(mix64(a, b), c);
}

// Uniform in (0,1), never exactly 0 or 1.
inline double to_unit(std::uint64_t z) {
  return (double(z >> 11) + 0.5) * 0x1.0p-53;
}

// Derived stream seed for a (base, purpose, index) task; makes results
// independent of worker scheduling.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t purpose,
                                 std::uint64_t index) {
  return mix64(base, purpose, index);
}

// Tiny stateful helper for plain Monte Carlo loops in tests and estimators.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : seed_(seed) {}
  std::uint64_t next_u64() { return mix64(seed_, counter_++); }
  double next_unit() { return to_unit(next_u64()); }
  // uniform integer in [0, n)
  std::uint64_t next_below(std::uint64_t n) { return next_u64() % n; }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

}  // namespace polylab
