#pragma once

#include <array>
#include <cstdint>
#include <cstdlib>
#include <functional>

namespace polylab {

// Lattice vector in Z^d, d <= 3. Unused coordinates stay zero so that
// comparison and hashing are dimension-agnostic.
using Vec = std::array<std::int32_t, 3>;

inline constexpr Vec vec1(std::int32_t x) { return {x, 0, 0}; }
inline constexpr Vec vec2(std::int32_t x, std::int32_t y) { return {x, y, 0}; }
inline constexpr Vec vec3(std::int32_t x, std::int32_t y, std::int32_t z) {
  return {x, y, z};
}

inline Vec operator+(const Vec& a, const Vec& b) {
  return {a[0] + b[0], a[1] + b[1], a[2] + b[2]};
}
inline Vec operator-(const Vec& a, const Vec& b) {
  return {a[0] - b[0], a[1] - b[1], a[2] - b[2]};
}
inline Vec operator-(const Vec& a) { return {-a[0], -a[1], -a[2]}; }

inline std::int64_t l1_norm(const Vec& a) {
  return std::int64_t(std::abs(a[0])) + std::abs(a[1]) + std::abs(a[2]);
}

// Packed key for fast hashing in DP inner loops; 21 signed bits per
// coordinate (|x| < 2^20 is far beyond any reachable support).
inline std::uint64_t pack_site(const Vec& a) {
  auto enc = [](std::int32_t v) {
    return std::uint64_t(std::uint32_t(v + (1 << 20))) & 0x1FFFFFu;
  };
  return enc(a[0]) | (enc(a[1]) << 21) | (enc(a[2]) << 42);
}

inline Vec unpack_site(std::uint64_t k) {
  auto dec = [](std::uint64_t v) {
    return std::int32_t(v & 0x1FFFFFu) - (1 << 20);
  };
  return {dec(k), dec(k >> 21), dec(k >> 42)};
}

struct VecHash {
  std::size_t operator()(const Vec& a) const {
    std::uint64_t h = pack_site(a);
    h ^= h >> 33;
    h *= 0xff51afd7ed558ccdULL;
    h ^= h >> 33;
    return std::size_t(h);
  }
};

// Point of N x Z^d: (level, lattice site). Levels start at 1.
struct Atom {
  std::int32_t level;
  Vec x;

  friend bool operator==(const Atom&, const Atom&) = default;
  friend auto operator<=>(const Atom&, const Atom&) = default;
};

struct AtomHash {
  std::size_t operator()(const Atom& a) const {
    std::uint64_t h = pack_site(a.x) ^ (std::uint64_t(a.level) << 51);
    h ^= h >> 33;
    h *= 0xc4ceb9fe1a85ec53ULL;
    h ^= h >> 33;
    return std::size_t(h);
  }
};

}  // namespace polylab
