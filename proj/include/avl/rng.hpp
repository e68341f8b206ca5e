#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace avl {

// Counter-based Philox4x32-10 generator.
class Philox4x32 {
public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter apply(Counter ctr, Key key) {
    for (int r = 0; r < 10; ++r) {
      if (r > 0) {
        key[0] += 0x9E3779B9u;
        key[1] += 0xBB67AE85u;
      }
      const std::uint64_t p0 = static_cast<std::uint64_t>(0xD2511F53u) * ctr[0];
      const std::uint64_t p1 = static_cast<std::uint64_t>(0xCD9E8D57u) * ctr[2];
      const auto hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
      const auto hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
      ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
  }

  static Key key_from_seed(std::uint64_t seed) {
    return {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  }
};

// Uniform on (0, 1) with 53 random bits from two 32-bit words.
inline double uniform_open(std::uint32_t a, std::uint32_t b) {
  const std::uint64_t m = (static_cast<std::uint64_t>(a >> 5) << 26) | (b >> 6);
  return (static_cast<double>(m) + 0.5) * 0x1.0p-53;
}

// Two independent standard normals for stream (seed, path, step, slot).
inline std::array<double, 2> normal_pair(std::uint64_t seed, std::uint64_t path, std::uint32_t step,
                                         std::uint32_t slot) {
  const auto out = Philox4x32::apply(
      {step, static_cast<std::uint32_t>(path), static_cast<std::uint32_t>(path >> 32), slot},
      Philox4x32::key_from_seed(seed));
  const double u1 = uniform_open(out[0], out[1]);
  const double u2 = uniform_open(out[2], out[3]);
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * std::numbers::pi * u2;
  return {r * std::cos(a), r * std::sin(a)};
}

// Uniform on (0, 1) for stream (seed, path, step, slot).
inline double uniform_draw(std::uint64_t seed, std::uint64_t path, std::uint32_t step, std::uint32_t slot) {
  const auto out = Philox4x32::apply(
      {step, static_cast<std::uint32_t>(path), static_cast<std::uint32_t>(path >> 32), slot},
      Philox4x32::key_from_seed(seed));
  return uniform_open(out[0], out[1]);
}

} // namespace avl
