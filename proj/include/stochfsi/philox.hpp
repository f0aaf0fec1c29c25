#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace stochfsi {

/// Philox4x32-10 counter-based generator (Salmon et al. 2011).
inline std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                               std::array<std::uint32_t, 2> key) {
  constexpr std::uint32_t kM0 = 0xD2511F53u, kM1 = 0xCD9E8D57u;
  constexpr std::uint32_t kW0 = 0x9E3779B9u, kW1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * ctr[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * ctr[2];
    const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
    const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kW0;
    key[1] += kW1;
  }
  return ctr;
}

/// Standard normal keyed by (seed; a, b, c). Box-Muller on 53-bit uniforms.
inline double keyed_normal(std::uint64_t seed, std::uint64_t a, std::uint32_t b,
                           std::uint32_t c) {
  const auto r = philox4x32({static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32), b, c},
                            {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)});
  constexpr double k53 = 1.0 / 9007199254740992.0;
  const std::uint64_t m1 = (static_cast<std::uint64_t>(r[0]) << 21) ^ (r[1] >> 11);
  const std::uint64_t m2 = (static_cast<std::uint64_t>(r[2]) << 21) ^ (r[3] >> 11);
  const double u1 = (static_cast<double>(m1 & ((1ull << 53) - 1)) + 1.0) * k53;  // (0, 1]
  const double u2 = static_cast<double>(m2 & ((1ull << 53) - 1)) * k53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace stochfsi
