#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace magloc {

// Philox4x32-10 (Salmon et al., SC'11).  Stateless: each 128-bit counter +
// 64-bit key pair maps to four independent 32-bit words, so streams can be
// keyed by (seed, path, step) and drawn in any order on any schedule.
struct Philox {
  static constexpr uint32_t kM0 = 0xD2511F53u;
  static constexpr uint32_t kM1 = 0xCD9E8D57u;
  static constexpr uint32_t kW0 = 0x9E3779B9u;
  static constexpr uint32_t kW1 = 0xBB67AE85u;

  static std::array<uint32_t, 4> block(uint64_t key, uint64_t c01, uint64_t c23) {
    uint32_t x0 = (uint32_t)c01, x1 = (uint32_t)(c01 >> 32);
    uint32_t x2 = (uint32_t)c23, x3 = (uint32_t)(c23 >> 32);
    uint32_t k0 = (uint32_t)key, k1 = (uint32_t)(key >> 32);
    for (int r = 0; r < 10; ++r) {
      uint64_t p0 = (uint64_t)kM0 * x0;
      uint64_t p1 = (uint64_t)kM1 * x2;
      uint32_t hi0 = (uint32_t)(p0 >> 32), lo0 = (uint32_t)p0;
      uint32_t hi1 = (uint32_t)(p1 >> 32), lo1 = (uint32_t)p1;
      x0 = hi1 ^ x1 ^ k0;
      x1 = lo1;
      x2 = hi0 ^ x3 ^ k1;
      x3 = lo0;
      k0 += kW0;
      k1 += kW1;
    }
    return {x0, x1, x2, x3};
  }
};

inline double u01_from_bits(uint32_t hi, uint32_t lo) {
  uint64_t bits = ((uint64_t)hi << 32) | lo;
  return ((bits >> 11) + 0.5) * 0x1p-53;  // in (0,1)
}

// Two standard normals per (seed, stream, step) via Box-Muller.
inline void normal_pair(uint64_t seed, uint64_t stream, uint64_t step,
                        double& z0, double& z1) {
  auto w = Philox::block(seed, stream, step);
  double u1 = u01_from_bits(w[0], w[1]);
  double u2 = u01_from_bits(w[2], w[3]);
  double r = std::sqrt(-2.0 * std::log(u1));
  z0 = r * std::cos(2.0 * M_PI * u2);
  z1 = r * std::sin(2.0 * M_PI * u2);
}

inline double uniform01(uint64_t seed, uint64_t stream, uint64_t step) {
  auto w = Philox::block(seed, stream, step);
  return u01_from_bits(w[0], w[1]);
}

}  // namespace magloc
