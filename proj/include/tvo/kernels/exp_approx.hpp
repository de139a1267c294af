#pragma once

// Scalar exp for arguments produced by max-shifted softmax (x <= 0 in practice).
// Cephes-style range reduction plus a (3,3) Pade kernel, about 1 ulp. The AVX2
// kernel in src/kernels/avx2.cpp mirrors this sequence operation for operation.

#include <bit>
#include <cmath>
#include <cstdint>

namespace tvo::kernels::detail {

inline constexpr double kLog2e = 1.4426950408889634073599;
inline constexpr double kLn2Hi = 6.93145751953125e-1;
inline constexpr double kLn2Lo = 1.42860682030941723212e-6;
inline constexpr double kExpUnderflow = -708.0;
inline constexpr double kExpOverflow = 709.0;

inline constexpr double kP0 = 1.26177193074810590878e-4;
inline constexpr double kP1 = 3.02994407707441961300e-2;
inline constexpr double kP2 = 9.99999999999999999910e-1;
inline constexpr double kQ0 = 3.00198505138664455042e-6;
inline constexpr double kQ1 = 2.52448340349684104192e-3;
inline constexpr double kQ2 = 2.27265548208155028766e-1;
inline constexpr double kQ3 = 2.00000000000000000009e0;

inline double exp_kernel(double x) {
  if (x < kExpUnderflow) return 0.0;
  if (x > kExpOverflow) x = kExpOverflow;
  const double n = std::nearbyint(x * kLog2e);
  double r = std::fma(-n, kLn2Hi, x);
  r = std::fma(-n, kLn2Lo, r);
  const double rr = r * r;
  double px = std::fma(kP0, rr, kP1);
  px = std::fma(px, rr, kP2);
  px = px * r;
  double qx = std::fma(kQ0, rr, kQ1);
  qx = std::fma(qx, rr, kQ2);
  qx = std::fma(qx, rr, kQ3);
  const double e = 1.0 + 2.0 * (px / (qx - px));
  const auto bits = static_cast<std::uint64_t>(static_cast<std::int64_t>(n) + 1023) << 52;
  return e * std::bit_cast<double>(bits);
}

}  // namespace tvo::kernels::detail
