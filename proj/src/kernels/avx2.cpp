// Compiled with -mavx2 -mfma. Only reached through avx2_kernels(), which checks
// CPU support first.

#include "tvo/kernels/exp_approx.hpp"
#include "tvo/kernels/kernels.hpp"

#include <immintrin.h>

#include <limits>

namespace tvo::kernels {
namespace {

constexpr std::size_t kLanes = 4;

inline __m256d exp4(__m256d x) {
  using namespace detail;
  const __m256d under = _mm256_cmp_pd(x, _mm256_set1_pd(kExpUnderflow), _CMP_LT_OQ);
  x = _mm256_min_pd(x, _mm256_set1_pd(kExpOverflow));
  const __m256d n = _mm256_round_pd(_mm256_mul_pd(x, _mm256_set1_pd(kLog2e)),
                                    _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  const __m256d neg_n = _mm256_sub_pd(_mm256_setzero_pd(), n);
  __m256d r = _mm256_fmadd_pd(neg_n, _mm256_set1_pd(kLn2Hi), x);
  r = _mm256_fmadd_pd(neg_n, _mm256_set1_pd(kLn2Lo), r);
  const __m256d rr = _mm256_mul_pd(r, r);
  __m256d px = _mm256_fmadd_pd(_mm256_set1_pd(kP0), rr, _mm256_set1_pd(kP1));
  px = _mm256_fmadd_pd(px, rr, _mm256_set1_pd(kP2));
  px = _mm256_mul_pd(px, r);
  __m256d qx = _mm256_fmadd_pd(_mm256_set1_pd(kQ0), rr, _mm256_set1_pd(kQ1));
  qx = _mm256_fmadd_pd(qx, rr, _mm256_set1_pd(kQ2));
  qx = _mm256_fmadd_pd(qx, rr, _mm256_set1_pd(kQ3));
  const __m256d ratio = _mm256_div_pd(px, _mm256_sub_pd(qx, px));
  const __m256d e =
      _mm256_add_pd(_mm256_set1_pd(1.0), _mm256_mul_pd(_mm256_set1_pd(2.0), ratio));
  __m256i k = _mm256_cvtepi32_epi64(_mm256_cvtpd_epi32(n));
  k = _mm256_slli_epi64(_mm256_add_epi64(k, _mm256_set1_epi64x(1023)), 52);
  const __m256d scaled = _mm256_mul_pd(e, _mm256_castsi256_pd(k));
  return _mm256_blendv_pd(scaled, _mm256_setzero_pd(), under);
}

void scaled_max(const MatrixView& lw, double beta, std::span<double> out) {
  const std::size_t full = lw.cols - lw.cols % kLanes;
  const __m256d b = _mm256_set1_pd(beta);
  for (std::size_t j = 0; j < full; j += kLanes) {
    __m256d m = _mm256_set1_pd(-std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < lw.rows; ++i) {
      const __m256d v = _mm256_mul_pd(b, _mm256_loadu_pd(&lw.data[i * lw.cols + j]));
      // v > m ? v : m, same select as the scalar path
      m = _mm256_blendv_pd(m, v, _mm256_cmp_pd(v, m, _CMP_GT_OQ));
    }
    _mm256_storeu_pd(&out[j], m);
  }
  for (std::size_t j = full; j < lw.cols; ++j) {
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < lw.rows; ++i) {
      const double v = beta * lw.at(i, j);
      m = v > m ? v : m;
    }
    out[j] = m;
  }
}

void exp_moments(const MatrixView& lw, double beta, std::span<const double> shift,
                 std::span<double> s0, std::span<double> s1) {
  const std::size_t full = lw.cols - lw.cols % kLanes;
  const __m256d b = _mm256_set1_pd(beta);
  for (std::size_t j = 0; j < full; j += kLanes) {
    const __m256d sh = _mm256_loadu_pd(&shift[j]);
    __m256d a0 = _mm256_setzero_pd();
    __m256d a1 = _mm256_setzero_pd();
    for (std::size_t i = 0; i < lw.rows; ++i) {
      const __m256d l = _mm256_loadu_pd(&lw.data[i * lw.cols + j]);
      const __m256d e = exp4(_mm256_sub_pd(_mm256_mul_pd(b, l), sh));
      a0 = _mm256_add_pd(a0, e);
      a1 = _mm256_fmadd_pd(e, l, a1);
    }
    _mm256_storeu_pd(&s0[j], a0);
    _mm256_storeu_pd(&s1[j], a1);
  }
  for (std::size_t j = full; j < lw.cols; ++j) {
    double a0 = 0.0;
    double a1 = 0.0;
    for (std::size_t i = 0; i < lw.rows; ++i) {
      const double l = lw.at(i, j);
      const double e = detail::exp_kernel(beta * l - shift[j]);
      a0 = a0 + e;
      a1 = std::fma(e, l, a1);
    }
    s0[j] = a0;
    s1[j] = a1;
  }
}

void exp_centered_square(const MatrixView& lw, double beta, std::span<const double> shift,
                         std::span<const double> center, std::span<double> s2) {
  const std::size_t full = lw.cols - lw.cols % kLanes;
  const __m256d b = _mm256_set1_pd(beta);
  for (std::size_t j = 0; j < full; j += kLanes) {
    const __m256d sh = _mm256_loadu_pd(&shift[j]);
    const __m256d c = _mm256_loadu_pd(&center[j]);
    __m256d a2 = _mm256_setzero_pd();
    for (std::size_t i = 0; i < lw.rows; ++i) {
      const __m256d l = _mm256_loadu_pd(&lw.data[i * lw.cols + j]);
      const __m256d e = exp4(_mm256_sub_pd(_mm256_mul_pd(b, l), sh));
      const __m256d d = _mm256_sub_pd(l, c);
      a2 = _mm256_fmadd_pd(_mm256_mul_pd(e, d), d, a2);
    }
    _mm256_storeu_pd(&s2[j], a2);
  }
  for (std::size_t j = full; j < lw.cols; ++j) {
    double a2 = 0.0;
    for (std::size_t i = 0; i < lw.rows; ++i) {
      const double l = lw.at(i, j);
      const double e = detail::exp_kernel(beta * l - shift[j]);
      const double d = l - center[j];
      a2 = std::fma(e * d, d, a2);
    }
    s2[j] = a2;
  }
}

void softmax(const MatrixView& lw, double beta, std::span<const double> shift,
             std::span<const double> norm, std::span<double> out) {
  const std::size_t full = lw.cols - lw.cols % kLanes;
  const __m256d b = _mm256_set1_pd(beta);
  for (std::size_t i = 0; i < lw.rows; ++i) {
    for (std::size_t j = 0; j < full; j += kLanes) {
      const __m256d l = _mm256_loadu_pd(&lw.data[i * lw.cols + j]);
      const __m256d e = exp4(_mm256_sub_pd(_mm256_mul_pd(b, l), _mm256_loadu_pd(&shift[j])));
      _mm256_storeu_pd(&out[i * lw.cols + j], _mm256_div_pd(e, _mm256_loadu_pd(&norm[j])));
    }
    for (std::size_t j = full; j < lw.cols; ++j) {
      out[i * lw.cols + j] = detail::exp_kernel(beta * lw.at(i, j) - shift[j]) / norm[j];
    }
  }
}

}  // namespace

const KernelTable& avx2_table() {
  static const KernelTable table{Isa::avx2, &scaled_max, &exp_moments, &exp_centered_square,
                                 &softmax};
  return table;
}

}  // namespace tvo::kernels
