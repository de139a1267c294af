#include "tvo/kernels/exp_approx.hpp"
#include "tvo/kernels/kernels.hpp"

#include <limits>

namespace tvo::kernels {
namespace {

using detail::exp_kernel;

void scaled_max(const MatrixView& lw, double beta, std::span<double> out) {
  for (std::size_t j = 0; j < lw.cols; ++j) {
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
  for (std::size_t j = 0; j < lw.cols; ++j) {
    double a0 = 0.0;
    double a1 = 0.0;
    for (std::size_t i = 0; i < lw.rows; ++i) {
      const double l = lw.at(i, j);
      const double e = exp_kernel(beta * l - shift[j]);
      a0 = a0 + e;
      a1 = std::fma(e, l, a1);
    }
    s0[j] = a0;
    s1[j] = a1;
  }
}

void exp_centered_square(const MatrixView& lw, double beta, std::span<const double> shift,
                         std::span<const double> center, std::span<double> s2) {
  for (std::size_t j = 0; j < lw.cols; ++j) {
    double a2 = 0.0;
    for (std::size_t i = 0; i < lw.rows; ++i) {
      const double l = lw.at(i, j);
      const double e = exp_kernel(beta * l - shift[j]);
      const double d = l - center[j];
      a2 = std::fma(e * d, d, a2);
    }
    s2[j] = a2;
  }
}

void softmax(const MatrixView& lw, double beta, std::span<const double> shift,
             std::span<const double> norm, std::span<double> out) {
  for (std::size_t i = 0; i < lw.rows; ++i) {
    for (std::size_t j = 0; j < lw.cols; ++j) {
      out[i * lw.cols + j] = exp_kernel(beta * lw.at(i, j) - shift[j]) / norm[j];
    }
  }
}

}  // namespace

const KernelTable& scalar_kernels() {
  static const KernelTable table{Isa::scalar, &scaled_max, &exp_moments, &exp_centered_square,
                                 &softmax};
  return table;
}

}  // namespace tvo::kernels
