#pragma once

// Column reductions over a row-major S x N matrix of log importance weights.
//
// Every kernel treats each column (datapoint) independently and walks the rows
// (samples) in index order. The AVX2 variants process four adjacent columns per
// vector with one lane per column, so a lane performs exactly the scalar
// operation sequence for its column. Results are bitwise identical across
// variants; tests/test_kernels.cpp holds that contract.

#include <cstddef>
#include <span>
#include <string_view>

namespace tvo::kernels {

enum class Isa { scalar, avx2 };

struct MatrixView {
  std::span<const double> data;  // row-major, rows * cols entries
  std::size_t rows = 0;
  std::size_t cols = 0;

  double at(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
};

// Table of kernel entry points for one instruction set.
struct KernelTable {
  Isa isa;

  // out[j] = max_i beta * lw[i, j]
  void (*column_scaled_max)(const MatrixView& lw, double beta, std::span<double> out);

  // s0[j] = sum_i e_ij, s1[j] = sum_i e_ij * lw[i, j], with e_ij = exp(beta * lw[i, j] - shift[j])
  void (*column_exp_moments)(const MatrixView& lw, double beta, std::span<const double> shift,
                             std::span<double> s0, std::span<double> s1);

  // s2[j] = sum_i e_ij * (lw[i, j] - center[j])^2
  void (*column_exp_centered_square)(const MatrixView& lw, double beta,
                                     std::span<const double> shift,
                                     std::span<const double> center, std::span<double> s2);

  // out[i, j] = e_ij / norm[j]
  void (*column_softmax)(const MatrixView& lw, double beta, std::span<const double> shift,
                         std::span<const double> norm, std::span<double> out);
};

const KernelTable& scalar_kernels();

// Returns nullptr when the AVX2 variant was not compiled in or the CPU lacks AVX2/FMA.
const KernelTable* avx2_kernels();

// Best table for this machine. Setting TVO_FORCE_SCALAR=1 in the environment pins
// the scalar reference.
const KernelTable& active_kernels();

std::string_view isa_name(Isa isa);

}  // namespace tvo::kernels
