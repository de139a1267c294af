#pragma once

// Self-normalized importance sampling over one shared set of log weights.
// pi_beta expectations are estimated by softmax-reweighting the same S samples
// with beta * log w, so a single grid serves every beta on the path.

#include "tvo/kernels/kernels.hpp"

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace tvo {

// S x N log importance weights: rows are samples, columns are datapoints.
// Stored row-major so the column kernels stream contiguous rows.
class LogWeightGrid {
 public:
  LogWeightGrid(std::size_t samples, std::size_t datapoints, std::vector<double> row_major);

  // One column per datapoint, each inner vector holding that datapoint's S samples.
  static LogWeightGrid from_columns(const std::vector<std::vector<double>>& columns);

  std::size_t samples() const { return rows_; }
  std::size_t datapoints() const { return cols_; }
  double at(std::size_t sample, std::size_t datapoint) const {
    return data_[sample * cols_ + datapoint];
  }
  std::span<const double> data() const { return data_; }
  kernels::MatrixView view() const { return {data_, rows_, cols_}; }

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<double> data_;
};

struct SnisWeights {
  std::size_t samples = 0;
  std::size_t datapoints = 0;
  std::vector<double> normalized;  // row-major S x N, columns sum to one
  double beta = 0.0;

  double at(std::size_t sample, std::size_t datapoint) const {
    return normalized[sample * datapoints + datapoint];
  }
};

// All functions below take an optional kernel table; the default is
// kernels::active_kernels().
SnisWeights snis_normalize(const LogWeightGrid& grid, double beta,
                           const kernels::KernelTable* table = nullptr);
std::vector<double> snis_eta(const LogWeightGrid& grid, double beta,
                             const kernels::KernelTable* table = nullptr);
std::vector<double> snis_var(const LogWeightGrid& grid, double beta,
                             const kernels::KernelTable* table = nullptr);
// Per-datapoint log mean of w^beta: the log-partition of the empirical S-atom family.
std::vector<double> snis_log_partition(const LogWeightGrid& grid, double beta,
                                       const kernels::KernelTable* table = nullptr);
// log of the mean importance weight per datapoint, snis_log_partition at beta = 1.
std::vector<double> iwae_bound(const LogWeightGrid& grid,
                               const kernels::KernelTable* table = nullptr);

// Batch mean of snis_eta, the pooled integrand used for schedules.
double snis_pooled_eta(const LogWeightGrid& grid, double beta,
                       const kernels::KernelTable* table = nullptr);

// CSV: one line per sample, comma-separated datapoint columns, no header.
void write_csv(std::ostream& out, const LogWeightGrid& grid);
LogWeightGrid read_log_weight_csv(std::istream& in);

}  // namespace tvo
