#include "tvo/snis.hpp"

#include "tvo/harness/csv.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace tvo {
namespace {

void require_beta(double beta) {
  if (!std::isfinite(beta) || beta < 0.0)
    throw std::invalid_argument("snis: beta must be finite and nonnegative");
}

const kernels::KernelTable& pick(const kernels::KernelTable* table) {
  return table != nullptr ? *table : kernels::active_kernels();
}

struct ColumnStats {
  std::vector<double> shift;
  std::vector<double> s0;
  std::vector<double> s1;
};

ColumnStats exp_stats(const LogWeightGrid& grid, double beta, const kernels::KernelTable& k) {
  const std::size_t n = grid.datapoints();
  ColumnStats st{std::vector<double>(n), std::vector<double>(n), std::vector<double>(n)};
  const auto view = grid.view();
  k.column_scaled_max(view, beta, st.shift);
  k.column_exp_moments(view, beta, st.shift, st.s0, st.s1);
  return st;
}

}  // namespace

LogWeightGrid::LogWeightGrid(std::size_t samples, std::size_t datapoints,
                             std::vector<double> row_major)
    : rows_(samples), cols_(datapoints), data_(std::move(row_major)) {
  if (rows_ < 1 || cols_ < 1) throw std::invalid_argument("log weight grid: empty");
  if (data_.size() != rows_ * cols_) throw std::invalid_argument("log weight grid: bad size");
  for (double v : data_) {
    if (!std::isfinite(v)) throw std::invalid_argument("log weight grid: non-finite entry");
  }
}

LogWeightGrid LogWeightGrid::from_columns(const std::vector<std::vector<double>>& columns) {
  if (columns.empty()) throw std::invalid_argument("log weight grid: empty");
  const std::size_t s = columns.front().size();
  std::vector<double> data(s * columns.size());
  for (std::size_t j = 0; j < columns.size(); ++j) {
    if (columns[j].size() != s) throw std::invalid_argument("log weight grid: ragged columns");
    for (std::size_t i = 0; i < s; ++i) data[i * columns.size() + j] = columns[j][i];
  }
  return LogWeightGrid(s, columns.size(), std::move(data));
}

SnisWeights snis_normalize(const LogWeightGrid& grid, double beta,
                           const kernels::KernelTable* table) {
  require_beta(beta);
  const auto& k = pick(table);
  const ColumnStats st = exp_stats(grid, beta, k);
  SnisWeights w;
  w.samples = grid.samples();
  w.datapoints = grid.datapoints();
  w.beta = beta;
  w.normalized.resize(grid.data().size());
  k.column_softmax(grid.view(), beta, st.shift, st.s0, w.normalized);
  return w;
}

std::vector<double> snis_eta(const LogWeightGrid& grid, double beta,
                             const kernels::KernelTable* table) {
  require_beta(beta);
  const ColumnStats st = exp_stats(grid, beta, pick(table));
  std::vector<double> eta(grid.datapoints());
  for (std::size_t j = 0; j < eta.size(); ++j) eta[j] = st.s1[j] / st.s0[j];
  return eta;
}

std::vector<double> snis_var(const LogWeightGrid& grid, double beta,
                             const kernels::KernelTable* table) {
  require_beta(beta);
  const auto& k = pick(table);
  const ColumnStats st = exp_stats(grid, beta, k);
  const std::size_t n = grid.datapoints();
  std::vector<double> eta(n);
  for (std::size_t j = 0; j < n; ++j) eta[j] = st.s1[j] / st.s0[j];
  std::vector<double> s2(n);
  k.column_exp_centered_square(grid.view(), beta, st.shift, eta, s2);
  for (std::size_t j = 0; j < n; ++j) s2[j] /= st.s0[j];
  return s2;
}

std::vector<double> iwae_bound(const LogWeightGrid& grid, const kernels::KernelTable* table) {
  return snis_log_partition(grid, 1.0, table);
}

std::vector<double> snis_log_partition(const LogWeightGrid& grid, double beta,
                                       const kernels::KernelTable* table) {
  require_beta(beta);
  const ColumnStats st = exp_stats(grid, beta, pick(table));
  const double log_s = std::log(static_cast<double>(grid.samples()));
  std::vector<double> out(grid.datapoints());
  for (std::size_t j = 0; j < out.size(); ++j) out[j] = st.shift[j] + std::log(st.s0[j]) - log_s;
  return out;
}

double snis_pooled_eta(const LogWeightGrid& grid, double beta,
                       const kernels::KernelTable* table) {
  const auto eta = snis_eta(grid, beta, table);
  double total = 0.0;
  for (double e : eta) total += e;
  return total / static_cast<double>(eta.size());
}

void write_csv(std::ostream& out, const LogWeightGrid& grid) {
  for (std::size_t i = 0; i < grid.samples(); ++i) {
    for (std::size_t j = 0; j < grid.datapoints(); ++j) {
      if (j > 0) out << ',';
      out << csv::format_double(grid.at(i, j));
    }
    out << '\n';
  }
}

LogWeightGrid read_log_weight_csv(std::istream& in) {
  std::vector<double> data;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = csv::parse_doubles(line);
    if (rows == 0) {
      cols = fields.size();
    } else if (fields.size() != cols) {
      throw std::invalid_argument("log weight csv: row " + std::to_string(rows + 1) +
                                  " has a different column count");
    }
    data.insert(data.end(), fields.begin(), fields.end());
    ++rows;
  }
  return LogWeightGrid(rows, cols, std::move(data));
}

}  // namespace tvo
