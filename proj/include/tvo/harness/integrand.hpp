#pragma once

#include "tvo/harness/config.hpp"
#include "tvo/path_models.hpp"
#include "tvo/snis.hpp"

#include <string>
#include <vector>

namespace tvo::harness {

constexpr std::size_t kIntegrandRows = 201;

struct IntegrandRow {
  double beta = 0.0;
  double eta = 0.0;
  double var = 0.0;
};

std::vector<IntegrandRow> integrand_table(const ExactModel& model);
// Batch means of the SNIS eta and variance over the grid's datapoints.
std::vector<IntegrandRow> integrand_table(const LogWeightGrid& grid);

std::string integrand_csv(const std::vector<IntegrandRow>& rows);

// Uses the log-weight grid when configured, otherwise the model spec (two-state
// reference model by default); writes integrand.csv.
std::vector<IntegrandRow> emit_integrand(const ExperimentConfig& cfg);

}  // namespace tvo::harness
