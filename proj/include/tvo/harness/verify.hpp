#pragma once

#include "tvo/harness/config.hpp"
#include "tvo/path_models.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace tvo::harness {

struct IdentityResult {
  std::string name;
  double residual = 0.0;  // worst case over the battery
  double tolerance = 0.0;
  std::string worst_case;  // label of the model that produced the residual
  std::size_t evaluations = 0;
  bool pass() const { return residual <= tolerance; }
};

struct VerifyReport {
  std::vector<IdentityResult> identities;
  bool all_pass() const;
  const IdentityResult* find(std::string_view name) const;
};

struct VerifyOptions {
  std::uint64_t seed = 0;
  std::size_t discrete_models = 40;
  std::size_t schedules_per_model = 5;
  std::size_t gaussian_models = 10;
  std::size_t gradient_models = 5;
  bool corrupt_eta = false;  // shifts eta(beta_0) so the lower gap identity must fail
  std::vector<std::pair<std::string, ExactModel>> extra_models;
};

VerifyReport verify_battery(const VerifyOptions& options);

// Identities on a single labelled model with the default schedules; used for
// flat and user-supplied models.
VerifyReport verify_model(const ExactModel& model, const std::string& label, std::uint64_t seed,
                          bool corrupt_eta = false);

nlohmann::json report_to_json(const VerifyReport& report);
std::string report_table(const VerifyReport& report);

// Runs the default battery (plus the configured model) and writes report.json.
VerifyReport run_verify(const ExperimentConfig& cfg);

}  // namespace tvo::harness
