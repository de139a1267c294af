#pragma once

#include "tvo/harness/config.hpp"
#include "tvo/schedules.hpp"

#include <array>
#include <string>
#include <vector>

namespace tvo::harness {

constexpr double kStudyBeta1 = 0.025;
constexpr std::array<std::size_t, 5> kStudyK = {2, 5, 10, 30, 50};

// Builds a schedule for any strategy. log_uniform needs beta1; coarse_grained
// uses J = min(J, K) so small budgets stay valid.
Schedule make_schedule(Strategy strategy, std::size_t K, std::optional<double> beta1,
                       std::optional<std::size_t> J, const EtaEvaluator& eval);

struct StudyRow {
  Strategy strategy = Strategy::linear;
  std::size_t K = 0;
  double gap_lower = 0.0;
  double gap_upper = 0.0;
};

// Every strategy at every K in kStudyK on one exact model.
std::vector<StudyRow> schedule_study(const ExactModel& model, double beta1 = kStudyBeta1,
                                     std::optional<std::size_t> J = std::nullopt);

std::string study_csv(const std::vector<StudyRow>& rows);

// Loads the model (two-state reference model by default), runs the study and
// writes study.csv under the output directory.
std::vector<StudyRow> run_schedule_study(const ExperimentConfig& cfg);

}  // namespace tvo::harness
