#include "tvo/harness/study.hpp"

#include "tvo/bounds.hpp"
#include "tvo/harness/csv.hpp"
#include "tvo/model_io.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace tvo::harness {

Schedule make_schedule(Strategy strategy, std::size_t K, std::optional<double> beta1,
                       std::optional<std::size_t> J, const EtaEvaluator& eval) {
  switch (strategy) {
    case Strategy::linear: return linear_schedule(K);
    case Strategy::log_uniform:
      if (!beta1) throw std::invalid_argument("log_uniform schedule needs beta1");
      return log_uniform_schedule(K, *beta1);
    case Strategy::moments: return moments_schedule(eval, K).schedule;
    case Strategy::coarse_grained:
      return coarse_grained_schedule(eval, K, std::min(J.value_or(kDefaultKnots), K));
  }
  throw std::invalid_argument("unknown schedule strategy");
}

std::vector<StudyRow> schedule_study(const ExactModel& model, double beta1,
                                     std::optional<std::size_t> J) {
  const EtaEvaluator eval = EtaEvaluator::exact(model);
  std::vector<StudyRow> rows;
  for (auto strategy : {Strategy::linear, Strategy::log_uniform, Strategy::moments,
                        Strategy::coarse_grained}) {
    for (std::size_t K : kStudyK) {
      const Schedule s = make_schedule(strategy, K, beta1, J, eval);
      const BoundReport r = bound_report(model, s);
      rows.push_back({strategy, K, r.gap_lower, r.gap_upper});
    }
  }
  return rows;
}

std::string study_csv(const std::vector<StudyRow>& rows) {
  std::ostringstream out;
  out << "strategy,K,gap_lower,gap_upper\n";
  for (const auto& r : rows) {
    out << to_string(r.strategy) << ',' << r.K << ',' << csv::format_double(r.gap_lower) << ','
        << csv::format_double(r.gap_upper) << '\n';
  }
  return out.str();
}

std::vector<StudyRow> run_schedule_study(const ExperimentConfig& cfg) {
  const ExactModel model = cfg.model_spec ? load_model(*cfg.model_spec).exact()
                                          : ExactModel{two_state_model()};
  auto rows = schedule_study(model, cfg.beta1.value_or(kStudyBeta1), cfg.J);
  write_output(cfg, "study.csv", study_csv(rows));
  return rows;
}

}  // namespace tvo::harness
