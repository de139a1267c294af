#include "tvo/harness/integrand.hpp"

#include "tvo/harness/csv.hpp"
#include "tvo/model_io.hpp"
#include "tvo/quadrature.hpp"

#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace tvo::harness {

std::vector<IntegrandRow> integrand_table(const ExactModel& model) {
  std::vector<IntegrandRow> rows;
  for (double beta : linspace(0.0, 1.0, kIntegrandRows)) {
    const PathMoments pm = exact_moments(model, beta);
    rows.push_back({beta, pm.eta, pm.var});
  }
  return rows;
}

std::vector<IntegrandRow> integrand_table(const LogWeightGrid& grid) {
  auto mean = [](const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  };
  std::vector<IntegrandRow> rows;
  for (double beta : linspace(0.0, 1.0, kIntegrandRows)) {
    rows.push_back({beta, mean(snis_eta(grid, beta)), mean(snis_var(grid, beta))});
  }
  return rows;
}

std::string integrand_csv(const std::vector<IntegrandRow>& rows) {
  std::ostringstream out;
  out << "beta,eta,var\n";
  for (const auto& r : rows) {
    out << csv::format_double(r.beta) << ',' << csv::format_double(r.eta) << ','
        << csv::format_double(r.var) << '\n';
  }
  return out.str();
}

std::vector<IntegrandRow> emit_integrand(const ExperimentConfig& cfg) {
  std::vector<IntegrandRow> rows;
  if (cfg.log_weights) {
    std::ifstream in(*cfg.log_weights);
    if (!in) throw std::runtime_error("cannot read log-weight grid " + cfg.log_weights->string());
    rows = integrand_table(read_log_weight_csv(in));
  } else {
    const ExactModel model = cfg.model_spec ? load_model(*cfg.model_spec).exact()
                                            : ExactModel{two_state_model()};
    rows = integrand_table(model);
  }
  write_output(cfg, "integrand.csv", integrand_csv(rows));
  return rows;
}

}  // namespace tvo::harness
