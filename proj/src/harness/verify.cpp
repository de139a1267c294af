#include "tvo/harness/verify.hpp"

#include "tvo/bounds.hpp"
#include "tvo/gradients.hpp"
#include "tvo/harness/battery.hpp"
#include "tvo/model_io.hpp"
#include "tvo/schedules.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <iomanip>
#include <limits>
#include <random>
#include <sstream>

namespace tvo::harness {

namespace {

constexpr double kGapTol = 1e-9;
constexpr double kDiscreteTol = 1e-10;
constexpr double kGaussianTol = 1e-8;
constexpr double kIntegralTol = 1e-6;
constexpr double kTiTol = 1e-8;
constexpr double kRoundoff = 1e-12;
constexpr double kGradTol = 1e-5;
constexpr double kRateTol = 0.02;
constexpr double kCorruption = 0.05;

class Tally {
 public:
  void add(const std::string& name, double tol, double residual, const std::string& label) {
    if (std::isnan(residual)) residual = std::numeric_limits<double>::infinity();
    auto it = std::find_if(rows_.begin(), rows_.end(), [&](const auto& r) { return r.name == name; });
    if (it == rows_.end()) {
      rows_.push_back({name, residual, tol, label, 1});
      return;
    }
    ++it->evaluations;
    if (residual > it->residual) {
      it->residual = residual;
      it->worst_case = label;
    }
  }
  VerifyReport report() && { return {std::move(rows_)}; }

 private:
  std::vector<IdentityResult> rows_;
};

bool is_discrete(const ExactModel& m) { return std::holds_alternative<DiscreteLatentModel>(m); }

double positive_part(double v) { return std::max(0.0, v); }

void schedule_identities(Tally& t, const ExactModel& model, const Schedule& s, double tol,
                         std::mt19937_64& rng, bool corrupt, const std::string& label) {
  const double log_px = exact_log_px(model);
  std::vector<double> etas = exact_etas(model, s);
  const double clean_lower = tvo_lower(etas, s);
  const double clean_upper = tvo_upper(etas, s);
  if (corrupt) etas.front() -= kCorruption;
  const double lower = tvo_lower(etas, s);
  const double upper = tvo_upper(etas, s);

  const GapDecomposition gl = gap_decomposition_lower(model, s);
  const GapDecomposition gu = gap_decomposition_upper(model, s);
  t.add("gap_identity_lower", kGapTol, std::abs(log_px - lower - gl.kl_sum()), label);
  t.add("gap_identity_upper", kGapTol, std::abs(upper - log_px - gu.kl_sum()), label);
  t.add("sandwich", kRoundoff,
        std::max(positive_part(lower - log_px), positive_part(log_px - upper)), label);

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double point = unit(rng);
  const auto betas = s.betas();
  if (std::find(betas.begin(), betas.end(), point) == betas.end() && point > 0.0) {
    const Schedule finer = s.refined(point);
    const std::vector<double> fine_etas = exact_etas(model, finer);
    t.add("refinement_monotone", kRoundoff,
          std::max(positive_part(clean_lower - tvo_lower(fine_etas, finer)),
                   positive_part(tvo_upper(fine_etas, finer) - clean_upper)),
          label);
  }

  for (std::size_t k = 0; k + 1 < betas.size(); ++k) {
    const double a = betas[k], b = betas[k + 1];
    const double kl = kl_between_path_points(model, a, b);
    t.add("bregman_equals_kl", tol, std::abs(bregman_divergence(model, a, b) - kl), label);
    t.add("kl_nonnegative", kRoundoff, positive_part(-kl), label);
    t.add("dual_divergence", tol,
          std::max(dual_divergence_check(model, a, b), dual_divergence_check(model, b, a)), label);
    const RectangleSides r = symm_kl_rectangle(model, a, b);
    t.add("symm_kl_rectangle", tol, std::abs(r.lhs - r.rhs), label);
  }

  const SecondOrderReport so = second_order_tvo(model, s);
  t.add("second_order_dominates", 0.0, positive_part(so.tvo_lower - so.value), label);
}

void model_identities(Tally& t, const ExactModel& model, double tol, const std::string& label) {
  const double log_px = exact_log_px(model);
  for (double beta : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    t.add("conjugate_psi_star", tol,
          std::abs(conjugate_psi_star(model, beta) - kl_between_path_points(model, beta, 0.0)), label);
    if (beta > 0.0) {
      t.add("renyi_scaling", tol, std::abs(beta * renyi_objective(model, beta) - exact_psi(model, beta)),
            label);
    }
  }
  t.add("renyi_endpoint", tol, std::abs(renyi_objective(model, 1.0) - log_px), label);
  t.add("renyi_limit", tol, std::abs(renyi_objective(model, 0.0) - exact_eta(model, 0.0)), label);

  constexpr std::array<std::array<double, 2>, 3> spans = {{{0.0, 0.5}, {0.5, 1.0}, {0.0, 1.0}}};
  for (const auto& [a, b] : spans) {
    t.add("kl_integral_forward", kIntegralTol,
          std::abs(kl_variance_integral(model, a, b, KlDirection::forward) -
                   kl_between_path_points(model, a, b)),
          label);
    t.add("kl_integral_reverse", kIntegralTol,
          std::abs(kl_variance_integral(model, a, b, KlDirection::reverse) -
                   kl_between_path_points(model, b, a)),
          label);
  }
  t.add("fisher_information_integral", kIntegralTol,
        std::abs(fisher_information_integral(model, 0.0, 1.0) -
                 (kl_between_path_points(model, 0.0, 1.0) + kl_between_path_points(model, 1.0, 0.0))),
        label);
  t.add("thermodynamic_integration", kTiTol,
        ti_identity_check(tabulate_curve(model, kIdentityQuadraturePoints)), label);

  const EtaEvaluator eval = EtaEvaluator::exact(model);
  for (std::size_t K : {2u, 5u}) {
    const MomentsResult mr = moments_schedule(eval, K);
    double worst = 0.0;
    for (std::size_t k = 0; k <= K; ++k) {
      worst = std::max(worst, std::abs(eval(mr.schedule[k]) - mr.targets[k]));
    }
    // In units of the bisection tolerance, which varies by model; a flat
    // integrand has zero tolerance and only round-off to show.
    const double unit = std::max(mr.tolerance, kRoundoff * std::max(1.0, std::abs(mr.targets[0])));
    t.add("moments_equal_spacing", 2.0, worst / unit, label);
  }
}

void rate_identity(Tally& t, const ExactModel& model, const std::string& label) {
  const double limit = asymptotic_rate_limit(model);
  if (!(limit > 0.0)) return;
  constexpr std::array<std::size_t, 3> Ks = {8, 32, 128};
  const auto points = asymptotic_rate_check(model, Ks);
  double monotone_violation = 0.0;
  for (std::size_t i = 1; i < points.size(); ++i) {
    const double prev = std::abs(points[i - 1].scaled_forward_kl - limit);
    const double cur = std::abs(points[i].scaled_forward_kl - limit);
    monotone_violation = std::max(monotone_violation, positive_part(cur - prev) / limit);
  }
  t.add("asymptotic_rate", kRateTol, std::abs(points.back().scaled_forward_kl - limit) / limit, label);
  t.add("asymptotic_rate_monotone", kRoundoff, monotone_violation, label);
}

void gradient_identities(Tally& t, const GaussianDatum& d, const std::string& label) {
  const SampleSet nodes = hermite_samples(d.model.latent_dim());
  for (double beta : {0.1, 0.5, 0.9}) {
    const GradEstimate fd = finite_diff_grad(d.model, d.x, beta, FdTarget::eta());
    const GradEstimate rf = reinforce_grad(d.model, d.x, beta, nodes);
    const GradEstimate dr = doubly_reparam_grad(d.model, d.x, beta, nodes);
    t.add("reinforce_matches_fd", kGradTol,
          std::max((rf.d_theta - fd.d_theta).cwiseAbs().maxCoeff(),
                   (rf.d_phi - fd.d_phi).cwiseAbs().maxCoeff()),
          label);
    t.add("doubly_reparam_matches_fd", kGradTol, (dr.d_phi - fd.d_phi).cwiseAbs().maxCoeff(), label);
    for (const auto& f : {TestFunction::log_w(), TestFunction::z(0), TestFunction::log_w_squared()}) {
      const GradEstimate g = generic_reparam_grad(d.model, d.x, beta, f, nodes);
      const GradEstimate ref = finite_diff_grad(d.model, d.x, beta, FdTarget::expectation(f));
      t.add("generic_reparam_matches_fd", kGradTol, (g.d_phi - ref.d_phi).cwiseAbs().maxCoeff(), label);
    }
    t.add("lemma_residuals", kGradTol, lemma_checks(d.model, d.x, beta).max_residual(), label);
  }
  const auto c0 = doubly_reparam_coefficients(0.0);
  const auto c1 = doubly_reparam_coefficients(1.0);
  t.add("covariance_coefficient_endpoints", 0.0, std::abs(c0.covariance) + std::abs(c1.covariance),
        label);
}

void single_model(Tally& t, const ExactModel& model, const std::string& label, std::mt19937_64& rng,
                  std::size_t schedules, bool corrupt) {
  const double tol = is_discrete(model) ? kDiscreteTol : kGaussianTol;
  std::vector<Schedule> list{linear_schedule(1), linear_schedule(2), linear_schedule(8)};
  for (std::size_t i = 0; i < schedules; ++i) list.push_back(random_schedule(rng));
  for (const auto& s : list) schedule_identities(t, model, s, tol, rng, corrupt, label);
  model_identities(t, model, tol, label);
}

}  // namespace

bool VerifyReport::all_pass() const {
  return std::all_of(identities.begin(), identities.end(), [](const auto& r) { return r.pass(); });
}

const IdentityResult* VerifyReport::find(std::string_view name) const {
  for (const auto& r : identities) {
    if (r.name == name) return &r;
  }
  return nullptr;
}

VerifyReport verify_battery(const VerifyOptions& options) {
  Tally t;
  std::mt19937_64 rng(options.seed);
  for (std::size_t i = 0; i < options.discrete_models; ++i) {
    const ExactModel model = random_discrete_model(rng);
    const std::string label = "discrete#" + std::to_string(i);
    single_model(t, model, label, rng, options.schedules_per_model, options.corrupt_eta);
    if (i < 5) rate_identity(t, model, label);
  }
  for (std::size_t i = 0; i < options.gaussian_models; ++i) {
    const Eigen::Index dz = 1 + static_cast<Eigen::Index>(i % 2);
    const Eigen::Index dx = 1 + static_cast<Eigen::Index>(i % 4);
    const ExactModel model = random_gaussian_datum(rng, dz, dx);
    const std::string label = "gaussian#" + std::to_string(i);
    single_model(t, model, label, rng, options.schedules_per_model, options.corrupt_eta);
    if (i < 5) rate_identity(t, model, label);
  }
  const ExactModel mismatch = mean_mismatch_datum();
  single_model(t, mismatch, "mean_mismatch", rng, options.schedules_per_model, options.corrupt_eta);
  rate_identity(t, mismatch, "mean_mismatch");
  single_model(t, flat_discrete_model(), "flat_discrete", rng, 1, options.corrupt_eta);
  single_model(t, flat_gaussian_datum(), "flat_gaussian", rng, 1, options.corrupt_eta);
  for (const auto& [label, model] : options.extra_models) {
    single_model(t, model, label, rng, options.schedules_per_model, options.corrupt_eta);
  }
  for (std::size_t i = 0; i < options.gradient_models; ++i) {
    gradient_identities(t, random_scalar_datum(rng), "scalar#" + std::to_string(i));
  }
  return std::move(t).report();
}

VerifyReport verify_model(const ExactModel& model, const std::string& label, std::uint64_t seed,
                          bool corrupt_eta) {
  Tally t;
  std::mt19937_64 rng(seed);
  single_model(t, model, label, rng, 5, corrupt_eta);
  return std::move(t).report();
}

nlohmann::json report_to_json(const VerifyReport& report) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : report.identities) {
    rows.push_back({{"name", r.name},
                    {"residual", r.residual},
                    {"tolerance", r.tolerance},
                    {"pass", r.pass()},
                    {"worst_case", r.worst_case},
                    {"evaluations", r.evaluations}});
  }
  return {{"pass", report.all_pass()}, {"identities", rows}};
}

std::string report_table(const VerifyReport& report) {
  std::ostringstream out;
  out << std::left << std::setw(34) << "identity" << std::setw(14) << "residual" << std::setw(12)
      << "tolerance" << "status\n";
  for (const auto& r : report.identities) {
    out << std::left << std::setw(34) << r.name << std::setw(14) << std::setprecision(3)
        << std::scientific << r.residual << std::setw(12) << r.tolerance
        << (r.pass() ? "PASS" : "FAIL") << '\n';
  }
  out << (report.all_pass() ? "all identities pass\n" : "identity failures present\n");
  return out.str();
}

VerifyReport run_verify(const ExperimentConfig& cfg) {
  VerifyOptions options;
  options.seed = cfg.seed;
  options.corrupt_eta = cfg.corrupt_eta;
  if (cfg.model_spec) options.extra_models.emplace_back("model_spec", load_model(*cfg.model_spec).exact());
  VerifyReport report = verify_battery(options);
  nlohmann::json doc = report_to_json(report);
  doc["config"] = config_to_json(cfg);
  write_output(cfg, "report.json", doc.dump(2) + "\n");
  return report;
}

}  // namespace tvo::harness
