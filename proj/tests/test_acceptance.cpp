// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include "oracle.hpp"
#include "tvo/bounds.hpp"
#include "tvo/gradients.hpp"
#include "tvo/harness/battery.hpp"
#include "tvo/harness/train.hpp"
#include "tvo/harness/verify.hpp"
#include "tvo/model_io.hpp"
#include "tvo/schedules.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace tvo;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

oracle::Discrete oracle_of(const DiscreteLatentModel& m) {
  return oracle::Discrete::from_log({m.log_q().begin(), m.log_q().end()},
                                    {m.log_joint().begin(), m.log_joint().end()});
}

// 200 models and 50 schedules each, shared by the first two criteria.
struct Battery {
  std::vector<DiscreteLatentModel> models;
  std::vector<std::vector<Schedule>> schedules;
};

Battery make_battery() {
  std::mt19937_64 rng(20240501);
  Battery b;
  for (int i = 0; i < 200; ++i) {
    b.models.push_back(harness::random_discrete_model(rng, 16));
    std::vector<Schedule> list;
    for (int j = 0; j < 50; ++j) list.push_back(harness::random_schedule(rng, 16));
    b.schedules.push_back(std::move(list));
  }
  return b;
}

Outcome gap_identity(const Battery& b) {
  const auto t0 = Clock::now();
  double worst = 0.0;
  for (std::size_t i = 0; i < b.models.size(); ++i) {
    const ExactModel m = b.models[i];
    const double lpx = exact_log_px(m);
    for (const auto& s : b.schedules[i]) {
      const auto etas = exact_etas(m, s);
      double fwd = 0.0, rev = 0.0;
      for (std::size_t k = 1; k < s.betas().size(); ++k) {
        fwd += kl_between_path_points(m, s[k - 1], s[k]);
        rev += kl_between_path_points(m, s[k], s[k - 1]);
      }
      worst = std::max(worst, std::abs(lpx - tvo_lower(etas, s) - fwd));
      worst = std::max(worst, std::abs(tvo_upper(etas, s) - lpx - rev));
    }
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-9 && secs < 10.0, fmt("max residual %.3g, %.2f s", worst, secs)};
}

Outcome sandwich_refinement(const Battery& b) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::size_t violations = 0, checks = 0;
  for (std::size_t i = 0; i < b.models.size(); ++i) {
    const ExactModel m = b.models[i];
    const double lpx = exact_log_px(m);
    for (const auto& s : b.schedules[i]) {
      const auto etas = exact_etas(m, s);
      const double lo = tvo_lower(etas, s), up = tvo_upper(etas, s);
      checks += 2;
      violations += (lo > lpx) + (lpx > up);
      const double beta = unit(rng);
      if (std::find(s.betas().begin(), s.betas().end(), beta) != s.betas().end() || beta == 0.0) continue;
      const Schedule r = s.refined(beta);
      const auto re = exact_etas(m, r);
      const double gap_lo = lpx - lo, gap_up = up - lpx;
      const double new_lo = lpx - tvo_lower(re, r), new_up = tvo_upper(re, r) - lpx;
      // Gaps are compared with a round-off allowance scaled to log p(x).
      const double slack = 1e-13 * std::max(1.0, std::abs(lpx));
      checks += 2;
      violations += (new_lo > gap_lo + slack) + (new_up > gap_up + slack);
    }
  }
  return {violations == 0, fmt("%.0f violations in %.0f checks", static_cast<double>(violations),
                               static_cast<double>(checks))};
}

Outcome duality(const Battery& b) {
  double worst_d = 0.0, worst_g = 0.0;
  const double betas[] = {0.0, 0.2, 0.5, 0.8, 1.0};
  for (std::size_t i = 0; i < b.models.size(); ++i) {
    const ExactModel m = b.models[i];
    const oracle::Discrete o = oracle_of(b.models[i]);
    const double lpx = static_cast<double>(o.log_px());
    for (double a : betas) {
      worst_d = std::max(worst_d, std::abs(conjugate_psi_star(m, a) - static_cast<double>(o.kl(a, 0))));
      if (a > 0) {
        worst_d = std::max(worst_d, std::abs(a * renyi_objective(m, a) - static_cast<double>(o.psi(a))));
      }
      for (double c : betas) {
        if (a == c) continue;
        worst_d = std::max(worst_d, dual_divergence_check(m, a, c));
        const auto rect = symm_kl_rectangle(m, a, c);
        worst_d = std::max(worst_d, std::abs(rect.lhs - rect.rhs));
        worst_d = std::max(worst_d, std::abs(rect.lhs - static_cast<double>(o.kl(a, c) + o.kl(c, a))));
      }
    }
    worst_d = std::max(worst_d, std::abs(renyi_objective(m, 1.0) - lpx));
    worst_d = std::max(worst_d, std::abs(renyi_objective(m, 0.0) - static_cast<double>(o.eta(0))));
  }
  std::mt19937_64 rng(8);
  for (int i = 0; i < 40; ++i) {
    const ExactModel m = harness::random_gaussian_datum(rng, 1 + i % 2, 1 + i % 4);
    for (double a : betas) {
      worst_g = std::max(worst_g, std::abs(conjugate_psi_star(m, a) - kl_between_path_points(m, a, 0.0)));
      if (a > 0) worst_g = std::max(worst_g, std::abs(a * renyi_objective(m, a) - exact_psi(m, a)));
      for (double c : betas) {
        if (a == c) continue;
        worst_g = std::max(worst_g, dual_divergence_check(m, a, c));
        const auto rect = symm_kl_rectangle(m, a, c);
        worst_g = std::max(worst_g, std::abs(rect.lhs - rect.rhs));
      }
    }
    worst_g = std::max(worst_g, std::abs(renyi_objective(m, 1.0) - exact_log_px(m)));
    worst_g = std::max(worst_g, std::abs(renyi_objective(m, 0.0) - exact_eta(m, 0.0)));
  }
  return {worst_d <= 1e-10 && worst_g <= 1e-8,
          fmt("enumeration %.3g (tol 1e-10), gaussian %.3g (tol 1e-8)", worst_d, worst_g)};
}

Outcome taylor_integrals(const Battery& b) {
  double worst = 0.0;
  const double spans[][2] = {{0.0, 1.0}, {0.0, 0.5}, {0.3, 0.9}};
  auto check = [&](const ExactModel& m, auto&& direct) {
    for (const auto& [a, c] : spans) {
      worst = std::max(worst, std::abs(kl_variance_integral(m, a, c, KlDirection::forward) - direct(a, c)));
      worst = std::max(worst, std::abs(kl_variance_integral(m, a, c, KlDirection::reverse) - direct(c, a)));
      worst = std::max(worst, std::abs(fisher_information_integral(m, a, c) - direct(a, c) - direct(c, a)));
    }
  };
  for (std::size_t i = 0; i < 50; ++i) {
    const oracle::Discrete o = oracle_of(b.models[i]);
    check(ExactModel{b.models[i]}, [&](double a, double c) { return static_cast<double>(o.kl(a, c)); });
  }
  std::mt19937_64 rng(9);
  for (int i = 0; i < 20; ++i) {
    const ExactModel m = harness::random_gaussian_datum(rng, 1 + i % 2, 3);
    check(m, [&](double a, double c) { return kl_between_path_points(m, a, c); });
  }
  return {worst <= 1e-6, fmt("max residual %.3g at %.0f points", worst, kIdentityQuadraturePoints)};
}

Outcome asymptotic_rate(const Battery& b) {
  std::vector<ExactModel> smooth{two_state_model(), harness::mean_mismatch_datum()};
  for (std::size_t i = 0; i < 20; ++i) smooth.emplace_back(b.models[i]);
  std::mt19937_64 rng(10);
  for (int i = 0; i < 10; ++i) smooth.emplace_back(harness::random_gaussian_datum(rng, 1 + i % 2, 3));
  const std::size_t Ks[] = {8, 32, 128};
  double worst = 0.0;
  std::size_t non_monotone = 0;
  for (const auto& m : smooth) {
    const double limit = asymptotic_rate_limit(m);
    const auto pts = asymptotic_rate_check(m, Ks);
    const double e8 = std::abs(pts[0].scaled_forward_kl - limit);
    const double e32 = std::abs(pts[1].scaled_forward_kl - limit);
    const double e128 = std::abs(pts[2].scaled_forward_kl - limit);
    worst = std::max(worst, e128 / limit);
    // A model whose error is already at round-off at K = 8 is trivially monotone.
    const double floor = 1e-12 * limit;
    non_monotone += (e32 > e8 + floor) || (e128 > e32 + floor);
  }
  return {worst <= 0.02 && non_monotone == 0,
          fmt("worst relative error at K=128 %.3g over %.0f models, %.0f non-monotone", worst,
              static_cast<double>(smooth.size()), static_cast<double>(non_monotone))};
}

Outcome moment_spacing(const Battery& b) {
  double worst_spacing = 0.0;
  for (std::size_t i = 0; i < b.models.size(); i += 4) {
    const EtaEvaluator eval = EtaEvaluator::exact(b.models[i]);
    for (std::size_t K : {1u, 2u, 5u, 16u}) {
      const auto r = moments_schedule(eval, K);
      for (std::size_t k = 1; k <= K; ++k) {
        const double spacing = eval(r.schedule[k]) - eval(r.schedule[k - 1]);
        worst_spacing = std::max(worst_spacing, std::abs(spacing - (r.targets[k] - r.targets[k - 1])) / r.tolerance);
      }
    }
  }
  const double beta1 = moments_schedule(EtaEvaluator::exact(two_state_model()), 2).schedule[1];
  const double exact_b1 = std::log(5.0 / 3.0) / std::log(3.0);

  const EtaEvaluator mm = EtaEvaluator::exact(harness::mean_mismatch_datum());
  const double span = mm(1.0) - mm(0.0);
  double worst_linear = 0.0;
  for (std::size_t K : {2u, 4u, 8u, 16u}) {
    const auto r = moments_schedule(mm, K);
    for (std::size_t k = 0; k <= K; ++k) {
      const double dbeta = std::abs(r.schedule[k] - static_cast<double>(k) / static_cast<double>(K));
      // eta is linear here, so a beta offset maps to an eta offset of dbeta * span.
      worst_linear = std::max(worst_linear, dbeta * span / r.tolerance);
    }
  }
  const bool pass = worst_spacing <= 2.0 && std::abs(beta1 - exact_b1) <= 1e-3 && worst_linear <= 1.0;
  return {pass, fmt("spacing %.3g tol, two-state beta1 %.6f, mean-mismatch %.3g tol", worst_spacing, beta1,
                    worst_linear)};
}

Outcome gradients() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(11);
  const SampleSet nodes = hermite_samples(1);
  double worst_fd = 0.0, worst_lemma = 0.0;
  for (int i = 0; i < 20; ++i) {
    const GaussianDatum d = harness::random_scalar_datum(rng);
    for (double beta : {0.1, 0.5, 0.9}) {
      const auto fd = finite_diff_grad(d.model, d.x, beta, FdTarget::eta());
      const auto rf = reinforce_grad(d.model, d.x, beta, nodes);
      const auto dr = doubly_reparam_grad(d.model, d.x, beta, nodes);
      worst_fd = std::max({worst_fd, (rf.d_theta - fd.d_theta).cwiseAbs().maxCoeff(),
                           (rf.d_phi - fd.d_phi).cwiseAbs().maxCoeff(),
                           (dr.d_phi - fd.d_phi).cwiseAbs().maxCoeff()});
    }
    for (double beta : {0.0, 0.1, 0.5, 0.9, 1.0}) {
      worst_lemma = std::max(worst_lemma, lemma_checks(d.model, d.x, beta).max_residual());
    }
  }
  const bool endpoints =
      doubly_reparam_coefficients(0.0).covariance == 0.0 && doubly_reparam_coefficients(1.0).covariance == 0.0;
  const double secs = seconds_since(t0);
  return {worst_fd <= 1e-5 && worst_lemma <= 1e-5 && endpoints && secs < 30.0,
          fmt("estimator vs fd %.3g, lemmas %.3g, %.2f s", worst_fd, worst_lemma, secs)};
}

Outcome training() {
  const auto t0 = Clock::now();
  harness::ExperimentConfig cfg;  // K = 2 moments, 500 epochs, lr 1e-2, S = 100
  cfg.output_dir = std::filesystem::temp_directory_path() / "tvo_acceptance_train";
  harness::TrainLog log;
  try {
    log = harness::train(cfg, harness::make_setup(cfg));
  } catch (const std::exception& e) {
    return {false, std::string("training failed: ") + e.what()};
  }
  const double secs = seconds_since(t0);
  const double kl0 = log.initial().kl_q_posterior, kl1 = log.final().kl_q_posterior;
  const auto q = log.quartile_median_betas();
  bool nondecreasing = true;
  for (std::size_t i = 1; i < q.size(); ++i) nondecreasing = nondecreasing && q[i] >= q[i - 1];
  bool sandwich = true;
  for (const auto& r : log.rows()) sandwich = sandwich && r.tvo_lower <= r.log_px && r.log_px <= r.tvo_upper;
  const bool pass = kl1 <= 0.1 * kl0 && sandwich && nondecreasing && secs < 60.0;
  std::ostringstream d;
  d << fmt("KL %.4g -> %.3g, ", kl0, kl1) << "quartile median beta [";
  for (std::size_t i = 0; i < q.size(); ++i) d << (i ? " " : "") << fmt("%.4f", q[i]);
  d << "], " << fmt("%.1f s", secs);
  return {pass, d.str()};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome determinism() {
  const auto root = std::filesystem::temp_directory_path() / "tvo_acceptance_determinism";
  std::filesystem::remove_all(root);
  harness::ExperimentConfig cfg;
  cfg.seed = 17;
  cfg.epochs = 25;
  std::string outputs[2];
  for (int run = 0; run < 2; ++run) {
    cfg.output_dir = root / std::to_string(run);
    harness::run_verify(cfg);
    harness::train(cfg);
    outputs[run] = slurp(cfg.output_dir / "report.json") + slurp(cfg.output_dir / "trainlog.csv");
  }
  const bool same = !outputs[0].empty() && outputs[0] == outputs[1];
  return {same, same ? "report.json and trainlog.csv byte-identical" : "outputs differ"};
}

}  // namespace

int main() {
  const Battery battery = make_battery();
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"gap identity", [&] { return gap_identity(battery); }},
      {"sandwich and refinement", [&] { return sandwich_refinement(battery); }},
      {"duality suite", [&] { return duality(battery); }},
      {"taylor-remainder integrals", [&] { return taylor_integrals(battery); }},
      {"asymptotic rate", [&] { return asymptotic_rate(battery); }},
      {"moment spacing", [&] { return moment_spacing(battery); }},
      {"gradient correctness", gradients},
      {"training sanity", training},
      {"determinism", determinism},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += o.pass ? 0 : 1;
    std::printf("%s %zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
