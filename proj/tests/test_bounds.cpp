#include "oracle.hpp"
#include "tvo/bounds.hpp"
#include "tvo/harness/battery.hpp"
#include "tvo/model_io.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace tvo;

namespace {

const oracle::Discrete& two_state_oracle() {
  static const oracle::Discrete o({0.5, 0.5}, {0.1, 0.3});
  return o;
}

}  // namespace

TEST_CASE("two-state bound examples") {
  const auto& o = two_state_oracle();
  const ExactModel m = two_state_model();
  const Schedule s({0.0, 0.5, 1.0});
  const auto etas = exact_etas(m, s);
  const double lo = tvo_lower(etas, s), up = tvo_upper(etas, s);
  const double lo_ref = static_cast<double>(0.5L * o.eta(0) + 0.5L * o.eta(0.5L));
  const double up_ref = static_cast<double>(0.5L * o.eta(0.5L) + 0.5L * o.eta(1));
  CHECK(lo == doctest::Approx(lo_ref).epsilon(1e-13));
  CHECK(up == doctest::Approx(up_ref).epsilon(1e-13));
  CHECK(std::abs(lo - -0.9865) < 5e-5);
  CHECK(std::abs(up - -0.8492) < 5e-5);
  CHECK(std::abs(exact_log_px(m) - -0.9163) < 5e-5);

  const auto gl = gap_decomposition_lower(m, s);
  const auto gu = gap_decomposition_upper(m, s);
  REQUIRE(gl.kl_terms.size() == 2);
  CHECK(gl.kl_terms[0] == doctest::Approx(static_cast<double>(o.kl(0, 0.5L))).epsilon(1e-12));
  CHECK(gl.kl_terms[1] == doctest::Approx(static_cast<double>(o.kl(0.5L, 1))).epsilon(1e-12));
  CHECK(gu.kl_terms[0] == doctest::Approx(static_cast<double>(o.kl(0.5L, 0))).epsilon(1e-12));
  CHECK(gu.kl_terms[1] == doctest::Approx(static_cast<double>(o.kl(1, 0.5L))).epsilon(1e-12));
  CHECK(std::abs(gl.kl_terms[0] - 0.0373) < 5e-5);
  CHECK(std::abs(gl.kl_terms[1] - 0.0330) < 5e-5);
  CHECK(std::abs(gl.gap - 0.0702) < 5e-5);
  CHECK(std::abs(gl.gap - gl.kl_sum()) < 1e-12);
  CHECK(std::abs(gu.gap - gu.kl_sum()) < 1e-12);
}

TEST_CASE("two-state divergence identities") {
  const auto& o = two_state_oracle();
  const ExactModel m = two_state_model();
  CHECK(conjugate_psi_star(m, 0.5) == doctest::Approx(static_cast<double>(o.kl(0.5L, 0))).epsilon(1e-12));
  CHECK(std::abs(conjugate_psi_star(m, 0.5) - 0.0363) < 5e-5);
  CHECK(std::abs(conjugate_psi_star(m, 1.0) - 0.1308) < 5e-5);
  CHECK(conjugate_psi_star(m, 0.0) == doctest::Approx(0.0).epsilon(1e-15));

  const auto rect = symm_kl_rectangle(m, 0.0, 1.0);
  CHECK(std::abs(rect.lhs - 0.2747) < 5e-5);
  CHECK(std::abs(rect.lhs - rect.rhs) < 1e-12);
  CHECK(rect.lhs == doctest::Approx(static_cast<double>(o.kl(0, 1) + o.kl(1, 0))).epsilon(1e-12));
  CHECK(std::abs(static_cast<double>(o.kl(0, 1)) - 0.1438) < 5e-5);

  for (double a : {0.0, 0.2, 0.7}) {
    for (double b : {0.1, 0.5, 1.0}) {
      CHECK(bregman_divergence(m, a, b) ==
            doctest::Approx(static_cast<double>(o.kl(a, b))).epsilon(1e-11).scale(1e-14));
      CHECK(kl_between_path_points(m, a, b) ==
            doctest::Approx(static_cast<double>(o.kl(a, b))).epsilon(1e-11).scale(1e-14));
      CHECK(dual_divergence_check(m, a, b) < 1e-12);
    }
  }

  const double fwd = kl_variance_integral(m, 0.0, 0.5, KlDirection::forward);
  CHECK(fwd == doctest::Approx(static_cast<double>(o.kl(0, 0.5L))).epsilon(1e-6));
  const double both = kl_variance_integral(m, 0.0, 1.0, KlDirection::forward) +
                      kl_variance_integral(m, 0.0, 1.0, KlDirection::reverse);
  CHECK(std::abs(both - rect.lhs) < 1e-7);
  CHECK(std::abs(fisher_information_integral(m, 0.0, 1.0) - rect.lhs) < 1e-7);
  CHECK(kl_variance_integral(m, 0.3, 0.3, KlDirection::reverse) == 0.0);
}

TEST_CASE("renyi objective") {
  const auto& o = two_state_oracle();
  const ExactModel m = two_state_model();
  CHECK(renyi_objective(m, 1.0) == doctest::Approx(exact_log_px(m)).epsilon(1e-14));
  CHECK(renyi_objective(m, 0.5) == doctest::Approx(static_cast<double>(2 * o.psi(0.5L))).epsilon(1e-13));
  CHECK(std::abs(renyi_objective(m, 0.5) - -0.9856) < 5e-5);
  CHECK(renyi_objective(m, 0.0) == doctest::Approx(static_cast<double>(o.eta(0))).epsilon(1e-13));
  CHECK(std::abs(renyi_objective(m, 1e-7) - renyi_objective(m, 0.0)) < 1e-6);

  // q equal to the posterior makes every order exact.
  const auto post = DiscreteLatentModel(std::vector<double>{0.25, 0.75}, std::vector<double>{0.1, 0.3});
  for (double b : {0.0, 0.3, 0.8, 1.0}) {
    CHECK(renyi_objective(ExactModel{post}, b) == doctest::Approx(std::log(0.4)).epsilon(1e-13));
  }
}

TEST_CASE("second-order objective") {
  const auto& o = two_state_oracle();
  const ExactModel m = two_state_model();
  const auto r = second_order_tvo(m, Schedule({0.0, 1.0}));
  const double ref = static_cast<double>(o.eta(0) + 0.5L * o.var(0));
  CHECK(r.value == doctest::Approx(ref).epsilon(1e-13));
  CHECK(std::abs(r.value - -0.9092) < 1e-4);
  CHECK(std::abs(static_cast<double>(o.var(0)) - 0.3017) < 5e-5);
  CHECK(r.value > exact_log_px(m));
  CHECK(r.value >= r.tvo_lower);

  const auto flat = second_order_tvo(ExactModel{harness::flat_discrete_model()}, linear_schedule(3));
  CHECK(flat.value == doctest::Approx(flat.tvo_lower).epsilon(1e-15));
  CHECK(flat.value == doctest::Approx(std::log(0.25)).epsilon(1e-14));

  std::mt19937_64 rng(41);
  for (int i = 0; i < 50; ++i) {
    const ExactModel model = harness::random_discrete_model(rng);
    const auto rep = second_order_tvo(model, harness::random_schedule(rng));
    CHECK(rep.value >= rep.tvo_lower);
    CHECK(rep.valid_lower_bound == (rep.max_third_derivative <= 0.0));
  }
}

TEST_CASE("asymptotic rate") {
  const ExactModel m = two_state_model();
  CHECK(std::abs(asymptotic_rate_limit(m) - 0.1373) < 5e-5);
  const std::size_t Ks[] = {8, 32, 128, 512};
  const auto pts = asymptotic_rate_check(m, Ks);
  REQUIRE(pts.size() == 4);
  const double limit = asymptotic_rate_limit(m);
  for (std::size_t i = 1; i < pts.size(); ++i) {
    CHECK(std::abs(pts[i].scaled_forward_kl - limit) < std::abs(pts[i - 1].scaled_forward_kl - limit));
  }
  CHECK(std::abs(pts.back().scaled_forward_kl - limit) / limit < 1e-3);

  const ExactModel mm = harness::mean_mismatch_datum();
  const double mm_limit = asymptotic_rate_limit(mm);
  CHECK(mm_limit > 0.1);
  const std::size_t Ks2[] = {1, 2, 3, 7, 64};
  for (const auto& p : asymptotic_rate_check(mm, Ks2)) {
    CHECK(p.scaled_forward_kl == doctest::Approx(mm_limit).epsilon(1e-10));
  }

  const ExactModel flat = harness::flat_discrete_model();
  CHECK(asymptotic_rate_limit(flat) == doctest::Approx(0.0).scale(1e-15));
  for (const auto& p : asymptotic_rate_check(flat, Ks)) CHECK(std::abs(p.scaled_forward_kl) < 1e-12);
}

TEST_CASE("flat integrand collapses every bound") {
  for (const ExactModel& m : {ExactModel{harness::flat_discrete_model()}, ExactModel{harness::flat_gaussian_datum()}}) {
    const double lpx = exact_log_px(m);
    for (std::size_t K : {1u, 4u, 9u}) {
      const auto rep = bound_report(m, linear_schedule(K));
      CHECK(rep.tvo_lower == doctest::Approx(lpx).epsilon(1e-12));
      CHECK(rep.tvo_upper == doctest::Approx(lpx).epsilon(1e-12));
      CHECK(std::abs(rep.gap_lower) < 1e-12);
      CHECK(std::abs(rep.gap_upper) < 1e-12);
    }
    CHECK(std::abs(symm_kl_rectangle(m, 0.0, 1.0).lhs) < 1e-12);
    CHECK(std::abs(kl_variance_integral(m, 0.0, 1.0, KlDirection::forward)) < 1e-12);
  }
}

TEST_CASE("gaussian bounds match the grid oracle") {
  std::mt19937_64 rng(42);
  for (int i = 0; i < 4; ++i) {
    const GaussianDatum d = harness::random_scalar_datum(rng);
    const oracle::LinearGaussian o{d.model.decoder_weight(), d.model.decoder_bias(), d.model.obs_stddev(),
                                   d.model.encoder_mean(), d.model.encoder_stddev(), d.x};
    const auto grid = oracle::make_grid(o, 6001);
    const oracle::GridPath path(o, grid);
    const ExactModel m = d;
    const Schedule s({0.0, 0.3, 0.55, 1.0});
    const auto gl = gap_decomposition_lower(m, s);
    for (std::size_t k = 1; k < s.betas().size(); ++k) {
      CHECK(gl.kl_terms[k - 1] ==
            doctest::Approx(static_cast<double>(path.kl(s[k - 1], s[k]))).epsilon(1e-7).scale(1e-10));
    }
    const double lo_ref = static_cast<double>(0.3L * path.eta(0) + 0.25L * path.eta(0.3) + 0.45L * path.eta(0.55));
    CHECK(tvo_lower(exact_etas(m, s), s) == doctest::Approx(lo_ref).epsilon(1e-8));
    CHECK(conjugate_psi_star(m, 0.6) ==
          doctest::Approx(static_cast<double>(path.kl(0.6, 0))).epsilon(1e-7).scale(1e-10));
    CHECK(renyi_objective(m, 0.4) == doctest::Approx(static_cast<double>(path.psi(0.4) / 0.4L)).epsilon(1e-8));
  }
}

TEST_CASE("sandwich and refinement over random models and schedules") {
  std::mt19937_64 rng(43);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 150; ++i) {
    const ExactModel m = i % 5 == 4 ? ExactModel{harness::random_gaussian_datum(rng, 1 + i % 3, 3)}
                                    : ExactModel{harness::random_discrete_model(rng)};
    const double lpx = exact_log_px(m);
    for (int j = 0; j < 6; ++j) {
      const Schedule s = harness::random_schedule(rng);
      const auto etas = exact_etas(m, s);
      const double lo = tvo_lower(etas, s), up = tvo_upper(etas, s);
      CHECK(lo <= lpx + 1e-12);
      CHECK(lpx <= up + 1e-12);
      const auto rep = bound_report(m, s);
      CHECK(rep.elbo == doctest::Approx(exact_eta(m, 0.0)).epsilon(1e-15));
      CHECK(rep.eubo == doctest::Approx(exact_eta(m, 1.0)).epsilon(1e-15));
      CHECK(rep.elbo <= lo + 1e-12);
      CHECK(up <= rep.eubo + 1e-12);
      CHECK(std::abs(gap_decomposition_lower(m, s).gap - gap_decomposition_lower(m, s).kl_sum()) < 1e-9);
      CHECK(std::abs(gap_decomposition_upper(m, s).gap - gap_decomposition_upper(m, s).kl_sum()) < 1e-9);

      double b = u(rng);
      if (std::find(s.betas().begin(), s.betas().end(), b) != s.betas().end()) continue;
      const Schedule r = s.refined(b);
      const auto re = exact_etas(m, r);
      CHECK(tvo_lower(re, r) >= lo - 1e-12);
      CHECK(tvo_upper(re, r) <= up + 1e-12);
    }
  }
}

TEST_CASE("snis bound report") {
  const LogWeightGrid grid(3, 2, {-1.0, -2.0, 0.0, -1.5, -0.5, -1.0});
  const auto rep = bound_report(grid, linear_schedule(4));
  CHECK_FALSE(rep.log_px.has_value());
  CHECK(rep.tvo_lower <= rep.tvo_upper);
  CHECK(rep.elbo == doctest::Approx((-0.5 + -1.5) / 2.0).epsilon(1e-14));
  const auto iw = iwae_bound(grid);
  const double iwae = (iw[0] + iw[1]) / 2.0;
  CHECK(rep.tvo_lower <= iwae + 1e-12);
  CHECK(iwae <= rep.tvo_upper + 1e-12);
  CHECK(rep.per_interval_kl_forward.size() == 4);
  CHECK(rep.per_interval_kl_reverse.size() == 4);

  nlohmann::json j = rep;
  CHECK(j.contains("tvo_lower"));
  CHECK(j["log_px"].is_null());
  CHECK(j["per_interval_kl_forward"].size() == 4);
}
