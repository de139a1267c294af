#include "tvo/harness/battery.hpp"
#include "tvo/path_models.hpp"
#include "tvo/snis.hpp"

#include <doctest.h>

#include <bit>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

using namespace tvo;

namespace {

LogWeightGrid column(std::vector<double> v) { return LogWeightGrid::from_columns({std::move(v)}); }

LogWeightGrid random_grid(std::mt19937_64& rng, std::size_t S, std::size_t N, double scale = 2.0) {
  std::normal_distribution<double> normal(-1.0, scale);
  std::vector<double> v(S * N);
  for (auto& x : v) x = normal(rng);
  return LogWeightGrid(S, N, std::move(v));
}

// Rows replicate discrete states in proportion to integer q counts.
LogWeightGrid exhaustive(const DiscreteLatentModel& m, const std::vector<int>& counts) {
  std::vector<double> col;
  for (std::size_t s = 0; s < counts.size(); ++s) {
    for (int c = 0; c < counts[s]; ++c) col.push_back(m.log_w()[s]);
  }
  return column(col);
}

}  // namespace

TEST_CASE("normalization examples") {
  const auto two = column({0.0, std::log(2.0)});
  const auto w = snis_normalize(two, 1.0);
  CHECK(w.at(0, 0) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(w.at(1, 0) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  const auto u = snis_normalize(two, 0.0);
  CHECK(u.at(0, 0) == 0.5);
  CHECK(u.at(1, 0) == 0.5);
  const auto flat = snis_normalize(column({-3.0, -3.0, -3.0, -3.0}), 2.7);
  for (std::size_t i = 0; i < 4; ++i) CHECK(flat.at(i, 0) == 0.25);
}

TEST_CASE("eta, var and iwae examples") {
  const auto two = column({0.0, std::log(2.0)});
  const double eta = 2.0 / 3.0 * std::log(2.0);
  CHECK(snis_eta(two, 1.0)[0] == doctest::Approx(eta).epsilon(1e-15));
  CHECK(snis_eta(two, 1.0)[0] == doctest::Approx(0.4621).epsilon(1e-4));
  const double var = (1.0 / 3.0) * eta * eta + (2.0 / 3.0) * (std::log(2.0) - eta) * (std::log(2.0) - eta);
  CHECK(snis_var(two, 1.0)[0] == doctest::Approx(var).epsilon(1e-14));
  CHECK(snis_var(two, 1.0)[0] == doctest::Approx(0.1068).epsilon(1e-3));
  CHECK(iwae_bound(two)[0] == doctest::Approx(std::log(1.5)).epsilon(1e-15));
  CHECK(iwae_bound(column({-2.5}))[0] == -2.5);
  const auto c = column({1.25, 1.25, 1.25});
  for (double beta : {0.0, 0.5, 3.0}) {
    CHECK(snis_eta(c, beta)[0] == doctest::Approx(1.25).epsilon(1e-15));
    CHECK(snis_var(c, beta)[0] == 0.0);
  }
}

TEST_CASE("beta zero gives column means") {
  std::mt19937_64 rng(21);
  const auto g = random_grid(rng, 50, 7);
  const auto eta = snis_eta(g, 0.0);
  for (std::size_t j = 0; j < 7; ++j) {
    double mean = 0;
    for (std::size_t i = 0; i < 50; ++i) mean += g.at(i, j);
    CHECK(eta[j] == doctest::Approx(mean / 50).epsilon(1e-13));
  }
}

TEST_CASE("weights are probability columns") {
  std::mt19937_64 rng(22);
  for (int trial = 0; trial < 20; ++trial) {
    const auto g = random_grid(rng, 1 + trial * 7, 1 + trial % 9, 30.0);
    for (double beta : {0.0, 0.5, 1.0, 4.0}) {
      const auto w = snis_normalize(g, beta);
      for (std::size_t j = 0; j < g.datapoints(); ++j) {
        double s = 0;
        for (std::size_t i = 0; i < g.samples(); ++i) {
          CHECK(w.at(i, j) >= 0.0);
          s += w.at(i, j);
        }
        CHECK(std::abs(s - 1.0) <= 1e-10);
      }
      for (double v : snis_var(g, beta)) CHECK(v >= 0.0);
    }
  }
}

TEST_CASE("translation robustness") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> shift(-50.0, 50.0);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t S = 20, N = 6;
    const auto g = random_grid(rng, S, N);
    std::vector<double> shifted(g.data().begin(), g.data().end());
    std::vector<double> c(N);
    for (auto& v : c) v = shift(rng);
    for (std::size_t i = 0; i < S; ++i) {
      for (std::size_t j = 0; j < N; ++j) shifted[i * N + j] += c[j];
    }
    const LogWeightGrid h(S, N, shifted);
    for (double beta : {0.0, 0.7, 1.0}) {
      const auto e0 = snis_eta(g, beta), e1 = snis_eta(h, beta);
      const auto v0 = snis_var(g, beta), v1 = snis_var(h, beta);
      const auto w0 = snis_normalize(g, beta), w1 = snis_normalize(h, beta);
      for (std::size_t j = 0; j < N; ++j) {
        CHECK(e1[j] - c[j] == doctest::Approx(e0[j]).epsilon(1e-11).scale(1));
        CHECK(v1[j] == doctest::Approx(v0[j]).epsilon(1e-9).scale(1));
      }
      for (std::size_t k = 0; k < S * N; ++k) {
        CHECK(w1.normalized[k] == doctest::Approx(w0.normalized[k]).epsilon(1e-11).scale(1e-12));
      }
    }
  }
}

TEST_CASE("snis eta is nondecreasing and tends to the column max") {
  std::mt19937_64 rng(24);
  const auto g = random_grid(rng, 40, 5);
  std::vector<double> prev(5, -std::numeric_limits<double>::infinity());
  for (int k = 0; k <= 200; ++k) {
    const auto e = snis_eta(g, 0.05 * k);
    for (std::size_t j = 0; j < 5; ++j) {
      CHECK(e[j] >= prev[j] - 1e-14 * std::abs(prev[j]));
      prev[j] = e[j];
    }
  }
  const auto far = snis_eta(g, 1e4);
  for (std::size_t j = 0; j < 5; ++j) {
    double mx = -INFINITY;
    for (std::size_t i = 0; i < 40; ++i) mx = std::max(mx, g.at(i, j));
    CHECK(far[j] == doctest::Approx(mx).epsilon(1e-10));
  }
}

TEST_CASE("exhaustive sampling reproduces exact moments") {
  std::mt19937_64 rng(25);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t M = 2 + trial % 9;
    std::vector<double> q(M, 1.0 / static_cast<double>(M)), p(M);
    for (auto& v : p) v = std::exp(normal(rng));
    const DiscreteLatentModel m(q, p);
    const auto g = exhaustive(m, std::vector<int>(M, 1));
    for (double beta : {0.0, 0.3, 1.0}) {
      CHECK(snis_eta(g, beta)[0] == doctest::Approx(exact_eta(m, beta)).epsilon(1e-12).scale(1));
      CHECK(snis_var(g, beta)[0] == doctest::Approx(exact_var(m, beta)).epsilon(1e-12).scale(1));
    }
    CHECK(iwae_bound(g)[0] == doctest::Approx(m.log_px()).epsilon(1e-12).scale(1));
  }
  // Non-uniform q by replicating atoms in proportion to q.
  const double q[] = {0.25, 0.75};
  const double p[] = {0.2, 0.05};
  const DiscreteLatentModel m(q, p);
  const auto g = exhaustive(m, {1, 3});
  for (double beta : {0.0, 0.5, 1.0}) {
    CHECK(snis_eta(g, beta)[0] == doctest::Approx(exact_eta(m, beta)).epsilon(1e-12));
    CHECK(snis_var(g, beta)[0] == doctest::Approx(exact_var(m, beta)).epsilon(1e-12));
  }
  CHECK(iwae_bound(g)[0] == doctest::Approx(std::log(0.25)).epsilon(1e-14));
}

TEST_CASE("columns are evaluated independently") {
  std::mt19937_64 rng(26);
  const auto g = random_grid(rng, 33, 11);
  const auto eta = snis_eta(g, 0.6);
  const auto var = snis_var(g, 0.6);
  for (std::size_t j = 0; j < 11; ++j) {
    std::vector<double> col;
    for (std::size_t i = 0; i < 33; ++i) col.push_back(g.at(i, j));
    const auto one = column(col);
    CHECK(std::bit_cast<std::uint64_t>(snis_eta(one, 0.6)[0]) == std::bit_cast<std::uint64_t>(eta[j]));
    CHECK(std::bit_cast<std::uint64_t>(snis_var(one, 0.6)[0]) == std::bit_cast<std::uint64_t>(var[j]));
  }
}

TEST_CASE("grid validation") {
  CHECK_THROWS_AS(LogWeightGrid(0, 1, {}), std::invalid_argument);
  CHECK_THROWS_AS(LogWeightGrid(1, 0, {}), std::invalid_argument);
  CHECK_THROWS_AS(LogWeightGrid(2, 1, {0.0}), std::invalid_argument);
  CHECK_THROWS_AS(LogWeightGrid(2, 1, {0.0, std::nan("")}), std::invalid_argument);
  CHECK_THROWS_AS(LogWeightGrid(1, 1, {INFINITY}), std::invalid_argument);
  CHECK_THROWS_AS(snis_eta(column({0.0, 1.0}), -0.5), std::invalid_argument);
}

TEST_CASE("csv round trip is exact") {
  std::mt19937_64 rng(27);
  for (int trial = 0; trial < 25; ++trial) {
    const auto g = random_grid(rng, 1 + trial % 13, 1 + trial % 5, 100.0);
    std::stringstream ss;
    write_csv(ss, g);
    const auto back = read_log_weight_csv(ss);
    REQUIRE(back.samples() == g.samples());
    REQUIRE(back.datapoints() == g.datapoints());
    for (std::size_t k = 0; k < g.data().size(); ++k) {
      CHECK(std::bit_cast<std::uint64_t>(back.data()[k]) == std::bit_cast<std::uint64_t>(g.data()[k]));
    }
  }
  std::stringstream ragged("1,2\n3\n");
  CHECK_THROWS_AS(read_log_weight_csv(ragged), std::invalid_argument);
  std::stringstream junk("1,abc\n");
  CHECK_THROWS_AS(read_log_weight_csv(junk), std::invalid_argument);
}
