#include "tvo/quadrature.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <stdexcept>

using namespace tvo;

TEST_CASE("linspace endpoints and spacing") {
  const auto v = linspace(0.0, 1.0, 201);
  REQUIRE(v.size() == 201);
  CHECK(v.front() == 0.0);
  CHECK(v.back() == 1.0);
  CHECK(v[100] == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("simpson is exact for quadratics on uneven grids") {
  const std::vector<double> xs = {0.0, 0.1, 0.35, 0.4, 0.7, 0.75, 1.0};
  std::vector<double> ys;
  for (double x : xs) ys.push_back(-x * x + 3 * x - 1);
  CHECK(simpson(xs, ys) == doctest::Approx(-1.0 / 3.0 + 1.5 - 1.0).epsilon(1e-13));
  const auto even = linspace(0.0, 1.0, 7);
  std::vector<double> cubic;
  for (double x : even) cubic.push_back(2 * x * x * x - x * x);
  CHECK(simpson(even, cubic) == doctest::Approx(0.5 - 1.0 / 3.0).epsilon(1e-13));
  const std::vector<double> odd = {0.0, 0.2, 0.5, 0.6, 1.0};
  std::vector<double> yo;
  for (double x : odd) yo.push_back(x * x);
  CHECK(simpson(odd, yo) == doctest::Approx(1.0 / 3.0).epsilon(1e-13));
}

TEST_CASE("simpson converges on smooth functions") {
  const double v = simpson([](double x) { return std::exp(x); }, 0.0, 1.0, 1001);
  CHECK(std::abs(v - (std::numbers::e - 1.0)) < 1e-12);
  CHECK_THROWS_AS(simpson([](double x) { return x; }, 0.0, 1.0, 4), std::invalid_argument);
}

TEST_CASE("gauss-hermite integrates normal moments") {
  const QuadratureRule r = gauss_hermite(64);
  double s0 = 0, s2 = 0, s4 = 0, s6 = 0, odd = 0;
  for (std::size_t i = 0; i < r.nodes.size(); ++i) {
    const double x = r.nodes[i], w = r.weights[i];
    s0 += w;
    s2 += w * x * x;
    s4 += w * std::pow(x, 4);
    s6 += w * std::pow(x, 6);
    odd += w * x * x * x;
    if (i > 0) CHECK(r.nodes[i] > r.nodes[i - 1]);
  }
  CHECK(s0 == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(s2 == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(s4 == doctest::Approx(3.0).epsilon(1e-13));
  CHECK(s6 == doctest::Approx(15.0).epsilon(1e-12));
  CHECK(std::abs(odd) < 1e-13);
  // E[exp(a z)] = exp(a^2 / 2)
  double mgf = 0;
  for (std::size_t i = 0; i < r.nodes.size(); ++i) mgf += r.weights[i] * std::exp(0.8 * r.nodes[i]);
  CHECK(mgf == doctest::Approx(std::exp(0.32)).epsilon(1e-14));
}
