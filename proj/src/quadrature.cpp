#include "tvo/quadrature.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace tvo {

std::vector<double> linspace(double lo, double hi, std::size_t n) {
  if (n == 0) return {};
  if (n == 1) return {lo};
  std::vector<double> out(n);
  const double step = (hi - lo) / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) out[i] = lo + step * static_cast<double>(i);
  out.back() = hi;
  return out;
}

double simpson(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw std::invalid_argument("simpson: size mismatch");
  const std::size_t n = xs.size();
  if (n < 3) throw std::invalid_argument("simpson: need at least 3 points");

  const std::size_t intervals = n - 1;
  const std::size_t paired = intervals - intervals % 2;
  double total = 0.0;
  for (std::size_t i = 0; i < paired; i += 2) {
    const double h0 = xs[i + 1] - xs[i];
    const double h1 = xs[i + 2] - xs[i + 1];
    const double s = h0 + h1;
    total += s / 6.0 *
             ((2.0 - h1 / h0) * ys[i] + s * s / (h0 * h1) * ys[i + 1] + (2.0 - h0 / h1) * ys[i + 2]);
  }
  if (intervals % 2 == 1) {
    const double h = xs[n - 1] - xs[n - 2];
    const double hp = xs[n - 2] - xs[n - 3];
    const double a = (2.0 * h * h + 3.0 * h * hp) / (6.0 * (hp + h));
    const double b = (h * h + 3.0 * h * hp) / (6.0 * hp);
    const double c = h * h * h / (6.0 * hp * (hp + h));
    total += a * ys[n - 1] + b * ys[n - 2] - c * ys[n - 3];
  }
  return total;
}

double simpson(const std::function<double(double)>& f, double lo, double hi, std::size_t n) {
  if (n < 3 || n % 2 == 0) throw std::invalid_argument("simpson: need an odd count >= 3");
  const double h = (hi - lo) / static_cast<double>(n - 1);
  double odd = 0.0;
  double even = 0.0;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double v = f(lo + h * static_cast<double>(i));
    (i % 2 == 1 ? odd : even) += v;
  }
  return h / 3.0 * (f(lo) + 4.0 * odd + 2.0 * even + f(hi));
}

QuadratureRule gauss_hermite(std::size_t n) {
  if (n == 0) throw std::invalid_argument("gauss_hermite: n must be positive");
  // Newton iteration on orthonormal physicists' Hermite polynomials, then map
  // nodes and weights to the standard normal measure.
  std::vector<double> x(n);
  std::vector<double> w(n);
  const double pim4 = std::pow(std::numbers::pi, -0.25);
  const std::size_t half = (n + 1) / 2;
  const double nd = static_cast<double>(n);
  double z = 0.0;
  for (std::size_t i = 0; i < half; ++i) {
    if (i == 0) {
      z = std::sqrt(2.0 * nd + 1.0) - 1.85575 * std::pow(2.0 * nd + 1.0, -0.16667);
    } else if (i == 1) {
      z -= 1.14 * std::pow(nd, 0.426) / z;
    } else if (i == 2) {
      z = 1.86 * z - 0.86 * x[0];
    } else if (i == 3) {
      z = 1.91 * z - 0.91 * x[1];
    } else {
      z = 2.0 * z - x[i - 2];
    }
    double pp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p1 = pim4;
      double p2 = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        const double p3 = p2;
        p2 = p1;
        const double jd = static_cast<double>(j);
        p1 = z * std::sqrt(2.0 / (jd + 1.0)) * p2 - std::sqrt(jd / (jd + 1.0)) * p3;
      }
      pp = std::sqrt(2.0 * nd) * p2;
      const double z1 = z;
      z = z1 - p1 / pp;
      if (std::abs(z - z1) <= 1e-15 * std::max(1.0, std::abs(z))) break;
    }
    x[i] = z;
    x[n - 1 - i] = -z;
    w[i] = 2.0 / (pp * pp);
    w[n - 1 - i] = w[i];
  }
  QuadratureRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const double scale = 1.0 / std::sqrt(std::numbers::pi);
  // Ascending order.
  for (std::size_t i = 0; i < n; ++i) {
    rule.nodes[i] = std::numbers::sqrt2 * x[n - 1 - i];
    rule.weights[i] = w[n - 1 - i] * scale;
  }
  return rule;
}

}  // namespace tvo
