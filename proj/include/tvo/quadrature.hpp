#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace tvo {

std::vector<double> linspace(double lo, double hi, std::size_t n);

// Composite Simpson over arbitrary sorted abscissae. Uneven panels use the
// three-point Lagrange weights; an odd interval count closes with the standard
// end correction. Needs at least 3 points.
double simpson(std::span<const double> xs, std::span<const double> ys);

// Composite Simpson of f on [lo, hi] with n (odd, >= 3) evenly spaced points.
double simpson(const std::function<double(double)>& f, double lo, double hi, std::size_t n);

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;  // sum to one
};

// Gauss-Hermite rule for expectations under a standard normal.
QuadratureRule gauss_hermite(std::size_t n);

}  // namespace tvo
