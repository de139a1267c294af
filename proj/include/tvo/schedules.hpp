#pragma once

// Partitions 0 = beta_0 < beta_1 < ... < beta_K = 1 of the unit interval.

#include "tvo/path_models.hpp"
#include "tvo/snis.hpp"

#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace tvo {

class Schedule {
 public:
  // Requires K >= 1, betas[0] = 0, betas[K] = 1, strictly increasing.
  explicit Schedule(std::vector<double> betas);

  std::span<const double> betas() const { return betas_; }
  std::size_t intervals() const { return betas_.size() - 1; }
  double operator[](std::size_t k) const { return betas_[k]; }

  // Copy with one extra point inserted; the point must lie strictly inside an interval.
  Schedule refined(double beta) const;

 private:
  std::vector<double> betas_;
};

// Maps beta in [0, 1] to a pooled eta estimate. Callers rely on it being
// nondecreasing; the schedule builders check that at every probe.
class EtaEvaluator {
 public:
  explicit EtaEvaluator(std::function<double(double)> fn) : fn_(std::move(fn)) {}

  static EtaEvaluator exact(ExactModel model);
  // Batch mean of snis_eta over the grid's datapoints.
  static EtaEvaluator snis(LogWeightGrid grid);

  double operator()(double beta) const { return fn_(beta); }

 private:
  std::function<double(double)> fn_;
};

Schedule linear_schedule(std::size_t K);

// beta_1 .. beta_K geometric from beta1 to 1.
Schedule log_uniform_schedule(std::size_t K, double beta1);

struct MomentsOptions {
  // Absolute eta tolerance; when unset the tolerance is relative_tol * (eta(1) - eta(0)).
  std::optional<double> absolute_tol;
  double relative_tol = 1e-3;
  int max_iter = 60;

  // The fixed 0.1-nat threshold of the original reference code.
  static MomentsOptions reference_threshold() { return {0.1, 1e-3, 60}; }
};

struct MomentsResult {
  Schedule schedule;
  std::vector<double> targets;  // K + 1 eta targets, equally spaced
  double tolerance = 0.0;       // absolute tolerance actually used
  bool converged = true;        // false if any bisection ran out of iterations
  bool flat = false;            // eta(1) == eta(0); linear spacing returned
};

constexpr double kDuplicateNudge = 1e-9;

// Inverts eta by bisection so that eta(beta_k) is equally spaced between eta(0)
// and eta(1). Throws std::invalid_argument if eta(1) < eta(0) or a probe
// contradicts monotonicity.
MomentsResult moments_schedule(const EtaEvaluator& eval, std::size_t K,
                               const MomentsOptions& options = {});

constexpr std::size_t kDefaultKnots = 20;

// J equal-width knot intervals; interval j receives K_j ∝ sqrt(dbeta_j * deta_j)
// points (largest-remainder rounding), spaced linearly inside the interval.
// Falls back to linear_schedule(K) when every cost is zero. Requires K >= J >= 1.
Schedule coarse_grained_schedule(const EtaEvaluator& eval, std::size_t K,
                                 std::size_t J = kDefaultKnots);

// Largest-remainder apportionment of `total` seats over nonnegative costs.
// Ties go to the lower index. All-zero costs yield all-zero seats.
std::vector<std::size_t> largest_remainder(std::span<const double> costs, std::size_t total);

}  // namespace tvo
