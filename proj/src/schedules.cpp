#include "tvo/schedules.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace tvo {
namespace {

double monotone_slack(double a, double b) {
  return 1e-12 * std::max({1.0, std::abs(a), std::abs(b)});
}

}  // namespace

Schedule::Schedule(std::vector<double> betas) : betas_(std::move(betas)) {
  if (betas_.size() < 2) throw std::invalid_argument("schedule: need K >= 1");
  if (betas_.front() != 0.0 || betas_.back() != 1.0)
    throw std::invalid_argument("schedule: must start at 0 and end at 1");
  for (std::size_t k = 1; k < betas_.size(); ++k) {
    if (!(betas_[k] > betas_[k - 1]))
      throw std::invalid_argument("schedule: betas must be strictly increasing");
  }
}

Schedule Schedule::refined(double beta) const {
  if (!(beta > 0.0 && beta < 1.0)) throw std::invalid_argument("schedule: refine outside (0, 1)");
  std::vector<double> out(betas_);
  auto it = std::lower_bound(out.begin(), out.end(), beta);
  if (it != out.end() && *it == beta) throw std::invalid_argument("schedule: point already present");
  out.insert(it, beta);
  return Schedule(std::move(out));
}

EtaEvaluator EtaEvaluator::exact(ExactModel model) {
  return EtaEvaluator([m = std::move(model)](double beta) { return exact_eta(m, beta); });
}

EtaEvaluator EtaEvaluator::snis(LogWeightGrid grid) {
  return EtaEvaluator([g = std::move(grid)](double beta) { return snis_pooled_eta(g, beta); });
}

Schedule linear_schedule(std::size_t K) {
  if (K == 0) throw std::invalid_argument("linear schedule: K must be >= 1");
  std::vector<double> b(K + 1);
  for (std::size_t k = 0; k <= K; ++k) b[k] = static_cast<double>(k) / static_cast<double>(K);
  return Schedule(std::move(b));
}

Schedule log_uniform_schedule(std::size_t K, double beta1) {
  if (K < 2) throw std::invalid_argument("log-uniform schedule: K must be >= 2");
  if (!(beta1 > 0.0 && beta1 < 1.0))
    throw std::invalid_argument("log-uniform schedule: beta1 must lie in (0, 1)");
  std::vector<double> b(K + 1);
  b[0] = 0.0;
  const double log_b1 = std::log(beta1);
  const double steps = static_cast<double>(K - 1);
  for (std::size_t k = 1; k < K; ++k) {
    b[k] = std::exp(log_b1 * static_cast<double>(K - k) / steps);
  }
  b[1] = beta1;
  b[K] = 1.0;
  return Schedule(std::move(b));
}

MomentsResult moments_schedule(const EtaEvaluator& eval, std::size_t K,
                               const MomentsOptions& options) {
  if (K == 0) throw std::invalid_argument("moments schedule: K must be >= 1");
  const double eta0 = eval(0.0);
  const double eta1 = eval(1.0);
  const double span = eta1 - eta0;
  if (span < -monotone_slack(eta0, eta1))
    throw std::invalid_argument("moments schedule: evaluator is not monotone (eta(1) < eta(0))");

  std::vector<double> targets(K + 1);
  for (std::size_t k = 0; k <= K; ++k) {
    const double t = static_cast<double>(k) / static_cast<double>(K);
    targets[k] = (1.0 - t) * eta0 + t * eta1;
  }
  const double tol = options.absolute_tol.value_or(options.relative_tol * span);
  if (options.absolute_tol && !(tol > 0.0))
    throw std::invalid_argument("moments schedule: tolerance must be positive");

  if (span <= monotone_slack(eta0, eta1)) {
    return {linear_schedule(K), std::move(targets), tol, true, true};
  }

  std::vector<double> betas(K + 1, 0.0);
  betas[K] = 1.0;
  bool converged = true;
  double lo_start = 0.0;
  double eta_lo_start = eta0;
  for (std::size_t k = 1; k < K; ++k) {
    const double target = targets[k];
    double lo = lo_start;
    double hi = 1.0;
    double eta_lo = eta_lo_start;
    double eta_hi = eta1;
    double mid = 0.5 * (lo + hi);
    double eta_mid = 0.0;
    bool hit = false;
    for (int it = 0; it < options.max_iter; ++it) {
      mid = 0.5 * (lo + hi);
      eta_mid = eval(mid);
      if (eta_mid < eta_lo - monotone_slack(eta_mid, eta_lo) ||
          eta_mid > eta_hi + monotone_slack(eta_mid, eta_hi)) {
        throw std::invalid_argument("moments schedule: evaluator is not monotone at beta = " +
                                    std::to_string(mid));
      }
      if (std::abs(eta_mid - target) <= tol) {
        hit = true;
        break;
      }
      if (eta_mid < target) {
        lo = mid;
        eta_lo = eta_mid;
      } else {
        hi = mid;
        eta_hi = eta_mid;
      }
    }
    if (!hit) {
      mid = 0.5 * (lo + hi);
      eta_mid = eval(mid);
      converged = false;
    }
    betas[k] = mid;
    // The next target is larger, so its root cannot lie below this one.
    lo_start = mid;
    eta_lo_start = eta_mid;
  }

  for (std::size_t k = 1; k < K; ++k) {
    if (betas[k] <= betas[k - 1]) betas[k] = betas[k - 1] + kDuplicateNudge;
  }
  for (std::size_t k = K - 1; k >= 1; --k) {
    if (betas[k] >= betas[k + 1]) betas[k] = betas[k + 1] - kDuplicateNudge;
  }
  return {Schedule(std::move(betas)), std::move(targets), tol, converged, false};
}

std::vector<std::size_t> largest_remainder(std::span<const double> costs, std::size_t total) {
  std::vector<std::size_t> seats(costs.size(), 0);
  double sum = 0.0;
  for (double c : costs) {
    if (!(c >= 0.0)) throw std::invalid_argument("largest remainder: negative cost");
    sum += c;
  }
  if (sum <= 0.0) return seats;
  std::vector<double> rem(costs.size());
  std::size_t given = 0;
  for (std::size_t j = 0; j < costs.size(); ++j) {
    const double quota = static_cast<double>(total) * costs[j] / sum;
    seats[j] = static_cast<std::size_t>(std::floor(quota));
    rem[j] = quota - static_cast<double>(seats[j]);
    given += seats[j];
  }
  std::vector<std::size_t> order(costs.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return rem[a] > rem[b]; });
  for (std::size_t i = 0; given < total; i = (i + 1) % order.size()) {
    ++seats[order[i]];
    ++given;
  }
  return seats;
}

Schedule coarse_grained_schedule(const EtaEvaluator& eval, std::size_t K, std::size_t J) {
  if (J == 0 || K < J) throw std::invalid_argument("coarse-grained schedule: need K >= J >= 1");
  std::vector<double> knots(J + 1);
  std::vector<double> etas(J + 1);
  for (std::size_t j = 0; j <= J; ++j) {
    knots[j] = static_cast<double>(j) / static_cast<double>(J);
    etas[j] = eval(knots[j]);
  }
  if (etas[J] < etas[0] - monotone_slack(etas[0], etas[J]))
    throw std::invalid_argument("coarse-grained schedule: evaluator is not monotone");
  std::vector<double> costs(J);
  for (std::size_t j = 0; j < J; ++j) {
    const double de = etas[j + 1] - etas[j];
    if (de < -monotone_slack(etas[j], etas[j + 1]))
      throw std::invalid_argument("coarse-grained schedule: evaluator is not monotone");
    costs[j] = std::sqrt((knots[j + 1] - knots[j]) * std::max(de, 0.0));
  }
  const auto seats = largest_remainder(costs, K);
  if (std::accumulate(seats.begin(), seats.end(), std::size_t{0}) != K) return linear_schedule(K);

  // An interval with no budget is absorbed by the next funded interval; trailing
  // unfunded intervals extend the last funded one to beta = 1.
  std::size_t last_funded = 0;
  for (std::size_t j = 0; j < J; ++j) {
    if (seats[j] > 0) last_funded = j;
  }
  std::vector<double> betas{0.0};
  double start = 0.0;
  for (std::size_t j = 0; j < J; ++j) {
    if (seats[j] == 0) continue;
    const double end = j == last_funded ? 1.0 : knots[j + 1];
    const double n = static_cast<double>(seats[j]);
    for (std::size_t i = 1; i <= seats[j]; ++i) {
      betas.push_back(i == seats[j] ? end : start + (end - start) * static_cast<double>(i) / n);
    }
    start = end;
  }
  return Schedule(std::move(betas));
}

}  // namespace tvo
