#include "tvo/bounds.hpp"

#include "tvo/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace tvo {
namespace {

void require_matching(std::span<const double> etas, const Schedule& schedule) {
  if (etas.size() != schedule.betas().size())
    throw std::invalid_argument("tvo bound: need one eta per schedule point");
}

std::vector<double> discrete_log_pi(const DiscreteLatentModel& model, double beta) {
  const double psi = exact_psi(model, beta);
  const auto lq = model.log_q();
  const auto lw = model.log_w();
  std::vector<double> out(lq.size());
  for (std::size_t m = 0; m < lq.size(); ++m) out[m] = lq[m] + beta * lw[m] - psi;
  return out;
}

double discrete_kl(const DiscreteLatentModel& model, double a, double b) {
  const auto la = discrete_log_pi(model, a);
  const auto lb = discrete_log_pi(model, b);
  double kl = 0.0;
  for (std::size_t m = 0; m < la.size(); ++m) kl += std::exp(la[m]) * (la[m] - lb[m]);
  return kl;
}

}  // namespace

double tvo_lower(std::span<const double> etas, const Schedule& schedule) {
  require_matching(etas, schedule);
  const auto b = schedule.betas();
  double total = 0.0;
  for (std::size_t k = 1; k < b.size(); ++k) total += (b[k] - b[k - 1]) * etas[k - 1];
  return total;
}

double tvo_upper(std::span<const double> etas, const Schedule& schedule) {
  require_matching(etas, schedule);
  const auto b = schedule.betas();
  double total = 0.0;
  for (std::size_t k = 1; k < b.size(); ++k) total += (b[k] - b[k - 1]) * etas[k];
  return total;
}

std::vector<double> exact_etas(const ExactModel& model, const Schedule& schedule) {
  std::vector<double> out;
  out.reserve(schedule.betas().size());
  for (double b : schedule.betas()) out.push_back(exact_eta(model, b));
  return out;
}

double kl_between_path_points(const ExactModel& model, double beta_a, double beta_b) {
  return std::visit(
      [&](const auto& m) -> double {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, DiscreteLatentModel>) {
          return discrete_kl(m, beta_a, beta_b);
        } else if constexpr (std::is_same_v<T, GaussianDatum>) {
          return gaussian_kl(gaussian_path_distribution(m.model, m.x, beta_a),
                             gaussian_path_distribution(m.model, m.x, beta_b));
        } else {
          throw std::invalid_argument("kl_between_path_points: unsupported model kind");
        }
      },
      model);
}

double bregman_divergence(const ExactModel& model, double beta_a, double beta_b) {
  const PathMoments a = exact_moments(model, beta_a);
  return exact_psi(model, beta_b) - a.psi - (beta_b - beta_a) * a.eta;
}

double GapDecomposition::kl_sum() const {
  double s = 0.0;
  for (double v : kl_terms) s += v;
  return s;
}

GapDecomposition gap_decomposition_lower(const ExactModel& model, const Schedule& schedule) {
  const auto etas = exact_etas(model, schedule);
  const auto b = schedule.betas();
  GapDecomposition out;
  out.gap = exact_log_px(model) - tvo_lower(etas, schedule);
  out.kl_terms.reserve(schedule.intervals());
  for (std::size_t k = 1; k < b.size(); ++k)
    out.kl_terms.push_back(kl_between_path_points(model, b[k - 1], b[k]));
  return out;
}

GapDecomposition gap_decomposition_upper(const ExactModel& model, const Schedule& schedule) {
  const auto etas = exact_etas(model, schedule);
  const auto b = schedule.betas();
  GapDecomposition out;
  out.gap = tvo_upper(etas, schedule) - exact_log_px(model);
  out.kl_terms.reserve(schedule.intervals());
  for (std::size_t k = 1; k < b.size(); ++k)
    out.kl_terms.push_back(kl_between_path_points(model, b[k], b[k - 1]));
  return out;
}

double conjugate_psi_star(const ExactModel& model, double beta) {
  const PathMoments m = exact_moments(model, beta);
  return beta * m.eta - m.psi;
}

double dual_divergence_check(const ExactModel& model, double beta_a, double beta_b) {
  const double direct = kl_between_path_points(model, beta_b, beta_a);
  const PathMoments a = exact_moments(model, beta_a);
  const PathMoments b = exact_moments(model, beta_b);
  const double primal = a.psi - b.psi - (beta_a - beta_b) * b.eta;
  const double psi_star_b = kl_between_path_points(model, beta_b, 0.0);
  const double dual = psi_star_b + a.psi - b.eta * beta_a;
  return std::max(std::abs(direct - primal), std::abs(direct - dual));
}

RectangleSides symm_kl_rectangle(const ExactModel& model, double beta_a, double beta_b) {
  RectangleSides out;
  out.lhs = kl_between_path_points(model, beta_a, beta_b) +
            kl_between_path_points(model, beta_b, beta_a);
  out.rhs = (beta_b - beta_a) * (exact_eta(model, beta_b) - exact_eta(model, beta_a));
  return out;
}

double kl_variance_integral(const ExactModel& model, double beta_a, double beta_b,
                            KlDirection direction, std::size_t points) {
  if (points < 3) throw std::invalid_argument("kl_variance_integral: need at least 3 points");
  if (points % 2 == 0) ++points;
  if (beta_a == beta_b) return 0.0;
  const auto weight = [&](double beta) {
    return direction == KlDirection::forward ? beta_b - beta : beta - beta_a;
  };
  return simpson([&](double beta) { return weight(beta) * exact_var(model, beta); }, beta_a,
                 beta_b, points);
}

double fisher_information_integral(const ExactModel& model, double beta_a, double beta_b,
                                   std::size_t points) {
  if (points < 3) throw std::invalid_argument("fisher_information_integral: need >= 3 points");
  if (points % 2 == 0) ++points;
  if (beta_a == beta_b) return 0.0;
  return (beta_b - beta_a) *
         simpson([&](double beta) { return exact_var(model, beta); }, beta_a, beta_b, points);
}

double renyi_objective(const ExactModel& model, double beta) {
  if (beta == 0.0) return exact_eta(model, 0.0);
  return exact_psi(model, beta) / beta;
}

double third_derivative_probe(const ExactModel& model, double beta) {
  constexpr double h = 1e-3;
  const double c = std::clamp(beta, 2.0 * h, 1.0 - 2.0 * h);
  const auto f = [&](double b) { return exact_psi(model, b); };
  return (f(c + 2 * h) - 2.0 * f(c + h) + 2.0 * f(c - h) - f(c - 2 * h)) / (2.0 * h * h * h);
}

SecondOrderReport second_order_tvo(const ExactModel& model, const Schedule& schedule) {
  const auto b = schedule.betas();
  std::vector<double> etas;
  double correction = 0.0;
  for (std::size_t k = 0; k < b.size(); ++k) {
    const PathMoments m = exact_moments(model, b[k]);
    etas.push_back(m.eta);
    if (k + 1 < b.size()) {
      const double d = b[k + 1] - b[k];
      correction += 0.5 * d * d * m.var;
    }
  }
  SecondOrderReport out;
  out.tvo_lower = tvo_lower(etas, schedule);
  out.value = out.tvo_lower + correction;
  double worst = -std::numeric_limits<double>::infinity();
  for (double beta : linspace(0.0, 1.0, 101)) worst = std::max(worst, third_derivative_probe(model, beta));
  out.max_third_derivative = worst;
  out.valid_lower_bound = worst <= 0.0;
  return out;
}

std::vector<RatePoint> asymptotic_rate_check(const ExactModel& model,
                                             std::span<const std::size_t> K_list) {
  std::vector<RatePoint> out;
  for (std::size_t K : K_list) {
    const auto gap = gap_decomposition_lower(model, linear_schedule(K));
    out.push_back({K, static_cast<double>(K) * gap.kl_sum()});
  }
  return out;
}

double asymptotic_rate_limit(const ExactModel& model) {
  return 0.5 * (kl_between_path_points(model, 0.0, 1.0) + kl_between_path_points(model, 1.0, 0.0));
}

BoundReport bound_report(const ExactModel& model, const Schedule& schedule) {
  BoundReport r;
  const auto etas = exact_etas(model, schedule);
  r.betas.assign(schedule.betas().begin(), schedule.betas().end());
  r.tvo_lower = tvo_lower(etas, schedule);
  r.tvo_upper = tvo_upper(etas, schedule);
  r.elbo = etas.front();
  r.eubo = etas.back();
  r.log_px = exact_log_px(model);
  r.gap_lower = *r.log_px - r.tvo_lower;
  r.gap_upper = r.tvo_upper - *r.log_px;
  r.per_interval_kl_forward = gap_decomposition_lower(model, schedule).kl_terms;
  r.per_interval_kl_reverse = gap_decomposition_upper(model, schedule).kl_terms;
  return r;
}

BoundReport bound_report(const LogWeightGrid& grid, const Schedule& schedule) {
  const auto b = schedule.betas();
  const double n = static_cast<double>(grid.datapoints());
  const auto mean = [n](const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / n;
  };
  std::vector<double> etas;
  std::vector<double> psis;
  for (double beta : b) {
    etas.push_back(mean(snis_eta(grid, beta)));
    psis.push_back(mean(snis_log_partition(grid, beta)));
  }
  BoundReport r;
  r.betas.assign(b.begin(), b.end());
  r.tvo_lower = tvo_lower(etas, schedule);
  r.tvo_upper = tvo_upper(etas, schedule);
  r.elbo = etas.front();
  r.eubo = etas.back();
  r.gap_lower = psis.back() - psis.front() - r.tvo_lower;
  r.gap_upper = r.tvo_upper - (psis.back() - psis.front());
  for (std::size_t k = 1; k < b.size(); ++k) {
    const double d = b[k] - b[k - 1];
    r.per_interval_kl_forward.push_back(psis[k] - psis[k - 1] - d * etas[k - 1]);
    r.per_interval_kl_reverse.push_back(psis[k - 1] - psis[k] + d * etas[k]);
  }
  return r;
}

void to_json(nlohmann::json& j, const BoundReport& r) {
  j = nlohmann::json{{"tvo_lower", r.tvo_lower},
                     {"tvo_upper", r.tvo_upper},
                     {"elbo", r.elbo},
                     {"eubo", r.eubo},
                     {"log_px", r.log_px ? nlohmann::json(*r.log_px) : nlohmann::json(nullptr)},
                     {"gap_lower", r.gap_lower},
                     {"gap_upper", r.gap_upper},
                     {"per_interval_kl_forward", r.per_interval_kl_forward},
                     {"per_interval_kl_reverse", r.per_interval_kl_reverse},
                     {"betas", r.betas}};
}

void to_json(nlohmann::json& j, const Schedule& schedule) {
  j = nlohmann::json(std::vector<double>(schedule.betas().begin(), schedule.betas().end()));
}

}  // namespace tvo
