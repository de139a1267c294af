#pragma once

// TVO Riemann-sum bounds on log p(x), their exact KL-sum gaps, and the family
// of identities that tie psi, eta, Var and the path KL divergences together.

#include "tvo/path_models.hpp"
#include "tvo/schedules.hpp"
#include "tvo/snis.hpp"

#include <json.hpp>

#include <optional>
#include <span>
#include <vector>

namespace tvo {

// Left Riemann sum: sum_k (beta_k - beta_{k-1}) * etas[k-1].
double tvo_lower(std::span<const double> etas, const Schedule& schedule);
// Right Riemann sum: sum_k (beta_k - beta_{k-1}) * etas[k].
double tvo_upper(std::span<const double> etas, const Schedule& schedule);

std::vector<double> exact_etas(const ExactModel& model, const Schedule& schedule);

// D_KL[pi_a || pi_b], by enumeration (discrete) or the Gaussian closed form.
double kl_between_path_points(const ExactModel& model, double beta_a, double beta_b);

// psi(b) - psi(a) - (b - a) eta(a); equals D_KL[pi_a || pi_b].
double bregman_divergence(const ExactModel& model, double beta_a, double beta_b);

struct GapDecomposition {
  double gap = 0.0;              // from the bound and log p(x)
  std::vector<double> kl_terms;  // one per interval
  double kl_sum() const;
};

// gap = log p(x) - TVO_L, kl_terms[k] = D_KL[pi_{k-1} || pi_k]
GapDecomposition gap_decomposition_lower(const ExactModel& model, const Schedule& schedule);
// gap = TVO_U - log p(x), kl_terms[k] = D_KL[pi_k || pi_{k-1}]
GapDecomposition gap_decomposition_upper(const ExactModel& model, const Schedule& schedule);

// beta * eta(beta) - psi(beta); equals D_KL[pi_beta || pi_0].
double conjugate_psi_star(const ExactModel& model, double beta);

// Max of two residuals: direct D_KL[pi_b || pi_a] against the primal Bregman
// form, and against the dual form psi*(eta_b) + psi(beta_a) - eta_b * beta_a with
// psi* taken from the direct KL to pi_0.
double dual_divergence_check(const ExactModel& model, double beta_a, double beta_b);

struct RectangleSides {
  double lhs = 0.0;  // D_KL[a || b] + D_KL[b || a]
  double rhs = 0.0;  // (b - a) (eta_b - eta_a)
};
RectangleSides symm_kl_rectangle(const ExactModel& model, double beta_a, double beta_b);

enum class KlDirection {
  forward,  // D_KL[pi_a || pi_b] = ∫ (b - beta) Var dbeta
  reverse,  // D_KL[pi_b || pi_a] = ∫ (beta - a) Var dbeta
};

constexpr std::size_t kIdentityQuadraturePoints = 1001;

double kl_variance_integral(const ExactModel& model, double beta_a, double beta_b,
                            KlDirection direction,
                            std::size_t points = kIdentityQuadraturePoints);

// (b - a) ∫_a^b Var dbeta, the symmetrized KL as a Fisher-information integral.
double fisher_information_integral(const ExactModel& model, double beta_a, double beta_b,
                                   std::size_t points = kIdentityQuadraturePoints);

// L_{1-beta} = psi(beta) / beta; at beta = 0 the limit eta(0).
double renyi_objective(const ExactModel& model, double beta);

// Five-point central difference of psi at step 1e-3, centre clamped to keep
// the stencil inside [0, 1].
double third_derivative_probe(const ExactModel& model, double beta);

struct SecondOrderReport {
  double value = 0.0;               // TVO_L + sum_k 1/2 dbeta_k^2 Var(beta_{k-1})
  double tvo_lower = 0.0;
  double max_third_derivative = 0.0;  // over a 101-point probe grid
  bool valid_lower_bound = false;     // max_third_derivative <= 0
};
SecondOrderReport second_order_tvo(const ExactModel& model, const Schedule& schedule);

struct RatePoint {
  std::size_t K = 0;
  double scaled_forward_kl = 0.0;  // K * sum_k D_KL[pi_{k-1} || pi_k], linear spacing
};
std::vector<RatePoint> asymptotic_rate_check(const ExactModel& model,
                                             std::span<const std::size_t> K_list);
// 1/2 (D_KL[pi_0 || pi_1] + D_KL[pi_1 || pi_0]), the limit of the scaled gap.
double asymptotic_rate_limit(const ExactModel& model);

struct BoundReport {
  double tvo_lower = 0.0;
  double tvo_upper = 0.0;
  double elbo = 0.0;
  double eubo = 0.0;
  std::optional<double> log_px;
  double gap_lower = 0.0;
  double gap_upper = 0.0;
  std::vector<double> per_interval_kl_forward;
  std::vector<double> per_interval_kl_reverse;
  std::vector<double> betas;
};

BoundReport bound_report(const ExactModel& model, const Schedule& schedule);

// SNIS version, pooled over datapoints. log_px is absent; gaps and per-interval
// KLs refer to the empirical S-atom family, whose psi(1) is the IWAE estimate.
BoundReport bound_report(const LogWeightGrid& grid, const Schedule& schedule);

void to_json(nlohmann::json& j, const BoundReport& report);
void to_json(nlohmann::json& j, const Schedule& schedule);

}  // namespace tvo
