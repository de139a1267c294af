#pragma once

// Gradients of pi_beta expectations for the linear-Gaussian model.
//
// Expectations under pi_beta are formed by self-normalized weights
// softmax(log_base + beta * log w) over a SampleSet of base-noise points
// z = m + t * eps. Monte Carlo sets carry log_base = 0; Gauss-Hermite sets carry
// the log quadrature weights, which turns every estimator into a deterministic
// quadrature of the same formula.
//
// Parameter layout:
//   theta = [A (row-major), b, log sigma]
//   phi   = [m, log t]

#include "tvo/path_models.hpp"
#include "tvo/schedules.hpp"

#include <Eigen/Dense>
#include <json.hpp>

#include <optional>
#include <random>
#include <string_view>

namespace tvo {

struct ParamVector {
  Eigen::VectorXd theta;
  Eigen::VectorXd phi;
};

ParamVector pack_params(const LinearGaussianModel& model);
// Rebuilds a model with the dimensions of `shape` from flat parameters.
LinearGaussianModel unpack_params(const LinearGaussianModel& shape, const ParamVector& params);

enum class EstimatorTag { reinforce, doubly_reparam, finite_diff };
std::string_view to_string(EstimatorTag tag);

// Estimators that only produce the phi gradient leave d_theta empty.
struct GradEstimate {
  Eigen::VectorXd d_theta;
  Eigen::VectorXd d_phi;
  EstimatorTag estimator_tag = EstimatorTag::reinforce;
};

void to_json(nlohmann::json& j, const GradEstimate& g);

struct SampleSet {
  Eigen::MatrixXd eps;          // S x d_z standard-normal noise
  std::vector<double> log_base;  // per-sample log base weight
  std::size_t size() const { return log_base.size(); }
};

SampleSet draw_samples(Eigen::Index latent_dim, std::size_t count, std::mt19937_64& rng);

constexpr std::size_t kHermiteNodes = 64;

// Tensor-product Gauss-Hermite set; latent_dim <= 2.
SampleSet hermite_samples(Eigen::Index latent_dim, std::size_t nodes = kHermiteNodes);

// log w at z = m + t * eps for every sample.
std::vector<double> sample_log_weights(const LinearGaussianModel& model, const Eigen::VectorXd& x,
                                       const SampleSet& samples);

// Test functions with analytic z- and phi-derivatives.
struct TestFunction {
  enum class Kind { constant, log_w, coordinate, log_w_squared };
  Kind kind = Kind::log_w;
  Eigen::Index coordinate = 0;  // for Kind::coordinate
  double value = 1.0;           // for Kind::constant

  static TestFunction log_w() { return {Kind::log_w, 0, 1.0}; }
  static TestFunction z(Eigen::Index j) { return {Kind::coordinate, j, 1.0}; }
  static TestFunction log_w_squared() { return {Kind::log_w_squared, 0, 1.0}; }
  static TestFunction constant(double c) { return {Kind::constant, 0, c}; }
  // Accepts "log_w", "log_w_squared", "constant", "z<j>".
  static TestFunction parse(std::string_view spec);
};

// Covariance-form estimator for d/dlambda E_pi[log w]: E[dlog w/dlambda] +
// Cov[log w, dlog pi~/dlambda], derivatives at fixed z. Needs S >= 2.
GradEstimate reinforce_grad(const LinearGaussianModel& model, const Eigen::VectorXd& x,
                            double beta, const SampleSet& samples);

struct ReparamCoefficients {
  double leading = 1.0;     // 1 - 2 beta
  double covariance = 0.0;  // beta (1 - beta)
};
ReparamCoefficients doubly_reparam_coefficients(double beta);

// phi gradient of E_pi[log w]:
// (1 - 2 beta) E[dz/dphi dlog w/dz] + beta (1 - beta) Cov[log w, dz/dphi dlog w/dz].
GradEstimate doubly_reparam_grad(const LinearGaussianModel& model, const Eigen::VectorXd& x,
                                 double beta, const SampleSet& samples);

// phi gradient of E_pi[f] for general f:
// E[df/dphi - beta dz/dphi df/dz] + beta (1 - beta) Cov[f, dz/dphi dlog w/dz].
GradEstimate generic_reparam_grad(const LinearGaussianModel& model, const Eigen::VectorXd& x,
                                  double beta, const TestFunction& f, const SampleSet& samples);

// theta from reinforce_grad and phi from doubly_reparam_grad, accumulated over
// the left Riemann points of the schedule: gradient of TVO_L.
GradEstimate tvo_lower_grad(const LinearGaussianModel& model, const Eigen::VectorXd& x,
                            const Schedule& schedule, const SampleSet& samples);

// Reparameterized gradient of the IWAE bound (phi) with the score-free theta term.
GradEstimate iwae_grad(const LinearGaussianModel& model, const Eigen::VectorXd& x,
                       const SampleSet& samples);

struct LemmaResidual {
  Eigen::VectorXd lhs;
  Eigen::VectorXd rhs;
  double residual() const { return (lhs - rhs).cwiseAbs().maxCoeff(); }
};

// E_pi[f dlog w/dphi] = E_pi[(1 - beta) f dz/dphi dlog w/dz - dz/dphi df/dz], with the
// left derivative taken at fixed eps, for three choices of f; plus the
// derivative of the log normalizer.
struct LemmaReport {
  LemmaResidual expectation_log_w;       // f = log w
  LemmaResidual expectation_coordinate;  // f = z_0
  LemmaResidual expectation_constant;    // f = 1
  LemmaResidual partition_derivative;    // d psi/dphi = beta (1 - beta) E_pi[dz/dphi dlog w/dz]
  double max_residual() const;
};

// Quadrature evaluation of both sides; total phi-derivatives on the left side
// are central differences. The normalizer identity is checked divided by
// Z_beta, i.e. as d psi / dphi.
LemmaReport lemma_checks(const LinearGaussianModel& model, const Eigen::VectorXd& x, double beta);

enum class FdTargetKind { eta, psi, tvo_lower, expectation };

struct FdTarget {
  FdTargetKind kind = FdTargetKind::eta;
  std::optional<Schedule> schedule;  // required for tvo_lower
  TestFunction f;                    // used for expectation

  static FdTarget eta() { return {FdTargetKind::eta, std::nullopt, {}}; }
  static FdTarget psi() { return {FdTargetKind::psi, std::nullopt, {}}; }
  static FdTarget tvo_lower(Schedule s) { return {FdTargetKind::tvo_lower, std::move(s), {}}; }
  static FdTarget expectation(TestFunction f) { return {FdTargetKind::expectation, std::nullopt, f}; }
};

// Closed-form value of the target.
double fd_target_value(const LinearGaussianModel& model, const Eigen::VectorXd& x, double beta,
                       const FdTarget& target);

// Central differences with step 1e-5 * max(1, |param|) on every theta and phi coordinate.
GradEstimate finite_diff_grad(const LinearGaussianModel& model, const Eigen::VectorXd& x,
                              double beta, const FdTarget& target);

}  // namespace tvo
