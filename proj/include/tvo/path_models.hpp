#pragma once

// Exactly evaluable geometric-mixture paths pi_beta(z) ∝ q(z)^(1-beta) p(x,z)^beta.
//
// Two model families are supported: an enumerable discrete latent model and a
// linear-Gaussian model whose path distributions are Gaussian in z. Both expose
// the log-partition psi(beta), its derivative eta(beta) = E_pi[log w] and its
// curvature Var_pi[log w].

#include <Eigen/Dense>

#include <span>
#include <variant>
#include <vector>

namespace tvo {

class DiscreteLatentModel {
 public:
  // q_probs must sum to one (1e-12); all entries of both vectors strictly positive.
  DiscreteLatentModel(std::span<const double> q_probs, std::span<const double> joint_mass);

  // Construct from log-probabilities directly, for masses that underflow a double.
  static DiscreteLatentModel from_log(std::vector<double> log_q, std::vector<double> log_joint);

  std::size_t num_states() const { return log_q_.size(); }
  std::span<const double> log_q() const { return log_q_; }
  std::span<const double> log_joint() const { return log_joint_; }
  std::span<const double> log_w() const { return log_w_; }

  // log sum_m p_m
  double log_px() const;

 private:
  DiscreteLatentModel() = default;
  void finish();

  std::vector<double> log_q_;
  std::vector<double> log_joint_;
  std::vector<double> log_w_;
};

struct Gaussian {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
  Eigen::MatrixXd precision;
  double log_det_cov = 0.0;
};

// p(z) = N(0, I), p(x | z) = N(A z + b, sigma^2 I), q(z | x) = N(m, diag(t^2)).
class LinearGaussianModel {
 public:
  LinearGaussianModel(Eigen::MatrixXd decoder_weight, Eigen::VectorXd decoder_bias,
                      double obs_stddev, Eigen::VectorXd encoder_mean,
                      Eigen::VectorXd encoder_stddev);

  Eigen::Index latent_dim() const { return weight_.cols(); }
  Eigen::Index obs_dim() const { return weight_.rows(); }

  const Eigen::MatrixXd& decoder_weight() const { return weight_; }
  const Eigen::VectorXd& decoder_bias() const { return bias_; }
  double obs_stddev() const { return sigma_; }
  const Eigen::VectorXd& encoder_mean() const { return enc_mean_; }
  const Eigen::VectorXd& encoder_stddev() const { return enc_std_; }

  double log_prior(const Eigen::VectorXd& z) const;
  double log_likelihood(const Eigen::VectorXd& x, const Eigen::VectorXd& z) const;
  double log_joint(const Eigen::VectorXd& x, const Eigen::VectorXd& z) const;
  double log_q(const Eigen::VectorXd& z) const;
  double log_w(const Eigen::VectorXd& x, const Eigen::VectorXd& z) const;
  Eigen::VectorXd grad_z_log_w(const Eigen::VectorXd& x, const Eigen::VectorXd& z) const;

  Gaussian posterior(const Eigen::VectorXd& x) const;
  double log_marginal(const Eigen::VectorXd& x) const;

  // Copy with the encoder replaced.
  LinearGaussianModel with_encoder(Eigen::VectorXd mean, Eigen::VectorXd stddev) const;

 private:
  Eigen::MatrixXd weight_;
  Eigen::VectorXd bias_;
  double sigma_;
  Eigen::VectorXd enc_mean_;
  Eigen::VectorXd enc_std_;
};

// A linear-Gaussian model paired with the single datapoint its encoder belongs to.
struct GaussianDatum {
  LinearGaussianModel model;
  Eigen::VectorXd x;
};

using ExactModel = std::variant<DiscreteLatentModel, GaussianDatum>;

struct PathMoments {
  double psi = 0.0;
  double eta = 0.0;
  double var = 0.0;
};

double exact_psi(const DiscreteLatentModel& model, double beta);
double exact_eta(const DiscreteLatentModel& model, double beta);
double exact_var(const DiscreteLatentModel& model, double beta);
PathMoments exact_moments(const DiscreteLatentModel& model, double beta);

// Closed form. Throws std::domain_error when the path precision is not positive
// definite or its condition number exceeds 1e12.
PathMoments gaussian_path_moments(const LinearGaussianModel& model, const Eigen::VectorXd& x,
                                  double beta);
// pi_beta itself, as a Gaussian over z.
Gaussian gaussian_path_distribution(const LinearGaussianModel& model, const Eigen::VectorXd& x,
                                    double beta);

PathMoments exact_moments(const ExactModel& model, double beta);
double exact_psi(const ExactModel& model, double beta);
double exact_eta(const ExactModel& model, double beta);
double exact_var(const ExactModel& model, double beta);
double exact_log_px(const ExactModel& model);

// D_KL[N_a || N_b]
double gaussian_kl(const Gaussian& a, const Gaussian& b);

struct MomentPoint {
  double beta = 0.0;
  double psi = 0.0;
  double eta = 0.0;
  double var = 0.0;
};

class MomentCurve {
 public:
  // Validates strictly increasing betas in [0, 1], nonnegative var and
  // nondecreasing eta (allowing 1e-12 relative round-off).
  explicit MomentCurve(std::vector<MomentPoint> points);

  std::span<const MomentPoint> points() const { return points_; }
  std::size_t size() const { return points_.size(); }

  // Unvalidated construction; used to inject corrupted tables for negative controls.
  static MomentCurve unchecked(std::vector<MomentPoint> points);

 private:
  MomentCurve() = default;
  std::vector<MomentPoint> points_;
};

MomentCurve tabulate_curve(const ExactModel& model, std::span<const double> betas);
MomentCurve tabulate_curve(const ExactModel& model, std::size_t num_points);

// |∫_0^1 eta dbeta - (psi(1) - psi(0))| by composite Simpson over the curve's grid.
// Requires at least 101 points with betas[0] = 0 and betas.back() = 1.
double ti_identity_check(const MomentCurve& curve);

}  // namespace tvo
