#include "tvo/path_models.hpp"

#include "tvo/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace tvo {
namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;  // log(2 pi)
constexpr double kMaxCondition = 1e12;

void require_finite_beta(double beta) {
  if (!std::isfinite(beta)) throw std::invalid_argument("beta must be finite");
}

double log_sum_exp(std::span<const double> v) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : v) m = std::max(m, x);
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

}  // namespace

DiscreteLatentModel::DiscreteLatentModel(std::span<const double> q_probs,
                                         std::span<const double> joint_mass) {
  if (q_probs.size() != joint_mass.size())
    throw std::invalid_argument("discrete model: q and p differ in length");
  double total = 0.0;
  for (std::size_t m = 0; m < q_probs.size(); ++m) {
    if (!(q_probs[m] > 0.0) || !std::isfinite(q_probs[m]))
      throw std::invalid_argument("discrete model: q entries must be positive");
    if (!(joint_mass[m] > 0.0) || !std::isfinite(joint_mass[m]))
      throw std::invalid_argument("discrete model: p entries must be positive");
    total += q_probs[m];
  }
  if (std::abs(total - 1.0) > 1e-12)
    throw std::invalid_argument("discrete model: q must sum to 1");
  log_q_.reserve(q_probs.size());
  log_joint_.reserve(q_probs.size());
  for (std::size_t m = 0; m < q_probs.size(); ++m) {
    log_q_.push_back(std::log(q_probs[m]));
    log_joint_.push_back(std::log(joint_mass[m]));
  }
  finish();
}

DiscreteLatentModel DiscreteLatentModel::from_log(std::vector<double> log_q,
                                                  std::vector<double> log_joint) {
  if (log_q.size() != log_joint.size())
    throw std::invalid_argument("discrete model: q and p differ in length");
  for (std::size_t m = 0; m < log_q.size(); ++m) {
    if (!std::isfinite(log_q[m]) || !std::isfinite(log_joint[m]))
      throw std::invalid_argument("discrete model: log masses must be finite");
  }
  if (std::abs(log_sum_exp(log_q)) > 1e-12)
    throw std::invalid_argument("discrete model: q must sum to 1");
  DiscreteLatentModel model;
  model.log_q_ = std::move(log_q);
  model.log_joint_ = std::move(log_joint);
  model.finish();
  return model;
}

void DiscreteLatentModel::finish() {
  if (log_q_.size() < 2) throw std::invalid_argument("discrete model: need at least 2 states");
  log_w_.resize(log_q_.size());
  for (std::size_t m = 0; m < log_q_.size(); ++m) log_w_[m] = log_joint_[m] - log_q_[m];
}

double DiscreteLatentModel::log_px() const { return log_sum_exp(log_joint_); }

PathMoments exact_moments(const DiscreteLatentModel& model, double beta) {
  require_finite_beta(beta);
  const auto lq = model.log_q();
  const auto lw = model.log_w();
  const std::size_t n = lq.size();
  std::vector<double> a(n);
  for (std::size_t m = 0; m < n; ++m) a[m] = lq[m] + beta * lw[m];
  const double shift = *std::max_element(a.begin(), a.end());
  double s0 = 0.0;
  for (std::size_t m = 0; m < n; ++m) {
    a[m] = std::exp(a[m] - shift);
    s0 += a[m];
  }
  PathMoments out;
  out.psi = shift + std::log(s0);
  double eta = 0.0;
  for (std::size_t m = 0; m < n; ++m) eta += a[m] / s0 * lw[m];
  double var = 0.0;
  for (std::size_t m = 0; m < n; ++m) {
    const double d = lw[m] - eta;
    var += a[m] / s0 * d * d;
  }
  out.eta = eta;
  out.var = var;
  return out;
}

double exact_psi(const DiscreteLatentModel& model, double beta) {
  return exact_moments(model, beta).psi;
}
double exact_eta(const DiscreteLatentModel& model, double beta) {
  return exact_moments(model, beta).eta;
}
double exact_var(const DiscreteLatentModel& model, double beta) {
  return exact_moments(model, beta).var;
}

LinearGaussianModel::LinearGaussianModel(Eigen::MatrixXd decoder_weight,
                                         Eigen::VectorXd decoder_bias, double obs_stddev,
                                         Eigen::VectorXd encoder_mean,
                                         Eigen::VectorXd encoder_stddev)
    : weight_(std::move(decoder_weight)),
      bias_(std::move(decoder_bias)),
      sigma_(obs_stddev),
      enc_mean_(std::move(encoder_mean)),
      enc_std_(std::move(encoder_stddev)) {
  if (weight_.rows() < 1 || weight_.cols() < 1)
    throw std::invalid_argument("linear gaussian: empty decoder weight");
  if (bias_.size() != weight_.rows())
    throw std::invalid_argument("linear gaussian: bias does not match decoder rows");
  if (enc_mean_.size() != weight_.cols() || enc_std_.size() != weight_.cols())
    throw std::invalid_argument("linear gaussian: encoder does not match latent dimension");
  if (!(sigma_ > 0.0) || !std::isfinite(sigma_))
    throw std::invalid_argument("linear gaussian: sigma must be positive");
  for (Eigen::Index j = 0; j < enc_std_.size(); ++j) {
    if (!(enc_std_[j] > 0.0) || !std::isfinite(enc_std_[j]))
      throw std::invalid_argument("linear gaussian: encoder stddev must be positive");
  }
  if (!weight_.allFinite() || !bias_.allFinite() || !enc_mean_.allFinite())
    throw std::invalid_argument("linear gaussian: non-finite parameter");
}

double LinearGaussianModel::log_prior(const Eigen::VectorXd& z) const {
  return -0.5 * z.squaredNorm() - 0.5 * static_cast<double>(z.size()) * kLog2Pi;
}

double LinearGaussianModel::log_likelihood(const Eigen::VectorXd& x,
                                           const Eigen::VectorXd& z) const {
  const Eigen::VectorXd r = x - weight_ * z - bias_;
  const double dx = static_cast<double>(x.size());
  return -0.5 * r.squaredNorm() / (sigma_ * sigma_) - dx * std::log(sigma_) - 0.5 * dx * kLog2Pi;
}

double LinearGaussianModel::log_joint(const Eigen::VectorXd& x, const Eigen::VectorXd& z) const {
  return log_prior(z) + log_likelihood(x, z);
}

double LinearGaussianModel::log_q(const Eigen::VectorXd& z) const {
  double out = -0.5 * static_cast<double>(z.size()) * kLog2Pi;
  for (Eigen::Index j = 0; j < z.size(); ++j) {
    const double u = (z[j] - enc_mean_[j]) / enc_std_[j];
    out -= 0.5 * u * u + std::log(enc_std_[j]);
  }
  return out;
}

double LinearGaussianModel::log_w(const Eigen::VectorXd& x, const Eigen::VectorXd& z) const {
  return log_joint(x, z) - log_q(z);
}

Eigen::VectorXd LinearGaussianModel::grad_z_log_w(const Eigen::VectorXd& x,
                                                  const Eigen::VectorXd& z) const {
  const Eigen::VectorXd r = x - weight_ * z - bias_;
  Eigen::VectorXd g = weight_.transpose() * r / (sigma_ * sigma_) - z;
  g.array() += (z - enc_mean_).array() / enc_std_.array().square();
  return g;
}

Gaussian LinearGaussianModel::posterior(const Eigen::VectorXd& x) const {
  return gaussian_path_distribution(*this, x, 1.0);
}

double LinearGaussianModel::log_marginal(const Eigen::VectorXd& x) const {
  return gaussian_path_moments(*this, x, 1.0).psi;
}

LinearGaussianModel LinearGaussianModel::with_encoder(Eigen::VectorXd mean,
                                                      Eigen::VectorXd stddev) const {
  return LinearGaussianModel(weight_, bias_, sigma_, std::move(mean), std::move(stddev));
}

namespace {

// log q^(1-beta) p^beta = -1/2 z' P z + h' z + c
struct PathQuadratic {
  Eigen::MatrixXd precision;
  Eigen::VectorXd linear;
  double constant = 0.0;
};

struct LogWeightQuadratic {
  Eigen::MatrixXd curvature;  // log w = -1/2 z' D z + g' z + c0
  Eigen::VectorXd linear;
  double constant = 0.0;
};

PathQuadratic path_quadratic(const LinearGaussianModel& model, const Eigen::VectorXd& x,
                             double beta) {
  const auto dz = model.latent_dim();
  const double dx = static_cast<double>(model.obs_dim());
  const double s2 = model.obs_stddev() * model.obs_stddev();
  const Eigen::MatrixXd& a = model.decoder_weight();
  const Eigen::VectorXd r = x - model.decoder_bias();
  const Eigen::VectorXd prec_q = model.encoder_stddev().array().square().inverse();

  Eigen::MatrixXd prec_p = Eigen::MatrixXd::Identity(dz, dz) + a.transpose() * a / s2;
  Eigen::VectorXd lin_q = prec_q.cwiseProduct(model.encoder_mean());
  Eigen::VectorXd lin_p = a.transpose() * r / s2;
  double c_q = -0.5 * model.encoder_mean().dot(lin_q) -
               model.encoder_stddev().array().log().sum() -
               0.5 * static_cast<double>(dz) * kLog2Pi;
  double c_p = -0.5 * r.squaredNorm() / s2 - dx * std::log(model.obs_stddev()) -
               0.5 * dx * kLog2Pi - 0.5 * static_cast<double>(dz) * kLog2Pi;

  PathQuadratic out;
  out.precision = beta * prec_p;
  out.precision.diagonal() += (1.0 - beta) * prec_q;
  out.linear = (1.0 - beta) * lin_q + beta * lin_p;
  out.constant = (1.0 - beta) * c_q + beta * c_p;
  return out;
}

LogWeightQuadratic log_weight_quadratic(const LinearGaussianModel& model,
                                        const Eigen::VectorXd& x) {
  const PathQuadratic q0 = path_quadratic(model, x, 0.0);
  const PathQuadratic q1 = path_quadratic(model, x, 1.0);
  return {q1.precision - q0.precision, q1.linear - q0.linear, q1.constant - q0.constant};
}

Gaussian gaussian_from_precision(const Eigen::MatrixXd& precision, const Eigen::VectorXd& linear) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(precision);
  const Eigen::VectorXd ev = eig.eigenvalues();
  const double lo = ev.minCoeff();
  const double hi = ev.maxCoeff();
  if (!(lo > 0.0) || hi / lo > kMaxCondition)
    throw std::domain_error("path precision is not positive definite or is ill-conditioned");
  Gaussian g;
  g.precision = precision;
  g.cov = eig.eigenvectors() * ev.cwiseInverse().asDiagonal() * eig.eigenvectors().transpose();
  g.cov = 0.5 * (g.cov + g.cov.transpose());
  g.mean = g.cov * linear;
  g.log_det_cov = -ev.array().log().sum();
  return g;
}

}  // namespace

Gaussian gaussian_path_distribution(const LinearGaussianModel& model, const Eigen::VectorXd& x,
                                    double beta) {
  require_finite_beta(beta);
  if (x.size() != model.obs_dim())
    throw std::invalid_argument("linear gaussian: datapoint dimension mismatch");
  const PathQuadratic pq = path_quadratic(model, x, beta);
  return gaussian_from_precision(pq.precision, pq.linear);
}

PathMoments gaussian_path_moments(const LinearGaussianModel& model, const Eigen::VectorXd& x,
                                  double beta) {
  require_finite_beta(beta);
  if (x.size() != model.obs_dim())
    throw std::invalid_argument("linear gaussian: datapoint dimension mismatch");
  const PathQuadratic pq = path_quadratic(model, x, beta);
  const Gaussian pi = gaussian_from_precision(pq.precision, pq.linear);
  const LogWeightQuadratic lw = log_weight_quadratic(model, x);
  const double dz = static_cast<double>(model.latent_dim());

  PathMoments out;
  out.psi = pq.constant + 0.5 * pq.linear.dot(pi.mean) + 0.5 * dz * kLog2Pi + 0.5 * pi.log_det_cov;
  const Eigen::MatrixXd dc = lw.curvature * pi.cov;
  out.eta = -0.5 * (dc.trace() + pi.mean.dot(lw.curvature * pi.mean)) + lw.linear.dot(pi.mean) +
            lw.constant;
  const Eigen::VectorXd slope = lw.linear - lw.curvature * pi.mean;
  out.var = 0.5 * (dc * dc).trace() + slope.dot(pi.cov * slope);
  out.var = std::max(out.var, 0.0);
  return out;
}

double gaussian_kl(const Gaussian& a, const Gaussian& b) {
  const Eigen::VectorXd d = b.mean - a.mean;
  const double k = static_cast<double>(a.mean.size());
  const double tr = (b.precision * a.cov).trace();
  return 0.5 * (tr + d.dot(b.precision * d) - k + b.log_det_cov - a.log_det_cov);
}

PathMoments exact_moments(const ExactModel& model, double beta) {
  return std::visit(
      [beta](const auto& m) -> PathMoments {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, DiscreteLatentModel>) {
          return exact_moments(m, beta);
        } else {
          return gaussian_path_moments(m.model, m.x, beta);
        }
      },
      model);
}

double exact_psi(const ExactModel& model, double beta) { return exact_moments(model, beta).psi; }
double exact_eta(const ExactModel& model, double beta) { return exact_moments(model, beta).eta; }
double exact_var(const ExactModel& model, double beta) { return exact_moments(model, beta).var; }

double exact_log_px(const ExactModel& model) {
  return std::visit(
      [](const auto& m) -> double {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, DiscreteLatentModel>) {
          return m.log_px();
        } else {
          return m.model.log_marginal(m.x);
        }
      },
      model);
}

MomentCurve::MomentCurve(std::vector<MomentPoint> points) : points_(std::move(points)) {
  for (std::size_t i = 0; i < points_.size(); ++i) {
    const auto& p = points_[i];
    if (!(p.var >= 0.0)) throw std::invalid_argument("moment curve: negative variance");
    if (p.beta < 0.0 || p.beta > 1.0)
      throw std::invalid_argument("moment curve: beta outside [0, 1]");
    if (i == 0) continue;
    const auto& prev = points_[i - 1];
    if (!(p.beta > prev.beta)) throw std::invalid_argument("moment curve: betas not increasing");
    const double slack = 1e-12 * std::max({1.0, std::abs(p.eta), std::abs(prev.eta)});
    if (p.eta < prev.eta - slack) throw std::invalid_argument("moment curve: eta decreasing");
  }
}

MomentCurve MomentCurve::unchecked(std::vector<MomentPoint> points) {
  MomentCurve c;
  c.points_ = std::move(points);
  return c;
}

MomentCurve tabulate_curve(const ExactModel& model, std::span<const double> betas) {
  std::vector<MomentPoint> pts;
  pts.reserve(betas.size());
  for (double b : betas) {
    const PathMoments m = exact_moments(model, b);
    pts.push_back({b, m.psi, m.eta, m.var});
  }
  return MomentCurve(std::move(pts));
}

MomentCurve tabulate_curve(const ExactModel& model, std::size_t num_points) {
  const auto betas = linspace(0.0, 1.0, num_points);
  return tabulate_curve(model, betas);
}

double ti_identity_check(const MomentCurve& curve) {
  const auto pts = curve.points();
  if (pts.size() < 101) throw std::invalid_argument("ti identity: need at least 101 points");
  if (pts.front().beta != 0.0 || pts.back().beta != 1.0)
    throw std::invalid_argument("ti identity: curve must span [0, 1]");
  std::vector<double> xs;
  std::vector<double> ys;
  xs.reserve(pts.size());
  ys.reserve(pts.size());
  for (const auto& p : pts) {
    xs.push_back(p.beta);
    ys.push_back(p.eta);
  }
  const double integral = simpson(xs, ys);
  return std::abs(integral - (pts.back().psi - pts.front().psi));
}

}  // namespace tvo
