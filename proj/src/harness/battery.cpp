#include "tvo/harness/battery.hpp"

#include <algorithm>
#include <cmath>

namespace tvo::harness {

DiscreteLatentModel random_discrete_model(std::mt19937_64& rng, std::size_t max_states) {
  std::uniform_int_distribution<std::size_t> states(2, std::max<std::size_t>(2, max_states));
  std::normal_distribution<double> normal;
  const std::size_t M = states(rng);
  std::vector<double> log_q(M), log_p(M);
  for (auto& v : log_q) v = normal(rng);
  for (auto& v : log_p) v = normal(rng) - 1.0;
  const double mx = *std::max_element(log_q.begin(), log_q.end());
  double total = 0.0;
  for (double v : log_q) total += std::exp(v - mx);
  const double log_norm = mx + std::log(total);
  for (auto& v : log_q) v -= log_norm;
  return DiscreteLatentModel::from_log(std::move(log_q), std::move(log_p));
}

Schedule random_schedule(std::mt19937_64& rng, std::size_t max_intervals) {
  std::uniform_int_distribution<std::size_t> intervals(1, std::max<std::size_t>(1, max_intervals));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::size_t K = intervals(rng);
  std::vector<double> betas{0.0, 1.0};
  while (betas.size() < K + 1) {
    const double b = unit(rng);
    if (b > 0.0 && std::find(betas.begin(), betas.end(), b) == betas.end()) betas.push_back(b);
  }
  std::sort(betas.begin(), betas.end());
  return Schedule(std::move(betas));
}

GaussianDatum random_gaussian_datum(std::mt19937_64& rng, Eigen::Index latent_dim,
                                    Eigen::Index obs_dim) {
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> scale(0.6, 1.4);
  Eigen::MatrixXd A(obs_dim, latent_dim);
  for (Eigen::Index i = 0; i < A.size(); ++i) A.data()[i] = 0.8 * normal(rng);
  Eigen::VectorXd b(obs_dim), x(obs_dim), m(latent_dim), t(latent_dim);
  for (Eigen::Index i = 0; i < obs_dim; ++i) b[i] = 0.5 * normal(rng);
  const double sigma = scale(rng);
  for (Eigen::Index j = 0; j < latent_dim; ++j) {
    m[j] = 0.7 * normal(rng);
    t[j] = scale(rng);
  }
  for (Eigen::Index i = 0; i < obs_dim; ++i) x[i] = normal(rng);
  return {LinearGaussianModel(std::move(A), std::move(b), sigma, std::move(m), std::move(t)),
          std::move(x)};
}

GaussianDatum random_scalar_datum(std::mt19937_64& rng) { return random_gaussian_datum(rng, 1, 1); }

GaussianDatum mean_mismatch_datum(double shift) {
  Eigen::MatrixXd A(2, 1);
  A << 1.0, 0.5;
  Eigen::VectorXd b(2), x(2);
  b << 0.2, -0.1;
  x << 0.9, -0.4;
  const LinearGaussianModel shape(A, b, 0.8, Eigen::VectorXd::Zero(1), Eigen::VectorXd::Ones(1));
  const Gaussian post = shape.posterior(x);
  Eigen::VectorXd m = post.mean.array() + shift;
  Eigen::VectorXd t = post.cov.diagonal().cwiseSqrt();
  return {shape.with_encoder(std::move(m), std::move(t)), std::move(x)};
}

DiscreteLatentModel flat_discrete_model(std::size_t states) {
  std::vector<double> q(states), p(states);
  for (std::size_t i = 0; i < states; ++i) q[i] = 1.0 / static_cast<double>(states);
  for (std::size_t i = 0; i < states; ++i) p[i] = 0.25 * q[i];
  return DiscreteLatentModel(q, p);
}

GaussianDatum flat_gaussian_datum() { return mean_mismatch_datum(0.0); }

}  // namespace tvo::harness
