#pragma once

// Desk-scale training of a linear-Gaussian model with an amortized encoder
// m(x) = C x + d, log t = l on synthetic data drawn from a seeded ground truth.

#include "tvo/harness/config.hpp"
#include "tvo/path_models.hpp"

#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace tvo::harness {

struct TrainRow {
  std::size_t epoch = 0;  // 0 is the initial state
  double tvo_lower = 0.0;
  double tvo_upper = 0.0;
  double elbo = 0.0;
  double eubo = 0.0;
  double log_px = 0.0;
  double kl_q_posterior = 0.0;  // mean D_KL[q(z|x) || p(z|x)] = log p(x) - ELBO
  double grad_norm_theta = 0.0;
  double grad_norm_phi = 0.0;
  std::vector<double> betas;
};

class TrainLog {
 public:
  // Throws std::logic_error when the row breaks tvo_lower <= log_px <= tvo_upper.
  void append(TrainRow row);

  const std::vector<TrainRow>& rows() const { return rows_; }
  const TrainRow& initial() const { return rows_.front(); }
  const TrainRow& final() const { return rows_.back(); }

  // Median over each quarter of the training epochs of the schedule's median
  // interior beta. Four values.
  std::vector<double> quartile_median_betas() const;

  std::string csv() const;

 private:
  std::vector<TrainRow> rows_;
};

class TrainingDiverged : public std::runtime_error {
 public:
  explicit TrainingDiverged(std::size_t epoch);
  std::size_t epoch() const { return epoch_; }

 private:
  std::size_t epoch_;
};

struct Encoder {
  Eigen::MatrixXd weight;   // d_z x d_x
  Eigen::VectorXd bias;     // d_z
  Eigen::VectorXd log_std;  // d_z
  LinearGaussianModel attach(const LinearGaussianModel& decoder, const Eigen::VectorXd& x) const;
};

// Ground truth used when no linear-Gaussian model spec is configured (d_z = 1, d_x = 4).
LinearGaussianModel default_ground_truth();

// N datapoints x ~ p(x) of the ground truth.
std::vector<Eigen::VectorXd> synthetic_dataset(const LinearGaussianModel& truth, std::size_t count,
                                               std::mt19937_64& rng);

struct TrainSetup {
  LinearGaussianModel decoder;  // encoder fields unused
  Encoder encoder;
  std::vector<Eigen::VectorXd> data;
};

// Dataset and the mismatched initial parameters for a config.
TrainSetup make_setup(const ExperimentConfig& cfg);

TrainLog train(const ExperimentConfig& cfg, const TrainSetup& setup);
// Builds the setup, trains and writes trainlog.csv.
TrainLog train(const ExperimentConfig& cfg);

}  // namespace tvo::harness
