#include "tvo/harness/train.hpp"

#include "tvo/bounds.hpp"
#include "tvo/gradients.hpp"
#include "tvo/harness/csv.hpp"
#include "tvo/harness/study.hpp"
#include "tvo/model_io.hpp"
#include "tvo/snis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace tvo::harness {

namespace {

constexpr double kSandwichRoundoff = 1e-12;

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double interior_median(const std::vector<double>& betas) {
  if (betas.size() <= 2) return 0.5;
  return median(std::vector<double>(betas.begin() + 1, betas.end() - 1));
}

bool finite(const Eigen::VectorXd& v) { return v.allFinite(); }

struct Params {
  LinearGaussianModel decoder;
  Encoder encoder;
};

// Exact per-epoch metrics averaged over the dataset.
TrainRow evaluate(const Params& p, const std::vector<Eigen::VectorXd>& data, const Schedule& s,
                  std::size_t epoch) {
  TrainRow row;
  row.epoch = epoch;
  row.betas.assign(s.betas().begin(), s.betas().end());
  for (const auto& x : data) {
    const ExactModel m = GaussianDatum{p.encoder.attach(p.decoder, x), x};
    const std::vector<double> etas = exact_etas(m, s);
    const double log_px = exact_log_px(m);
    const double elbo = s[0] == 0.0 ? etas.front() : exact_eta(m, 0.0);
    row.tvo_lower += tvo_lower(etas, s);
    row.tvo_upper += tvo_upper(etas, s);
    row.elbo += elbo;
    row.eubo += etas.back();
    row.log_px += log_px;
    row.kl_q_posterior += log_px - elbo;
  }
  const double n = static_cast<double>(data.size());
  row.tvo_lower /= n;
  row.tvo_upper /= n;
  row.elbo /= n;
  row.eubo /= n;
  row.log_px /= n;
  row.kl_q_posterior /= n;
  return row;
}

LogWeightGrid sample_grid(const Params& p, const std::vector<Eigen::VectorXd>& data, std::size_t S,
                          std::mt19937_64& rng) {
  std::vector<std::vector<double>> columns;
  columns.reserve(data.size());
  for (const auto& x : data) {
    const SampleSet eps = draw_samples(p.decoder.latent_dim(), S, rng);
    columns.push_back(sample_log_weights(p.encoder.attach(p.decoder, x), x, eps));
  }
  return LogWeightGrid::from_columns(columns);
}

Schedule choose_schedule(const ExperimentConfig& cfg, const Params& p,
                         const std::vector<Eigen::VectorXd>& data, std::mt19937_64& rng) {
  if (cfg.objective != Objective::tvo) return linear_schedule(1);
  switch (cfg.schedule_strategy) {
    case Strategy::linear: return linear_schedule(cfg.K);
    case Strategy::log_uniform: return log_uniform_schedule(cfg.K, *cfg.beta1);
    default: break;
  }
  const EtaEvaluator eval = EtaEvaluator::snis(sample_grid(p, data, cfg.S, rng));
  return make_schedule(cfg.schedule_strategy, cfg.K, cfg.beta1, cfg.J, eval);
}

}  // namespace

void TrainLog::append(TrainRow row) {
  const double slack = kSandwichRoundoff * std::max(1.0, std::abs(row.log_px));
  if (!(row.tvo_lower <= row.log_px + slack && row.log_px <= row.tvo_upper + slack)) {
    throw std::logic_error("sandwich violated at epoch " + std::to_string(row.epoch));
  }
  rows_.push_back(std::move(row));
}

std::vector<double> TrainLog::quartile_median_betas() const {
  std::vector<double> out;
  if (rows_.size() < 5) return out;
  const std::size_t epochs = rows_.size() - 1;
  for (std::size_t q = 0; q < 4; ++q) {
    const std::size_t lo = 1 + q * epochs / 4;
    const std::size_t hi = 1 + (q + 1) * epochs / 4;
    std::vector<double> meds;
    for (std::size_t e = lo; e < hi; ++e) meds.push_back(interior_median(rows_[e].betas));
    out.push_back(median(std::move(meds)));
  }
  return out;
}

std::string TrainLog::csv() const {
  std::ostringstream out;
  out << "epoch,tvo_lower,tvo_upper,elbo,eubo,log_px,kl_q_posterior,grad_norm_theta,grad_norm_phi,"
         "betas\n";
  for (const auto& r : rows_) {
    out << r.epoch;
    for (double v : {r.tvo_lower, r.tvo_upper, r.elbo, r.eubo, r.log_px, r.kl_q_posterior,
                     r.grad_norm_theta, r.grad_norm_phi}) {
      out << ',' << csv::format_double(v);
    }
    out << ',';
    for (std::size_t k = 0; k < r.betas.size(); ++k) {
      out << (k ? " " : "") << csv::format_double(r.betas[k]);
    }
    out << '\n';
  }
  return out.str();
}

TrainingDiverged::TrainingDiverged(std::size_t epoch)
    : std::runtime_error("training diverged at epoch " + std::to_string(epoch)), epoch_(epoch) {}

LinearGaussianModel Encoder::attach(const LinearGaussianModel& decoder, const Eigen::VectorXd& x) const {
  return decoder.with_encoder(weight * x + bias, log_std.array().exp().matrix());
}

LinearGaussianModel default_ground_truth() {
  Eigen::MatrixXd A(4, 1);
  A << 1.0, -0.8, 0.6, 1.2;
  Eigen::VectorXd b(4);
  b << 0.3, -0.2, 0.1, 0.5;
  return LinearGaussianModel(A, b, 0.7, Eigen::VectorXd::Zero(1), Eigen::VectorXd::Ones(1));
}

std::vector<Eigen::VectorXd> synthetic_dataset(const LinearGaussianModel& truth, std::size_t count,
                                               std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  std::vector<Eigen::VectorXd> data;
  data.reserve(count);
  for (std::size_t n = 0; n < count; ++n) {
    Eigen::VectorXd z(truth.latent_dim());
    for (Eigen::Index j = 0; j < z.size(); ++j) z[j] = normal(rng);
    Eigen::VectorXd x = truth.decoder_weight() * z + truth.decoder_bias();
    for (Eigen::Index i = 0; i < x.size(); ++i) x[i] += truth.obs_stddev() * normal(rng);
    data.push_back(std::move(x));
  }
  return data;
}

TrainSetup make_setup(const ExperimentConfig& cfg) {
  const LinearGaussianModel truth = [&] {
    if (!cfg.model_spec) return default_ground_truth();
    const ModelSpec spec = load_model(*cfg.model_spec);
    if (spec.is_discrete()) throw std::invalid_argument("training needs a linear-Gaussian model spec");
    return spec.gaussian();
  }();
  const Eigen::Index dz = truth.latent_dim();
  const Eigen::Index dx = truth.obs_dim();
  if (dz > 2 || dx > 4) throw std::invalid_argument("training supports d_z <= 2 and d_x <= 4");

  std::mt19937_64 rng(cfg.seed);
  std::vector<Eigen::VectorXd> data = synthetic_dataset(truth, cfg.num_data, rng);

  // Decoder starts near the truth; the encoder starts far from the posterior.
  std::normal_distribution<double> normal;
  Eigen::MatrixXd A = truth.decoder_weight();
  for (Eigen::Index i = 0; i < A.size(); ++i) A.data()[i] += 0.3 * normal(rng);
  Eigen::VectorXd b = truth.decoder_bias();
  for (Eigen::Index i = 0; i < b.size(); ++i) b[i] += 0.3 * normal(rng);
  LinearGaussianModel decoder(std::move(A), std::move(b), truth.obs_stddev() * 1.2,
                              Eigen::VectorXd::Zero(dz), Eigen::VectorXd::Ones(dz));
  Encoder enc{Eigen::MatrixXd::Zero(dz, dx), Eigen::VectorXd::Constant(dz, -1.5),
              Eigen::VectorXd::Constant(dz, std::log(1.5))};
  return {std::move(decoder), std::move(enc), std::move(data)};
}

TrainLog train(const ExperimentConfig& cfg, const TrainSetup& setup) {
  cfg.validate();
  const auto& data = setup.data;
  const Eigen::Index dz = setup.decoder.latent_dim();
  const Eigen::Index dx = setup.decoder.obs_dim();
  std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);

  Params p{setup.decoder, setup.encoder};
  ParamVector theta_shape = pack_params(p.decoder);
  Schedule schedule = choose_schedule(cfg, p, data, rng);

  TrainLog log;
  log.append(evaluate(p, data, schedule, 0));

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const Schedule elbo_schedule = linear_schedule(1);

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double norm_theta = 0.0, norm_phi = 0.0;
    std::size_t steps = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      Eigen::VectorXd d_theta = Eigen::VectorXd::Zero(theta_shape.theta.size());
      Eigen::MatrixXd d_weight = Eigen::MatrixXd::Zero(dz, dx);
      Eigen::VectorXd d_bias = Eigen::VectorXd::Zero(dz);
      Eigen::VectorXd d_log_std = Eigen::VectorXd::Zero(dz);
      for (std::size_t i = start; i < stop; ++i) {
        const Eigen::VectorXd& x = data[order[i]];
        const LinearGaussianModel m = p.encoder.attach(p.decoder, x);
        const SampleSet eps = draw_samples(dz, cfg.S, rng);
        GradEstimate g;
        switch (cfg.objective) {
          case Objective::tvo: g = tvo_lower_grad(m, x, schedule, eps); break;
          case Objective::elbo: g = tvo_lower_grad(m, x, elbo_schedule, eps); break;
          case Objective::iwae: g = iwae_grad(m, x, eps); break;
        }
        d_theta += g.d_theta;
        const Eigen::VectorXd d_mean = g.d_phi.head(dz);
        d_weight += d_mean * x.transpose();
        d_bias += d_mean;
        d_log_std += g.d_phi.tail(dz);
      }
      const double scale = 1.0 / static_cast<double>(stop - start);
      d_theta *= scale;
      d_weight *= scale;
      d_bias *= scale;
      d_log_std *= scale;
      if (!finite(d_theta) || !d_weight.allFinite() || !finite(d_bias) || !finite(d_log_std)) {
        throw TrainingDiverged(epoch);
      }
      norm_theta += d_theta.norm();
      norm_phi += std::sqrt(d_weight.squaredNorm() + d_bias.squaredNorm() + d_log_std.squaredNorm());
      ++steps;

      ParamVector next = pack_params(p.decoder);
      next.theta += cfg.learning_rate * d_theta;
      try {
        p.decoder = unpack_params(p.decoder, next);
      } catch (const std::exception&) {
        throw TrainingDiverged(epoch);
      }
      p.encoder.weight += cfg.learning_rate * d_weight;
      p.encoder.bias += cfg.learning_rate * d_bias;
      p.encoder.log_std += cfg.learning_rate * d_log_std;
    }

    TrainRow row;
    try {
      row = evaluate(p, data, schedule, epoch);
    } catch (const std::domain_error&) {
      throw TrainingDiverged(epoch);
    }
    if (!std::isfinite(row.tvo_lower) || !std::isfinite(row.log_px)) throw TrainingDiverged(epoch);
    row.grad_norm_theta = norm_theta / static_cast<double>(steps);
    row.grad_norm_phi = norm_phi / static_cast<double>(steps);
    log.append(std::move(row));

    if (epoch % cfg.refresh_every == 0 && epoch < cfg.epochs) {
      schedule = choose_schedule(cfg, p, data, rng);
    }
  }
  return log;
}

TrainLog train(const ExperimentConfig& cfg) {
  TrainLog log = train(cfg, make_setup(cfg));
  write_output(cfg, "trainlog.csv", log.csv());
  return log;
}

}  // namespace tvo::harness
