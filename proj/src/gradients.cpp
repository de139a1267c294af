#include "tvo/gradients.hpp"

#include "tvo/bounds.hpp"
#include "tvo/quadrature.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace tvo {

namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;

// Per-sample quantities shared by every estimator.
struct SampleTable {
  Eigen::Index count = 0;
  std::vector<double> log_w;
  std::vector<double> log_base;
  Eigen::MatrixXd z;            // S x d_z
  Eigen::MatrixXd path_phi;     // dz/dphi . dlog w/dz
  Eigen::MatrixXd score_phi;    // dlog q/dphi at fixed z
  Eigen::MatrixXd dlogp_theta;  // dlog p(x, z)/dtheta at fixed z
};

Eigen::Index theta_size(const LinearGaussianModel& m) {
  return m.obs_dim() * m.latent_dim() + m.obs_dim() + 1;
}

SampleTable build_table(const LinearGaussianModel& model, const Eigen::VectorXd& x,
                        const SampleSet& samples, bool with_theta) {
  const Eigen::Index S = static_cast<Eigen::Index>(samples.size());
  const Eigen::Index dz = model.latent_dim();
  const Eigen::Index dx = model.obs_dim();
  if (samples.eps.rows() != S || samples.eps.cols() != dz) {
    throw std::invalid_argument("sample set does not match the latent dimension");
  }
  if (x.size() != dx) throw std::invalid_argument("datapoint has the wrong dimension");

  const auto& A = model.decoder_weight();
  const auto& b = model.decoder_bias();
  const auto& m = model.encoder_mean();
  const auto& t = model.encoder_stddev();
  const double sigma = model.obs_stddev();
  const double inv_s2 = 1.0 / (sigma * sigma);
  const double log_t_sum = t.array().log().sum();

  SampleTable tab;
  tab.count = S;
  tab.log_w.resize(static_cast<std::size_t>(S));
  tab.log_base = samples.log_base;
  tab.z.resize(S, dz);
  tab.path_phi.resize(S, 2 * dz);
  tab.score_phi.resize(S, 2 * dz);
  if (with_theta) tab.dlogp_theta.resize(S, theta_size(model));

  Eigen::VectorXd z(dz), r(dx), grad(dz);
  for (Eigen::Index s = 0; s < S; ++s) {
    double eps_sq = 0.0, z_sq = 0.0;
    for (Eigen::Index j = 0; j < dz; ++j) {
      const double e = samples.eps(s, j);
      z[j] = m[j] + t[j] * e;
      eps_sq += e * e;
      z_sq += z[j] * z[j];
    }
    r.noalias() = x - b - A * z;
    const double r_sq = r.squaredNorm();
    const double log_prior = -0.5 * z_sq - static_cast<double>(dz) * kHalfLog2Pi;
    const double log_lik = -0.5 * r_sq * inv_s2 - static_cast<double>(dx) * std::log(sigma) -
                           static_cast<double>(dx) * kHalfLog2Pi;
    const double log_q = -0.5 * eps_sq - log_t_sum - static_cast<double>(dz) * kHalfLog2Pi;
    tab.log_w[static_cast<std::size_t>(s)] = log_prior + log_lik - log_q;

    grad.noalias() = A.transpose() * r * inv_s2;
    for (Eigen::Index j = 0; j < dz; ++j) {
      const double e = samples.eps(s, j);
      const double g = grad[j] - z[j] + e / t[j];
      tab.z(s, j) = z[j];
      tab.path_phi(s, j) = g;
      tab.path_phi(s, dz + j) = g * t[j] * e;
      tab.score_phi(s, j) = e / t[j];
      tab.score_phi(s, dz + j) = e * e - 1.0;
    }
    if (with_theta) {
      Eigen::Index k = 0;
      for (Eigen::Index i = 0; i < dx; ++i) {
        for (Eigen::Index j = 0; j < dz; ++j) tab.dlogp_theta(s, k++) = r[i] * z[j] * inv_s2;
      }
      for (Eigen::Index i = 0; i < dx; ++i) tab.dlogp_theta(s, k++) = r[i] * inv_s2;
      tab.dlogp_theta(s, k) = r_sq * inv_s2 - static_cast<double>(dx);
    }
  }
  return tab;
}

Eigen::VectorXd path_weights(const SampleTable& tab, double beta) {
  Eigen::VectorXd w(tab.count);
  double mx = -std::numeric_limits<double>::infinity();
  for (Eigen::Index s = 0; s < tab.count; ++s) {
    const auto i = static_cast<std::size_t>(s);
    w[s] = tab.log_base[i] + beta * tab.log_w[i];
    mx = std::max(mx, w[s]);
  }
  w = (w.array() - mx).exp();
  return w / w.sum();
}

double weighted_mean(const Eigen::VectorXd& w, std::span<const double> v) {
  double acc = 0.0;
  for (Eigen::Index s = 0; s < w.size(); ++s) acc += w[s] * v[static_cast<std::size_t>(s)];
  return acc;
}

// Cov_w[a, B_col] for every column of B.
Eigen::VectorXd weighted_cov(const Eigen::VectorXd& w, std::span<const double> a,
                             const Eigen::MatrixXd& B) {
  const double a_bar = weighted_mean(w, a);
  const Eigen::RowVectorXd b_bar = w.transpose() * B;
  Eigen::VectorXd wa(w.size());
  for (Eigen::Index s = 0; s < w.size(); ++s) {
    wa[s] = w[s] * (a[static_cast<std::size_t>(s)] - a_bar);
  }
  return (B.rowwise() - b_bar).transpose() * wa;
}

void require_pair(const SampleSet& samples) {
  if (samples.size() < 2) throw std::invalid_argument("estimator needs at least two samples");
}

void require_beta(double beta) {
  if (!(beta >= 0.0 && beta <= 1.0)) throw std::invalid_argument("beta must lie in [0, 1]");
}

// f, dz/dphi . df/dz and the total df/dphi along z = m + t eps, per sample.
struct FunctionTerms {
  std::vector<double> value;
  Eigen::MatrixXd path;
  Eigen::MatrixXd total;
};

FunctionTerms function_terms(const SampleTable& tab, const LinearGaussianModel& model,
                             const SampleSet& samples, const TestFunction& f) {
  const Eigen::Index S = tab.count;
  const Eigen::Index dz = model.latent_dim();
  FunctionTerms out;
  out.value.resize(static_cast<std::size_t>(S));
  out.path = Eigen::MatrixXd::Zero(S, 2 * dz);
  switch (f.kind) {
    case TestFunction::Kind::constant:
      std::fill(out.value.begin(), out.value.end(), f.value);
      out.total = out.path;
      break;
    case TestFunction::Kind::log_w:
      out.value = tab.log_w;
      out.path = tab.path_phi;
      out.total = tab.path_phi - tab.score_phi;
      break;
    case TestFunction::Kind::log_w_squared:
      for (Eigen::Index s = 0; s < S; ++s) {
        const double lw = tab.log_w[static_cast<std::size_t>(s)];
        out.value[static_cast<std::size_t>(s)] = lw * lw;
        out.path.row(s) = 2.0 * lw * tab.path_phi.row(s);
      }
      out.total = out.path;
      for (Eigen::Index s = 0; s < S; ++s) {
        out.total.row(s) -= 2.0 * tab.log_w[static_cast<std::size_t>(s)] * tab.score_phi.row(s);
      }
      break;
    case TestFunction::Kind::coordinate: {
      const Eigen::Index j = f.coordinate;
      if (j < 0 || j >= dz) throw std::invalid_argument("coordinate index out of range");
      const auto& t = model.encoder_stddev();
      for (Eigen::Index s = 0; s < S; ++s) {
        out.value[static_cast<std::size_t>(s)] = tab.z(s, j);
        out.path(s, j) = 1.0;
        out.path(s, dz + j) = t[j] * samples.eps(s, j);
      }
      out.total = out.path;
      break;
    }
  }
  return out;
}

}  // namespace

ParamVector pack_params(const LinearGaussianModel& model) {
  const Eigen::Index dz = model.latent_dim();
  const Eigen::Index dx = model.obs_dim();
  ParamVector p;
  p.theta.resize(theta_size(model));
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < dx; ++i) {
    for (Eigen::Index j = 0; j < dz; ++j) p.theta[k++] = model.decoder_weight()(i, j);
  }
  for (Eigen::Index i = 0; i < dx; ++i) p.theta[k++] = model.decoder_bias()[i];
  p.theta[k] = std::log(model.obs_stddev());
  p.phi.resize(2 * dz);
  p.phi.head(dz) = model.encoder_mean();
  p.phi.tail(dz) = model.encoder_stddev().array().log().matrix();
  return p;
}

LinearGaussianModel unpack_params(const LinearGaussianModel& shape, const ParamVector& params) {
  const Eigen::Index dz = shape.latent_dim();
  const Eigen::Index dx = shape.obs_dim();
  if (params.theta.size() != theta_size(shape) || params.phi.size() != 2 * dz) {
    throw std::invalid_argument("parameter vector has the wrong shape");
  }
  Eigen::MatrixXd A(dx, dz);
  Eigen::VectorXd b(dx);
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < dx; ++i) {
    for (Eigen::Index j = 0; j < dz; ++j) A(i, j) = params.theta[k++];
  }
  for (Eigen::Index i = 0; i < dx; ++i) b[i] = params.theta[k++];
  const double sigma = std::exp(params.theta[k]);
  Eigen::VectorXd m = params.phi.head(dz);
  Eigen::VectorXd t = params.phi.tail(dz).array().exp().matrix();
  return LinearGaussianModel(std::move(A), std::move(b), sigma, std::move(m), std::move(t));
}

std::string_view to_string(EstimatorTag tag) {
  switch (tag) {
    case EstimatorTag::reinforce: return "reinforce";
    case EstimatorTag::doubly_reparam: return "doubly_reparam";
    case EstimatorTag::finite_diff: return "finite_diff";
  }
  return "unknown";
}

void to_json(nlohmann::json& j, const GradEstimate& g) {
  auto vec = [](const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  j = nlohmann::json{{"estimator_tag", to_string(g.estimator_tag)},
                     {"d_theta", vec(g.d_theta)},
                     {"d_phi", vec(g.d_phi)}};
}

SampleSet draw_samples(Eigen::Index latent_dim, std::size_t count, std::mt19937_64& rng) {
  if (latent_dim < 1 || count < 1) throw std::invalid_argument("empty sample set");
  std::normal_distribution<double> normal;
  SampleSet set;
  set.eps.resize(static_cast<Eigen::Index>(count), latent_dim);
  for (Eigen::Index s = 0; s < set.eps.rows(); ++s) {
    for (Eigen::Index j = 0; j < latent_dim; ++j) set.eps(s, j) = normal(rng);
  }
  set.log_base.assign(count, 0.0);
  return set;
}

SampleSet hermite_samples(Eigen::Index latent_dim, std::size_t nodes) {
  if (latent_dim < 1 || latent_dim > 2) {
    throw std::invalid_argument("quadrature sample sets support one or two latent dimensions");
  }
  const QuadratureRule rule = gauss_hermite(nodes);
  SampleSet set;
  if (latent_dim == 1) {
    set.eps.resize(static_cast<Eigen::Index>(nodes), 1);
    for (std::size_t i = 0; i < nodes; ++i) {
      set.eps(static_cast<Eigen::Index>(i), 0) = rule.nodes[i];
      set.log_base.push_back(std::log(rule.weights[i]));
    }
    return set;
  }
  set.eps.resize(static_cast<Eigen::Index>(nodes * nodes), 2);
  Eigen::Index s = 0;
  for (std::size_t i = 0; i < nodes; ++i) {
    for (std::size_t k = 0; k < nodes; ++k, ++s) {
      set.eps(s, 0) = rule.nodes[i];
      set.eps(s, 1) = rule.nodes[k];
      set.log_base.push_back(std::log(rule.weights[i]) + std::log(rule.weights[k]));
    }
  }
  return set;
}

std::vector<double> sample_log_weights(const LinearGaussianModel& model, const Eigen::VectorXd& x,
                                       const SampleSet& samples) {
  return build_table(model, x, samples, false).log_w;
}

TestFunction TestFunction::parse(std::string_view spec) {
  if (spec == "log_w") return log_w();
  if (spec == "log_w_squared") return log_w_squared();
  if (spec == "constant") return constant(1.0);
  if (spec.size() > 1 && spec.front() == 'z') {
    long j = 0;
    const auto* first = spec.data() + 1;
    const auto* last = spec.data() + spec.size();
    auto [ptr, ec] = std::from_chars(first, last, j);
    if (ec == std::errc() && ptr == last && j >= 0) return z(static_cast<Eigen::Index>(j));
  }
  throw std::invalid_argument("unknown test function: " + std::string(spec));
}

GradEstimate reinforce_grad(const LinearGaussianModel& model, const Eigen::VectorXd& x,
                            double beta, const SampleSet& samples) {
  require_beta(beta);
  require_pair(samples);
  const SampleTable tab = build_table(model, x, samples, true);
  const Eigen::VectorXd w = path_weights(tab, beta);
  GradEstimate g;
  g.estimator_tag = EstimatorTag::reinforce;
  g.d_theta = tab.dlogp_theta.transpose() * w + beta * weighted_cov(w, tab.log_w, tab.dlogp_theta);
  g.d_phi = -(tab.score_phi.transpose() * w) +
            (1.0 - beta) * weighted_cov(w, tab.log_w, tab.score_phi);
  return g;
}

ReparamCoefficients doubly_reparam_coefficients(double beta) {
  require_beta(beta);
  return {1.0 - 2.0 * beta, beta * (1.0 - beta)};
}

GradEstimate doubly_reparam_grad(const LinearGaussianModel& model, const Eigen::VectorXd& x,
                                 double beta, const SampleSet& samples) {
  const ReparamCoefficients c = doubly_reparam_coefficients(beta);
  require_pair(samples);
  const SampleTable tab = build_table(model, x, samples, false);
  const Eigen::VectorXd w = path_weights(tab, beta);
  GradEstimate g;
  g.estimator_tag = EstimatorTag::doubly_reparam;
  g.d_phi = c.leading * (tab.path_phi.transpose() * w) +
            c.covariance * weighted_cov(w, tab.log_w, tab.path_phi);
  return g;
}

GradEstimate generic_reparam_grad(const LinearGaussianModel& model, const Eigen::VectorXd& x,
                                  double beta, const TestFunction& f, const SampleSet& samples) {
  const ReparamCoefficients c = doubly_reparam_coefficients(beta);
  require_pair(samples);
  const SampleTable tab = build_table(model, x, samples, false);
  const FunctionTerms ft = function_terms(tab, model, samples, f);
  const Eigen::VectorXd w = path_weights(tab, beta);
  GradEstimate g;
  g.estimator_tag = EstimatorTag::doubly_reparam;
  g.d_phi = (ft.total - beta * ft.path).transpose() * w +
            c.covariance * weighted_cov(w, ft.value, tab.path_phi);
  return g;
}

GradEstimate tvo_lower_grad(const LinearGaussianModel& model, const Eigen::VectorXd& x,
                            const Schedule& schedule, const SampleSet& samples) {
  require_pair(samples);
  const SampleTable tab = build_table(model, x, samples, true);
  GradEstimate g;
  g.estimator_tag = EstimatorTag::doubly_reparam;
  g.d_theta = Eigen::VectorXd::Zero(tab.dlogp_theta.cols());
  g.d_phi = Eigen::VectorXd::Zero(tab.path_phi.cols());
  const auto betas = schedule.betas();
  for (std::size_t k = 0; k + 1 < betas.size(); ++k) {
    const double beta = betas[k];
    const double width = betas[k + 1] - beta;
    const ReparamCoefficients c = doubly_reparam_coefficients(beta);
    const Eigen::VectorXd w = path_weights(tab, beta);
    g.d_theta += width * (tab.dlogp_theta.transpose() * w +
                          beta * weighted_cov(w, tab.log_w, tab.dlogp_theta));
    g.d_phi += width * (c.leading * (tab.path_phi.transpose() * w) +
                        c.covariance * weighted_cov(w, tab.log_w, tab.path_phi));
  }
  return g;
}

GradEstimate iwae_grad(const LinearGaussianModel& model, const Eigen::VectorXd& x,
                       const SampleSet& samples) {
  const SampleTable tab = build_table(model, x, samples, true);
  const Eigen::VectorXd w = path_weights(tab, 1.0);
  GradEstimate g;
  g.estimator_tag = EstimatorTag::doubly_reparam;
  g.d_theta = tab.dlogp_theta.transpose() * w;
  g.d_phi = (tab.path_phi - tab.score_phi).transpose() * w;
  return g;
}

double LemmaReport::max_residual() const {
  return std::max({expectation_log_w.residual(), expectation_coordinate.residual(), expectation_constant.residual(),
                   partition_derivative.residual()});
}

LemmaReport lemma_checks(const LinearGaussianModel& model, const Eigen::VectorXd& x, double beta) {
  require_beta(beta);
  const Eigen::Index dz = model.latent_dim();
  const SampleSet samples = hermite_samples(dz);
  const SampleTable tab = build_table(model, x, samples, false);
  const Eigen::VectorXd w = path_weights(tab, beta);
  const ParamVector base = pack_params(model);
  const Eigen::Index nphi = base.phi.size();

  // Total derivative of log w along z = m + t eps, by central differences with eps fixed.
  Eigen::MatrixXd dlogw(tab.count, nphi);
  Eigen::VectorXd dpsi(nphi);
  for (Eigen::Index p = 0; p < nphi; ++p) {
    const double h = 1e-5 * std::max(1.0, std::abs(base.phi[p]));
    ParamVector up = base, dn = base;
    up.phi[p] += h;
    dn.phi[p] -= h;
    const LinearGaussianModel mu = unpack_params(model, up);
    const LinearGaussianModel md = unpack_params(model, dn);
    const SampleTable tu = build_table(mu, x, samples, false);
    const SampleTable td = build_table(md, x, samples, false);
    for (Eigen::Index s = 0; s < tab.count; ++s) {
      const auto i = static_cast<std::size_t>(s);
      dlogw(s, p) = (tu.log_w[i] - td.log_w[i]) / (2.0 * h);
    }
    dpsi[p] = (gaussian_path_moments(mu, x, beta).psi - gaussian_path_moments(md, x, beta).psi) /
              (2.0 * h);
  }

  auto expectation_identity = [&](const TestFunction& f) {
    const FunctionTerms ft = function_terms(tab, model, samples, f);
    LemmaResidual r;
    Eigen::MatrixXd weighted = dlogw;
    for (Eigen::Index s = 0; s < tab.count; ++s) {
      weighted.row(s) *= ft.value[static_cast<std::size_t>(s)];
    }
    r.lhs = weighted.transpose() * w;
    Eigen::MatrixXd rhs_terms = -ft.path;
    for (Eigen::Index s = 0; s < tab.count; ++s) {
      rhs_terms.row(s) += (1.0 - beta) * ft.value[static_cast<std::size_t>(s)] * tab.path_phi.row(s);
    }
    r.rhs = rhs_terms.transpose() * w;
    return r;
  };

  LemmaReport rep;
  rep.expectation_log_w = expectation_identity(TestFunction::log_w());
  rep.expectation_coordinate = expectation_identity(TestFunction::z(0));
  rep.expectation_constant.lhs = dlogw.transpose() * w;
  rep.expectation_constant.rhs = (1.0 - beta) * (tab.path_phi.transpose() * w);
  rep.partition_derivative.lhs = dpsi;
  rep.partition_derivative.rhs = beta * (1.0 - beta) * (tab.path_phi.transpose() * w);
  return rep;
}

double fd_target_value(const LinearGaussianModel& model, const Eigen::VectorXd& x, double beta,
                       const FdTarget& target) {
  switch (target.kind) {
    case FdTargetKind::eta: return gaussian_path_moments(model, x, beta).eta;
    case FdTargetKind::psi: return gaussian_path_moments(model, x, beta).psi;
    case FdTargetKind::tvo_lower: {
      if (!target.schedule) throw std::invalid_argument("tvo_lower target needs a schedule");
      const std::vector<double> etas = exact_etas(GaussianDatum{model, x}, *target.schedule);
      return tvo_lower(etas, *target.schedule);
    }
    case FdTargetKind::expectation: {
      const TestFunction& f = target.f;
      switch (f.kind) {
        case TestFunction::Kind::constant: return f.value;
        case TestFunction::Kind::log_w: return gaussian_path_moments(model, x, beta).eta;
        case TestFunction::Kind::log_w_squared: {
          const PathMoments pm = gaussian_path_moments(model, x, beta);
          return pm.var + pm.eta * pm.eta;
        }
        case TestFunction::Kind::coordinate: {
          const Gaussian pi = gaussian_path_distribution(model, x, beta);
          if (f.coordinate < 0 || f.coordinate >= pi.mean.size()) {
            throw std::invalid_argument("coordinate index out of range");
          }
          return pi.mean[f.coordinate];
        }
      }
    }
  }
  throw std::invalid_argument("unknown finite-difference target");
}

GradEstimate finite_diff_grad(const LinearGaussianModel& model, const Eigen::VectorXd& x,
                              double beta, const FdTarget& target) {
  require_beta(beta);
  const ParamVector base = pack_params(model);
  auto diff = [&](Eigen::VectorXd ParamVector::*member) {
    const Eigen::VectorXd& v = base.*member;
    Eigen::VectorXd out(v.size());
    for (Eigen::Index p = 0; p < v.size(); ++p) {
      const double h = 1e-5 * std::max(1.0, std::abs(v[p]));
      ParamVector up = base, dn = base;
      (up.*member)[p] += h;
      (dn.*member)[p] -= h;
      out[p] = (fd_target_value(unpack_params(model, up), x, beta, target) -
                fd_target_value(unpack_params(model, dn), x, beta, target)) /
               (2.0 * h);
    }
    return out;
  };
  GradEstimate g;
  g.estimator_tag = EstimatorTag::finite_diff;
  g.d_theta = diff(&ParamVector::theta);
  g.d_phi = diff(&ParamVector::phi);
  return g;
}

}  // namespace tvo
