#include "tvo/bounds.hpp"
#include "tvo/gradients.hpp"
#include "tvo/harness/battery.hpp"
#include "tvo/harness/config.hpp"
#include "tvo/harness/integrand.hpp"
#include "tvo/harness/study.hpp"
#include "tvo/harness/train.hpp"
#include "tvo/harness/verify.hpp"
#include "tvo/model_io.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

using namespace tvo;
using namespace tvo::harness;

// Flag storage; a flag only overrides the config when it was given.
struct Flags {
  std::string config, output_dir, model_spec, log_weights, objective, strategy;
  std::size_t K = 0, S = 0, J = 0, epochs = 0, refresh_every = 0, num_data = 0, batch_size = 0;
  double beta1 = 0.0, learning_rate = 0.0;
  std::uint64_t seed = 0;
  bool corrupt_eta = false;
  std::vector<CLI::Option*> opts;
};

void add_flags(CLI::App* app, Flags& f) {
  app->add_option("--config", f.config, "JSON config file")->check(CLI::ExistingFile);
  f.opts = {
      app->add_option("--output-dir", f.output_dir, "directory for output artifacts"),
      app->add_option("--model-spec", f.model_spec, "model JSON document")->check(CLI::ExistingFile),
      app->add_option("--log-weights", f.log_weights, "log-weight grid CSV")->check(CLI::ExistingFile),
      app->add_option("--objective", f.objective, "tvo, iwae or elbo"),
      app->add_option("--schedule-strategy", f.strategy,
                      "linear, log_uniform, moments or coarse_grained"),
      app->add_option("-K,--K", f.K, "partition intervals"),
      app->add_option("-S,--S", f.S, "samples per datapoint"),
      app->add_option("--beta1", f.beta1, "first point of the log-uniform schedule"),
      app->add_option("-J,--J", f.J, "coarse-grained knot intervals"),
      app->add_option("--epochs", f.epochs, "training epochs"),
      app->add_option("--learning-rate", f.learning_rate, "SGD step size"),
      app->add_option("--seed", f.seed, "random seed"),
      app->add_option("--refresh-every", f.refresh_every, "epochs between schedule refreshes"),
      app->add_option("--num-data", f.num_data, "synthetic dataset size"),
      app->add_option("--batch-size", f.batch_size, "minibatch size"),
      app->add_flag("--corrupt-eta", f.corrupt_eta, "negative control: perturb the eta table"),
  };
}

ExperimentConfig resolve(const Flags& f) {
  ExperimentConfig cfg;
  if (!f.config.empty()) cfg = load_config(f.config);
  auto given = [&](std::size_t i) { return f.opts[i]->count() > 0; };
  if (given(0)) cfg.output_dir = f.output_dir;
  if (given(1)) cfg.model_spec = f.model_spec;
  if (given(2)) cfg.log_weights = f.log_weights;
  if (given(3)) cfg.objective = parse_objective(f.objective);
  if (given(4)) cfg.schedule_strategy = parse_strategy(f.strategy);
  if (given(5)) cfg.K = f.K;
  if (given(6)) cfg.S = f.S;
  if (given(7)) cfg.beta1 = f.beta1;
  if (given(8)) cfg.J = f.J;
  if (given(9)) cfg.epochs = f.epochs;
  if (given(10)) cfg.learning_rate = f.learning_rate;
  if (given(11)) cfg.seed = f.seed;
  if (given(12)) cfg.refresh_every = f.refresh_every;
  if (given(13)) cfg.num_data = f.num_data;
  if (given(14)) cfg.batch_size = f.batch_size;
  if (given(15)) cfg.corrupt_eta = f.corrupt_eta;
  return cfg;
}

ExactModel exact_model(const ExperimentConfig& cfg) {
  return cfg.model_spec ? load_model(*cfg.model_spec).exact() : ExactModel{two_state_model()};
}

int cmd_verify(const ExperimentConfig& cfg) {
  const VerifyReport report = run_verify(cfg);
  std::cout << report_table(report);
  return report.all_pass() ? 0 : 1;
}

int cmd_study(const ExperimentConfig& cfg) {
  std::cout << study_csv(run_schedule_study(cfg));
  return 0;
}

int cmd_train(const ExperimentConfig& cfg) {
  const TrainLog log = train(cfg);
  const auto& a = log.initial();
  const auto& b = log.final();
  std::cout << "epochs " << b.epoch << "\ninitial KL " << a.kl_q_posterior << "\nfinal KL "
            << b.kl_q_posterior << "\nfinal tvo_lower " << b.tvo_lower << "\nfinal log p(x) "
            << b.log_px << '\n';
  return 0;
}

int cmd_integrand(const ExperimentConfig& cfg) {
  std::cout << integrand_csv(emit_integrand(cfg));
  return 0;
}

int cmd_schedule(const ExperimentConfig& cfg) {
  const ExactModel model = exact_model(cfg);
  const Schedule s = make_schedule(cfg.schedule_strategy, cfg.K, cfg.beta1, cfg.J,
                                   EtaEvaluator::exact(model));
  nlohmann::json doc{{"strategy", to_string(cfg.schedule_strategy)},
                     {"schedule", s},
                     {"bounds", bound_report(model, s)}};
  std::cout << doc.dump(2) << '\n';
  return 0;
}

int cmd_gradients(const ExperimentConfig& cfg, double beta, bool monte_carlo) {
  const GaussianDatum d = [&] {
    if (!cfg.model_spec) {
      std::mt19937_64 rng(cfg.seed);
      return random_scalar_datum(rng);
    }
    const ModelSpec spec = load_model(*cfg.model_spec);
    const ExactModel m = spec.exact();
    if (!std::holds_alternative<GaussianDatum>(m)) {
      throw std::invalid_argument("gradient diagnostics need a linear-Gaussian model");
    }
    return std::get<GaussianDatum>(m);
  }();
  std::mt19937_64 rng(cfg.seed);
  const SampleSet samples =
      monte_carlo ? draw_samples(d.model.latent_dim(), cfg.S, rng) : hermite_samples(d.model.latent_dim());
  nlohmann::json doc{{"beta", beta},
                     {"samples", monte_carlo ? "monte_carlo" : "gauss_hermite"},
                     {"reinforce", reinforce_grad(d.model, d.x, beta, samples)},
                     {"doubly_reparam", doubly_reparam_grad(d.model, d.x, beta, samples)},
                     {"finite_diff", finite_diff_grad(d.model, d.x, beta, FdTarget::eta())}};
  std::cout << doc.dump(2) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Thermodynamic variational objective toolkit"};
  app.require_subcommand(1);

  Flags verify_f, study_f, train_f, integrand_f, schedule_f, grad_f;
  auto* verify = app.add_subcommand("verify", "run the identity battery and write report.json");
  add_flags(verify, verify_f);
  auto* study = app.add_subcommand("schedule-study", "compare schedules and write study.csv");
  add_flags(study, study_f);
  auto* trainer = app.add_subcommand("train", "train on synthetic data and write trainlog.csv");
  add_flags(trainer, train_f);
  auto* integrand = app.add_subcommand("integrand", "tabulate eta and Var and write integrand.csv");
  add_flags(integrand, integrand_f);
  auto* schedule = app.add_subcommand("schedule", "print a schedule and its bounds as JSON");
  add_flags(schedule, schedule_f);
  auto* gradients = app.add_subcommand("gradients", "print gradient estimates as JSON");
  add_flags(gradients, grad_f);
  double beta = 0.5;
  bool monte_carlo = false;
  gradients->add_option("--beta", beta, "path point")->check(CLI::Range(0.0, 1.0));
  gradients->add_flag("--monte-carlo", monte_carlo, "sample instead of Gauss-Hermite quadrature");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*verify) return cmd_verify(resolve(verify_f));
    if (*study) return cmd_study(resolve(study_f));
    if (*trainer) {
      ExperimentConfig cfg = resolve(train_f);
      cfg.validate();
      return cmd_train(cfg);
    }
    if (*integrand) return cmd_integrand(resolve(integrand_f));
    if (*schedule) {
      ExperimentConfig cfg = resolve(schedule_f);
      cfg.validate();
      return cmd_schedule(cfg);
    }
    if (*gradients) return cmd_gradients(resolve(grad_f), beta, monte_carlo);
  } catch (const TrainingDiverged& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
