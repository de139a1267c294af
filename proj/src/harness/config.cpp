#include "tvo/harness/config.hpp"

#include <fstream>
#include <set>
#include <stdexcept>

namespace tvo::harness {

using nlohmann::json;

std::string_view to_string(Objective o) {
  switch (o) {
    case Objective::tvo: return "tvo";
    case Objective::iwae: return "iwae";
    case Objective::elbo: return "elbo";
  }
  return "tvo";
}

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::linear: return "linear";
    case Strategy::log_uniform: return "log_uniform";
    case Strategy::moments: return "moments";
    case Strategy::coarse_grained: return "coarse_grained";
  }
  return "linear";
}

Objective parse_objective(std::string_view name) {
  for (auto o : {Objective::tvo, Objective::iwae, Objective::elbo}) {
    if (name == to_string(o)) return o;
  }
  throw std::invalid_argument("unknown objective: " + std::string(name));
}

Strategy parse_strategy(std::string_view name) {
  for (auto s : {Strategy::linear, Strategy::log_uniform, Strategy::moments, Strategy::coarse_grained}) {
    if (name == to_string(s)) return s;
  }
  throw std::invalid_argument("unknown schedule strategy: " + std::string(name));
}

void ExperimentConfig::validate() const {
  if (K < 1) throw std::invalid_argument("K must be at least 1");
  if (S < 1) throw std::invalid_argument("S must be at least 1");
  if (epochs < 1) throw std::invalid_argument("epochs must be at least 1");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be positive");
  if (refresh_every < 1) throw std::invalid_argument("refresh_every must be at least 1");
  if (num_data < 1 || batch_size < 1) throw std::invalid_argument("empty dataset or batch");
  const bool log_uniform = schedule_strategy == Strategy::log_uniform;
  if (log_uniform != beta1.has_value()) {
    throw std::invalid_argument("beta1 is required exactly when the strategy is log_uniform");
  }
  if (beta1 && !(*beta1 > 0.0 && *beta1 < 1.0)) throw std::invalid_argument("beta1 must lie in (0, 1)");
  if (J && *J < 1) throw std::invalid_argument("J must be at least 1");
}

ExperimentConfig config_from_json(const json& doc, ExperimentConfig cfg) {
  static const std::set<std::string> known = {
      "model_spec", "log_weights", "objective", "schedule_strategy", "K",         "S",
      "beta1",      "J",           "epochs",    "learning_rate",     "seed",      "refresh_every",
      "num_data",   "batch_size",  "corrupt_eta", "output_dir"};
  if (!doc.is_object()) throw std::invalid_argument("config must be a JSON object");
  for (const auto& [key, _] : doc.items()) {
    if (!known.contains(key)) throw std::invalid_argument("unknown config key: " + key);
  }
  auto get = [&](const char* key, auto& field) {
    if (doc.contains(key)) field = doc.at(key).get<std::decay_t<decltype(field)>>();
  };
  auto present = [&](const char* key) { return doc.contains(key) && !doc.at(key).is_null(); };
  if (present("model_spec")) cfg.model_spec = doc.at("model_spec").get<std::string>();
  if (present("log_weights")) cfg.log_weights = doc.at("log_weights").get<std::string>();
  if (doc.contains("objective")) cfg.objective = parse_objective(doc.at("objective").get<std::string>());
  if (doc.contains("schedule_strategy")) {
    cfg.schedule_strategy = parse_strategy(doc.at("schedule_strategy").get<std::string>());
  }
  get("K", cfg.K);
  get("S", cfg.S);
  if (present("beta1")) cfg.beta1 = doc.at("beta1").get<double>();
  if (present("J")) cfg.J = doc.at("J").get<std::size_t>();
  get("epochs", cfg.epochs);
  get("learning_rate", cfg.learning_rate);
  get("seed", cfg.seed);
  get("refresh_every", cfg.refresh_every);
  get("num_data", cfg.num_data);
  get("batch_size", cfg.batch_size);
  get("corrupt_eta", cfg.corrupt_eta);
  if (doc.contains("output_dir")) cfg.output_dir = doc.at("output_dir").get<std::string>();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::parse_error& e) {
    throw std::runtime_error("malformed config " + path.string() + ": " + e.what());
  }
  return config_from_json(doc, std::move(base));
}

json config_to_json(const ExperimentConfig& cfg) {
  json doc{{"objective", to_string(cfg.objective)},
           {"schedule_strategy", to_string(cfg.schedule_strategy)},
           {"K", cfg.K},
           {"S", cfg.S},
           {"epochs", cfg.epochs},
           {"learning_rate", cfg.learning_rate},
           {"seed", cfg.seed},
           {"refresh_every", cfg.refresh_every},
           {"num_data", cfg.num_data},
           {"batch_size", cfg.batch_size},
           {"corrupt_eta", cfg.corrupt_eta}};
  doc["model_spec"] = cfg.model_spec ? json(cfg.model_spec->string()) : json(nullptr);
  doc["log_weights"] = cfg.log_weights ? json(cfg.log_weights->string()) : json(nullptr);
  doc["beta1"] = cfg.beta1 ? json(*cfg.beta1) : json(nullptr);
  doc["J"] = cfg.J ? json(*cfg.J) : json(nullptr);
  return doc;
}

std::filesystem::path write_output(const ExperimentConfig& cfg, std::string_view name,
                                   std::string_view text) {
  std::filesystem::create_directories(cfg.output_dir);
  const auto path = cfg.output_dir / name;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  return path;
}

}  // namespace tvo::harness
