#pragma once

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

namespace tvo::harness {

enum class Objective { tvo, iwae, elbo };
enum class Strategy { linear, log_uniform, moments, coarse_grained };

std::string_view to_string(Objective o);
std::string_view to_string(Strategy s);
Objective parse_objective(std::string_view name);
Strategy parse_strategy(std::string_view name);

struct ExperimentConfig {
  std::optional<std::filesystem::path> model_spec;
  std::optional<std::filesystem::path> log_weights;  // CSV grid for the integrand path
  Objective objective = Objective::tvo;
  Strategy schedule_strategy = Strategy::moments;
  std::size_t K = 2;
  std::size_t S = 100;
  std::optional<double> beta1;
  std::optional<std::size_t> J;
  std::size_t epochs = 500;
  double learning_rate = 1e-2;
  std::uint64_t seed = 0;
  std::size_t refresh_every = 1;
  std::size_t num_data = 256;
  std::size_t batch_size = 16;
  bool corrupt_eta = false;  // negative control for verify
  std::filesystem::path output_dir = ".";

  // Throws std::invalid_argument on a violated invariant.
  void validate() const;
};

// Missing keys keep their defaults; unknown keys are rejected.
ExperimentConfig config_from_json(const nlohmann::json& doc, ExperimentConfig base = {});
ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base = {});
nlohmann::json config_to_json(const ExperimentConfig& cfg);

// Writes text to output_dir / name, creating the directory.
std::filesystem::path write_output(const ExperimentConfig& cfg, std::string_view name,
                                   std::string_view text);

}  // namespace tvo::harness
