#pragma once

// JSON model documents:
//   {"type":"discrete","q":[...],"p":[...]}
//   {"type":"linear_gaussian","A":[[...]],"b":[...],"sigma":s,"m":[...],"t":[...]}
// A linear-Gaussian document may also carry the datapoint "x":[...] its encoder
// belongs to, which makes it exactly evaluable.

#include "tvo/path_models.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <variant>

namespace tvo {

struct ModelSpec {
  std::variant<DiscreteLatentModel, LinearGaussianModel> model;
  std::optional<Eigen::VectorXd> x;

  bool is_discrete() const { return std::holds_alternative<DiscreteLatentModel>(model); }
  const LinearGaussianModel& gaussian() const;

  // Throws std::invalid_argument for a linear-Gaussian spec without "x".
  ExactModel exact() const;
};

ModelSpec parse_model(const nlohmann::json& doc);
ModelSpec load_model(const std::filesystem::path& path);

nlohmann::json model_to_json(const DiscreteLatentModel& model);
nlohmann::json model_to_json(const LinearGaussianModel& model,
                             const std::optional<Eigen::VectorXd>& x = std::nullopt);

// The two-state reference model: q = (0.5, 0.5), p(x, z) = (0.1, 0.3).
DiscreteLatentModel two_state_model();

}  // namespace tvo
