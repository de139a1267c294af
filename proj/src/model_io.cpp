#include "tvo/model_io.hpp"

#include <fstream>
#include <stdexcept>
#include <string>

namespace tvo {

namespace {

using nlohmann::json;

Eigen::VectorXd read_vector(const json& doc, const char* key) {
  if (!doc.contains(key) || !doc.at(key).is_array()) {
    throw std::invalid_argument(std::string("model field \"") + key + "\" must be an array");
  }
  const auto v = doc.at(key).get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Eigen::MatrixXd read_matrix(const json& doc, const char* key) {
  if (!doc.contains(key) || !doc.at(key).is_array() || doc.at(key).empty()) {
    throw std::invalid_argument(std::string("model field \"") + key + "\" must be a nested array");
  }
  const auto rows = doc.at(key).get<std::vector<std::vector<double>>>();
  const std::size_t cols = rows.front().size();
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != cols) throw std::invalid_argument("ragged matrix in model document");
    for (std::size_t j = 0; j < cols; ++j) {
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  return out;
}

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

const LinearGaussianModel& ModelSpec::gaussian() const {
  if (const auto* g = std::get_if<LinearGaussianModel>(&model)) return *g;
  throw std::invalid_argument("model is not linear-Gaussian");
}

ExactModel ModelSpec::exact() const {
  if (const auto* d = std::get_if<DiscreteLatentModel>(&model)) return *d;
  if (!x) throw std::invalid_argument("linear-Gaussian model needs a datapoint \"x\"");
  return GaussianDatum{gaussian(), *x};
}

ModelSpec parse_model(const json& doc) {
  if (!doc.is_object() || !doc.contains("type")) {
    throw std::invalid_argument("model document needs a \"type\" field");
  }
  const auto type = doc.at("type").get<std::string>();
  if (type == "discrete") {
    const auto q = doc.at("q").get<std::vector<double>>();
    const auto p = doc.at("p").get<std::vector<double>>();
    return ModelSpec{DiscreteLatentModel(q, p), std::nullopt};
  }
  if (type == "linear_gaussian") {
    LinearGaussianModel m(read_matrix(doc, "A"), read_vector(doc, "b"), doc.at("sigma").get<double>(),
                          read_vector(doc, "m"), read_vector(doc, "t"));
    std::optional<Eigen::VectorXd> x;
    if (doc.contains("x")) {
      x = read_vector(doc, "x");
      if (x->size() != m.obs_dim()) throw std::invalid_argument("datapoint has the wrong dimension");
    }
    return ModelSpec{std::move(m), std::move(x)};
  }
  throw std::invalid_argument("unknown model type: " + type);
}

ModelSpec load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read model spec " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::parse_error& e) {
    throw std::runtime_error("malformed model spec " + path.string() + ": " + e.what());
  }
  return parse_model(doc);
}

json model_to_json(const DiscreteLatentModel& model) {
  std::vector<double> q, p;
  for (double v : model.log_q()) q.push_back(std::exp(v));
  for (double v : model.log_joint()) p.push_back(std::exp(v));
  return json{{"type", "discrete"}, {"q", q}, {"p", p}};
}

json model_to_json(const LinearGaussianModel& model, const std::optional<Eigen::VectorXd>& x) {
  std::vector<std::vector<double>> A;
  for (Eigen::Index i = 0; i < model.obs_dim(); ++i) {
    A.push_back(to_std(model.decoder_weight().row(i).transpose()));
  }
  json doc{{"type", "linear_gaussian"},
           {"A", A},
           {"b", to_std(model.decoder_bias())},
           {"sigma", model.obs_stddev()},
           {"m", to_std(model.encoder_mean())},
           {"t", to_std(model.encoder_stddev())}};
  if (x) doc["x"] = to_std(*x);
  return doc;
}

DiscreteLatentModel two_state_model() {
  const double q[] = {0.5, 0.5};
  const double p[] = {0.1, 0.3};
  return DiscreteLatentModel(q, p);
}

}  // namespace tvo
