#include "lope/models/regressor.hpp"

#include <vector>

#include "lope/error.hpp"

namespace lope {
namespace {

nlohmann::json vector_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Vector vector_from(const nlohmann::json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

// Row-major nested arrays.
nlohmann::json matrix_json(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(vector_json(m.row(i).transpose()));
  return rows;
}

Matrix matrix_from(const nlohmann::json& j, Eigen::Index cols_if_empty = 0) {
  if (j.empty()) return Matrix(0, cols_if_empty);
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(j.front().size());
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    if (static_cast<Eigen::Index>(j[static_cast<std::size_t>(i)].size()) != cols) {
      throw DimensionError("ragged matrix in model JSON");
    }
    m.row(i) = vector_from(j[static_cast<std::size_t>(i)]).transpose();
  }
  return m;
}

}  // namespace

double Regressor::predict(const Eigen::Ref<const Vector>& x) const {
  return std::visit([&](const auto& m) { return m.predict(x); }, model_);
}

Vector Regressor::predict(const Matrix& X) const {
  return std::visit([&](const auto& m) -> Vector { return m.predict(X); }, model_);
}

RegressorFamily Regressor::family() const {
  return std::holds_alternative<RidgeModel>(model_) ? RegressorFamily::kRidge : RegressorFamily::kMlp;
}

Regressor fit_regressor(const Matrix& X, const Vector& y, const RegressorConfig& config, std::uint64_t seed) {
  switch (config.family) {
    case RegressorFamily::kRidge:
      return Regressor(fit_ridge(X, y, config.ridge_l2));
    case RegressorFamily::kMlp:
      return Regressor(fit_mlp(X, y, config.mlp, seed));
  }
  throw ConfigError("unknown regressor family");
}

std::string to_string(RegressorFamily family) { return family == RegressorFamily::kRidge ? "ridge" : "mlp"; }

RegressorFamily regressor_family_from_string(const std::string& name) {
  if (name == "ridge") return RegressorFamily::kRidge;
  if (name == "mlp") return RegressorFamily::kMlp;
  throw ConfigError("unknown regressor family '" + name + "' (expected ridge or mlp)");
}

nlohmann::json to_json(const RidgeModel& model) {
  return {{"type", "ridge"}, {"weights", vector_json(model.weights)}, {"intercept", model.intercept}, {"l2", model.l2}};
}

RidgeModel ridge_from_json(const nlohmann::json& j) {
  RidgeModel m;
  m.weights = vector_from(j.at("weights"));
  m.intercept = j.at("intercept").get<double>();
  m.l2 = j.value("l2", 0.0);
  return m;
}

nlohmann::json to_json(const SoftmaxClassifier& model) {
  return {{"type", "softmax_classifier"},
          {"weight_matrix", matrix_json(model.weight_matrix())},
          {"intercepts", vector_json(model.intercepts())},
          {"feature_mean", vector_json(model.feature_mean())},
          {"feature_scale", vector_json(model.feature_scale())}};
}

SoftmaxClassifier softmax_classifier_from_json(const nlohmann::json& j) {
  return SoftmaxClassifier(matrix_from(j.at("weight_matrix")), vector_from(j.at("intercepts")),
                           vector_from(j.at("feature_mean")), vector_from(j.at("feature_scale")));
}

nlohmann::json to_json(const Mlp& net) {
  nlohmann::json layers = nlohmann::json::array();
  for (std::size_t l = 0; l < net.layer_weights().size(); ++l) {
    layers.push_back({{"weights", matrix_json(net.layer_weights()[l])}, {"bias", vector_json(net.layer_biases()[l])}});
  }
  return {{"type", "mlp"}, {"widths", net.widths()}, {"layers", layers}};
}

Mlp mlp_from_json(const nlohmann::json& j) {
  Mlp net(j.at("widths").get<std::vector<std::size_t>>(), 0);
  Vector theta(static_cast<Eigen::Index>(net.n_parameters()));
  Eigen::Index offset = 0;
  for (const auto& layer : j.at("layers")) {
    const Matrix w = matrix_from(layer.at("weights"));
    const Vector b = vector_from(layer.at("bias"));
    theta.segment(offset, w.size()) = Eigen::Map<const Vector>(w.data(), w.size());
    offset += w.size();
    theta.segment(offset, b.size()) = b;
    offset += b.size();
  }
  net.set_parameters(theta);
  return net;
}

nlohmann::json to_json(const MlpRegressor& model) {
  return {{"type", "mlp_regressor"},
          {"net", to_json(model.net())},
          {"input_mean", vector_json(model.input_mean())},
          {"input_scale", vector_json(model.input_scale())},
          {"target_mean", model.target_mean()},
          {"target_scale", model.target_scale()}};
}

MlpRegressor mlp_regressor_from_json(const nlohmann::json& j) {
  return MlpRegressor(mlp_from_json(j.at("net")), vector_from(j.at("input_mean")), vector_from(j.at("input_scale")),
                      j.at("target_mean").get<double>(), j.at("target_scale").get<double>());
}

nlohmann::json to_json(const Regressor& model) {
  return std::visit([](const auto& m) { return to_json(m); }, model.model());
}

Regressor regressor_from_json(const nlohmann::json& j) {
  const auto type = j.at("type").get<std::string>();
  if (type == "ridge") return Regressor(ridge_from_json(j));
  if (type == "mlp_regressor") return Regressor(mlp_regressor_from_json(j));
  throw ValidationError("unknown regressor type '" + type + "'");
}

nlohmann::json to_json(const RegressorConfig& config) {
  return {{"family", to_string(config.family)},
          {"ridge_l2", config.ridge_l2},
          {"mlp",
           {{"hidden", config.mlp.hidden},
            {"learning_rate", config.mlp.learning_rate},
            {"epochs", config.mlp.epochs},
            {"batch_size", config.mlp.batch_size},
            {"l2", config.mlp.l2}}}};
}

RegressorConfig regressor_config_from_json(const nlohmann::json& j) {
  RegressorConfig c;
  if (j.contains("family")) c.family = regressor_family_from_string(j.at("family").get<std::string>());
  c.ridge_l2 = j.value("ridge_l2", c.ridge_l2);
  if (j.contains("mlp")) {
    const auto& m = j.at("mlp");
    c.mlp.hidden = m.value("hidden", c.mlp.hidden);
    c.mlp.learning_rate = m.value("learning_rate", c.mlp.learning_rate);
    c.mlp.epochs = m.value("epochs", c.mlp.epochs);
    c.mlp.batch_size = m.value("batch_size", c.mlp.batch_size);
    c.mlp.l2 = m.value("l2", c.mlp.l2);
  }
  return c;
}

nlohmann::json to_json(const SoftmaxClassifierConfig& config) {
  return {{"learning_rate", config.learning_rate},
          {"epochs", config.epochs},
          {"l2", config.l2},
          {"n_classes", config.n_classes},
          {"standardize", config.standardize}};
}

SoftmaxClassifierConfig softmax_config_from_json(const nlohmann::json& j) {
  SoftmaxClassifierConfig c;
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.epochs = j.value("epochs", c.epochs);
  c.l2 = j.value("l2", c.l2);
  c.n_classes = j.value("n_classes", c.n_classes);
  c.standardize = j.value("standardize", c.standardize);
  return c;
}

}  // namespace lope
