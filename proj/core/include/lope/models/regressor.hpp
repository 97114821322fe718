#pragma once

#include <cstdint>
#include <string>
#include <variant>

#include <nlohmann/json.hpp>

#include "lope/models/mlp.hpp"
#include "lope/models/ridge.hpp"
#include "lope/models/softmax_classifier.hpp"

namespace lope {

enum class RegressorFamily { kRidge, kMlp };

struct RegressorConfig {
  RegressorFamily family = RegressorFamily::kRidge;
  double ridge_l2 = 1.0;
  MlpConfig mlp;
};

/// A fitted scalar regressor from one of the supported families.
class Regressor {
 public:
  Regressor() = default;
  explicit Regressor(RidgeModel model) : model_(std::move(model)) {}
  explicit Regressor(MlpRegressor model) : model_(std::move(model)) {}

  double predict(const Eigen::Ref<const Vector>& x) const;
  double predict(const Vector& x) const { return predict(Eigen::Ref<const Vector>(x)); }
  Vector predict(const Matrix& X) const;
  RegressorFamily family() const;
  const std::variant<RidgeModel, MlpRegressor>& model() const { return model_; }

 private:
  std::variant<RidgeModel, MlpRegressor> model_;
};

Regressor fit_regressor(const Matrix& X, const Vector& y, const RegressorConfig& config, std::uint64_t seed);

std::string to_string(RegressorFamily family);
RegressorFamily regressor_family_from_string(const std::string& name);

// JSON forms used to cache fitted models between sweep cells.
nlohmann::json to_json(const RidgeModel& model);
nlohmann::json to_json(const SoftmaxClassifier& model);
nlohmann::json to_json(const Mlp& net);
nlohmann::json to_json(const MlpRegressor& model);
nlohmann::json to_json(const Regressor& model);
RidgeModel ridge_from_json(const nlohmann::json& j);
SoftmaxClassifier softmax_classifier_from_json(const nlohmann::json& j);
Mlp mlp_from_json(const nlohmann::json& j);
MlpRegressor mlp_regressor_from_json(const nlohmann::json& j);
Regressor regressor_from_json(const nlohmann::json& j);

nlohmann::json to_json(const RegressorConfig& config);
RegressorConfig regressor_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SoftmaxClassifierConfig& config);
SoftmaxClassifierConfig softmax_config_from_json(const nlohmann::json& j);

}  // namespace lope
