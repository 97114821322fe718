#include "lope/learners/policy_model.hpp"

#include "lope/error.hpp"
#include "lope/models/softmax_classifier.hpp"

namespace lope {

std::string to_string(PolicyParameterization p) { return p == PolicyParameterization::kLinear ? "linear" : "mlp3"; }

PolicyParameterization parameterization_from_string(const std::string& name) {
  if (name == "linear") return PolicyParameterization::kLinear;
  if (name == "mlp3") return PolicyParameterization::kMlp3;
  throw ConfigError("unknown parameterization '" + name + "' (expected linear or mlp3)");
}

SoftmaxPolicyModel SoftmaxPolicyModel::linear(std::size_t dim_x, std::size_t n_actions) {
  if (dim_x < 1 || n_actions < 2) throw ConfigError("policy needs dim_x >= 1 and at least two actions");
  SoftmaxPolicyModel m;
  m.kind_ = PolicyParameterization::kLinear;
  m.dim_x_ = dim_x;
  m.n_actions_ = n_actions;
  m.theta_ = Vector::Zero(static_cast<Eigen::Index>(dim_x * n_actions));
  return m;
}

SoftmaxPolicyModel SoftmaxPolicyModel::mlp3(std::size_t dim_x, std::size_t n_actions, std::uint64_t seed) {
  if (dim_x < 1 || n_actions < 2) throw ConfigError("policy needs dim_x >= 1 and at least two actions");
  SoftmaxPolicyModel m;
  m.kind_ = PolicyParameterization::kMlp3;
  m.dim_x_ = dim_x;
  m.n_actions_ = n_actions;
  m.net_ = Mlp({dim_x, 32, 32, 32, n_actions}, seed, true);
  m.theta_ = m.net_.parameters();
  return m;
}

void SoftmaxPolicyModel::set_parameters(const Vector& theta) {
  if (theta.size() != theta_.size()) throw DimensionError("policy parameter size mismatch");
  if (!theta.allFinite()) throw NumericError("policy parameters must be finite");
  theta_ = theta;
  if (kind_ == PolicyParameterization::kMlp3) net_.set_parameters(theta_);
}

Matrix SoftmaxPolicyModel::logits(const Matrix& X) const {
  if (static_cast<std::size_t>(X.cols()) != dim_x_) throw DimensionError("policy input dimension mismatch");
  if (kind_ == PolicyParameterization::kLinear) {
    return X * Eigen::Map<const Matrix>(theta_.data(), static_cast<Eigen::Index>(dim_x_),
                                        static_cast<Eigen::Index>(n_actions_));
  }
  return net_.forward(X);
}

Matrix SoftmaxPolicyModel::probs(const Matrix& X) const { return softmax_rows(logits(X)); }

Vector SoftmaxPolicyModel::probs(const Eigen::Ref<const Vector>& x) const {
  return probs(Matrix(x.transpose())).row(0).transpose();
}

TabularPolicy SoftmaxPolicyModel::as_tabular(const Matrix& features) const { return TabularPolicy(probs(features)); }

Vector SoftmaxPolicyModel::backprop_logits(const Matrix& X, const Matrix& D) const {
  if (D.rows() != X.rows() || static_cast<std::size_t>(D.cols()) != n_actions_) {
    throw DimensionError("logit gradient shape mismatch");
  }
  if (kind_ == PolicyParameterization::kLinear) {
    const Matrix g = X.transpose() * D;
    return Eigen::Map<const Vector>(g.data(), g.size());
  }
  Mlp::Cache cache;
  net_.forward(X, cache);
  return net_.backward(cache, D);
}

Vector SoftmaxPolicyModel::score(const Eigen::Ref<const Vector>& x, std::size_t action) const {
  if (action >= n_actions_) throw DimensionError("action index out of range");
  const Matrix X = x.transpose();
  Matrix d = -probs(X);
  d(0, static_cast<Eigen::Index>(action)) += 1.0;
  return backprop_logits(X, d);
}

nlohmann::json to_json(const SoftmaxPolicyModel& model) {
  nlohmann::json j{{"kind", "softmax_policy"},
                   {"parameterization", to_string(model.parameterization())},
                   {"dim_x", model.dim_x()},
                   {"n_actions", model.n_actions()},
                   {"parameters", std::vector<double>(model.parameters().data(),
                                                      model.parameters().data() + model.parameters().size())}};
  return j;
}

SoftmaxPolicyModel policy_model_from_json(const nlohmann::json& j) {
  try {
    const auto kind = parameterization_from_string(j.at("parameterization").get<std::string>());
    const auto dim_x = j.at("dim_x").get<std::size_t>();
    const auto n_actions = j.at("n_actions").get<std::size_t>();
    const auto params = j.at("parameters").get<std::vector<double>>();
    SoftmaxPolicyModel m = kind == PolicyParameterization::kLinear ? SoftmaxPolicyModel::linear(dim_x, n_actions)
                                                                   : SoftmaxPolicyModel::mlp3(dim_x, n_actions, 0);
    m.set_parameters(Eigen::Map<const Vector>(params.data(), static_cast<Eigen::Index>(params.size())));
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("policy file: ") + e.what());
  }
}

}  // namespace lope
