#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include <nlohmann/json.hpp>

#include "lope/models/mlp.hpp"
#include "lope/types.hpp"

namespace lope {

enum class PolicyParameterization { kLinear, kMlp3 };

std::string to_string(PolicyParameterization p);
PolicyParameterization parameterization_from_string(const std::string& name);

/// pi_theta(a|x) = softmax(f_theta(x))_a at temperature one. The linear form
/// uses logits theta' x with theta dim_x x n_actions (flattened column-major);
/// mlp3 uses three rectifier hidden layers of width 32.
class SoftmaxPolicyModel {
 public:
  SoftmaxPolicyModel() = default;
  /// theta = 0: the uniform policy.
  static SoftmaxPolicyModel linear(std::size_t dim_x, std::size_t n_actions);
  /// Random hidden layers and a zero output layer, so the start is uniform
  /// but gradients still reach every layer.
  static SoftmaxPolicyModel mlp3(std::size_t dim_x, std::size_t n_actions, std::uint64_t seed);

  PolicyParameterization parameterization() const { return kind_; }
  std::size_t dim_x() const { return dim_x_; }
  std::size_t n_actions() const { return n_actions_; }
  std::size_t n_parameters() const { return static_cast<std::size_t>(theta_.size()); }
  const Vector& parameters() const { return theta_; }
  void set_parameters(const Vector& theta);

  /// One row per input row.
  Matrix logits(const Matrix& X) const;
  Matrix probs(const Matrix& X) const;
  Vector probs(const Eigen::Ref<const Vector>& x) const;
  Vector probs(const Vector& x) const { return probs(Eigen::Ref<const Vector>(x)); }
  TabularPolicy as_tabular(const Matrix& features) const;

  /// Gradient with respect to theta of sum_ij D(i,j) * logits(X)(i,j).
  Vector backprop_logits(const Matrix& X, const Matrix& D) const;
  /// grad_theta log pi_theta(a|x).
  Vector score(const Eigen::Ref<const Vector>& x, std::size_t action) const;

 private:
  PolicyParameterization kind_ = PolicyParameterization::kLinear;
  std::size_t dim_x_ = 0;
  std::size_t n_actions_ = 0;
  Vector theta_;
  Mlp net_;  // mlp3 only; kept in sync with theta_
};

nlohmann::json to_json(const SoftmaxPolicyModel& model);
SoftmaxPolicyModel policy_model_from_json(const nlohmann::json& j);

}  // namespace lope
