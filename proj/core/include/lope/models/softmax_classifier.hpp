#pragma once

#include <cstddef>
#include <vector>

#include "lope/types.hpp"

namespace lope {

struct SoftmaxClassifierConfig {
  double learning_rate = 0.1;
  std::size_t epochs = 500;
  double l2 = 1e-4;
  // Number of classes; 0 infers max(label) + 1.
  std::size_t n_classes = 0;
  // Standardize input columns before training (stored with the model).
  bool standardize = true;
};

/// Multinomial logistic regression. Probabilities are mixed with a uniform
/// floor so every class keeps at least kProbabilityFloor mass.
class SoftmaxClassifier {
 public:
  static constexpr double kProbabilityFloor = 1e-9;

  SoftmaxClassifier() = default;
  SoftmaxClassifier(Matrix weight_matrix, Vector intercepts, Vector feature_mean, Vector feature_scale);

  std::size_t n_classes() const { return static_cast<std::size_t>(weight_matrix_.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(weight_matrix_.cols()); }

  Vector predict_proba(const Eigen::Ref<const Vector>& x) const;
  Vector predict_proba(const Vector& x) const { return predict_proba(Eigen::Ref<const Vector>(x)); }
  /// One row of class probabilities per input row.
  Matrix predict_proba(const Matrix& X) const;

  const Matrix& weight_matrix() const { return weight_matrix_; }
  const Vector& intercepts() const { return intercepts_; }
  const Vector& feature_mean() const { return feature_mean_; }
  const Vector& feature_scale() const { return feature_scale_; }

 private:
  Matrix weight_matrix_;  // n_classes x dim
  Vector intercepts_;
  Vector feature_mean_;
  Vector feature_scale_;
};

/// Full-batch gradient descent on the L2-regularized mean cross-entropy.
SoftmaxClassifier fit_softmax_classifier(const Matrix& X, const std::vector<std::size_t>& labels,
                                         const SoftmaxClassifierConfig& config);

/// Row-wise softmax with max subtraction.
Matrix softmax_rows(const Matrix& logits);

}  // namespace lope
