#include "lope/models/softmax_classifier.hpp"

#include <algorithm>
#include <string>

#include "lope/error.hpp"
#include "lope/models/mlp.hpp"

namespace lope {

Matrix softmax_rows(const Matrix& logits) {
  Matrix out = logits.colwise() - logits.rowwise().maxCoeff();
  out = out.array().exp();
  out.array().colwise() /= out.rowwise().sum().array();
  return out;
}

SoftmaxClassifier::SoftmaxClassifier(Matrix weight_matrix, Vector intercepts, Vector feature_mean,
                                     Vector feature_scale)
    : weight_matrix_(std::move(weight_matrix)),
      intercepts_(std::move(intercepts)),
      feature_mean_(std::move(feature_mean)),
      feature_scale_(std::move(feature_scale)) {
  if (intercepts_.size() != weight_matrix_.rows() || feature_mean_.size() != weight_matrix_.cols() ||
      feature_scale_.size() != weight_matrix_.cols()) {
    throw DimensionError("softmax classifier parameter shapes disagree");
  }
}

Vector SoftmaxClassifier::predict_proba(const Eigen::Ref<const Vector>& x) const {
  if (x.size() != weight_matrix_.cols()) {
    throw DimensionError("classifier expects " + std::to_string(weight_matrix_.cols()) + " features, got " +
                         std::to_string(x.size()));
  }
  const Vector z = (x - feature_mean_).cwiseQuotient(feature_scale_);
  Vector logits = weight_matrix_ * z + intercepts_;
  logits.array() -= logits.maxCoeff();
  Vector p = logits.array().exp();
  p /= p.sum();
  const double k = static_cast<double>(p.size());
  return (p.array() * (1.0 - k * kProbabilityFloor) + kProbabilityFloor).matrix();
}

Matrix SoftmaxClassifier::predict_proba(const Matrix& X) const {
  if (X.cols() != weight_matrix_.cols()) throw DimensionError("classifier feature dimension mismatch");
  const Matrix Z = (X.rowwise() - feature_mean_.transpose()).array().rowwise() / feature_scale_.transpose().array();
  Matrix logits = Z * weight_matrix_.transpose();
  logits.rowwise() += intercepts_.transpose();
  const double k = static_cast<double>(weight_matrix_.rows());
  return (softmax_rows(logits).array() * (1.0 - k * kProbabilityFloor) + kProbabilityFloor).matrix();
}

SoftmaxClassifier fit_softmax_classifier(const Matrix& X, const std::vector<std::size_t>& labels,
                                         const SoftmaxClassifierConfig& config) {
  if (X.rows() == 0 || labels.empty()) throw PreconditionError("classifier training data is empty");
  if (static_cast<std::size_t>(X.rows()) != labels.size()) {
    throw DimensionError("classifier design rows and label count differ");
  }
  const std::size_t max_label = *std::max_element(labels.begin(), labels.end());
  const std::size_t n_classes = config.n_classes == 0 ? max_label + 1 : config.n_classes;
  if (max_label >= n_classes) {
    throw PreconditionError("label " + std::to_string(max_label) + " is not below n_classes = " +
                            std::to_string(n_classes));
  }
  if (!(config.learning_rate > 0.0) || config.l2 < 0.0) {
    throw ConfigError("classifier needs a positive learning rate and non-negative l2");
  }

  const auto n = X.rows();
  const auto d = X.cols();
  const auto k = static_cast<Eigen::Index>(n_classes);

  Vector mean = Vector::Zero(d);
  Vector scale = Vector::Ones(d);
  if (config.standardize) column_standardization(X, mean, scale);
  const Matrix Z = (X.rowwise() - mean.transpose()).array().rowwise() / scale.transpose().array();

  Matrix targets = Matrix::Zero(n, k);
  for (Eigen::Index i = 0; i < n; ++i) targets(i, static_cast<Eigen::Index>(labels[static_cast<std::size_t>(i)])) = 1.0;

  Matrix W = Matrix::Zero(k, d);
  Vector b = Vector::Zero(k);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    Matrix logits = Z * W.transpose();
    logits.rowwise() += b.transpose();
    const Matrix residual = (softmax_rows(logits) - targets) * inv_n;
    const Matrix grad_w = residual.transpose() * Z + config.l2 * W;
    const Vector grad_b = residual.colwise().sum().transpose();
    W -= config.learning_rate * grad_w;
    b -= config.learning_rate * grad_b;
    if (!W.allFinite() || !b.allFinite()) {
      throw NumericError("classifier diverged at epoch " + std::to_string(epoch));
    }
  }
  return SoftmaxClassifier(std::move(W), std::move(b), std::move(mean), std::move(scale));
}

}  // namespace lope
