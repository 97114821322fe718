#include "lope/models/ridge.hpp"

#include <string>

#include "lope/error.hpp"

namespace lope {

Vector RidgeModel::predict(const Matrix& X) const {
  return (X * weights).array() + intercept;
}

RidgeModel fit_ridge(const Matrix& X, const Vector& y, double l2) {
  if (X.rows() != y.size()) {
    throw DimensionError("ridge design has " + std::to_string(X.rows()) + " rows but target has " +
                         std::to_string(y.size()) + " entries");
  }
  if (X.rows() < 1) throw PreconditionError("ridge regression needs at least one sample");
  if (!(l2 >= 0.0)) throw PreconditionError("ridge penalty must be non-negative");

  const Vector x_mean = X.colwise().mean();
  const double y_mean = y.mean();
  const Matrix centered = X.rowwise() - x_mean.transpose();
  const Vector y_centered = y.array() - y_mean;

  Matrix gram = centered.transpose() * centered;
  gram.diagonal().array() += l2;
  const Vector rhs = centered.transpose() * y_centered;

  RidgeModel model;
  model.l2 = l2;
  if (X.cols() == 0) {
    model.weights = Vector(0);
    model.intercept = y_mean;
    return model;
  }
  const Eigen::LDLT<Matrix> ldlt(gram);
  const double scale = std::max(1.0, gram.diagonal().cwiseAbs().maxCoeff());
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive() || ldlt.rcond() < 1e-13 ||
      ldlt.vectorD().minCoeff() <= 1e-13 * scale) {
    throw NumericError("ridge normal equations are singular; use a positive l2 penalty");
  }
  model.weights = ldlt.solve(rhs);
  model.intercept = y_mean - x_mean.dot(model.weights);
  if (!model.weights.allFinite()) throw NumericError("ridge solution is not finite");
  return model;
}

}  // namespace lope
