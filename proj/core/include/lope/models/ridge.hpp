#pragma once

#include "lope/types.hpp"

namespace lope {

/// Linear model y ~ w.x + b fitted by ridge regression.
struct RidgeModel {
  Vector weights;
  double intercept = 0.0;
  double l2 = 0.0;

  double predict(const Eigen::Ref<const Vector>& x) const { return weights.dot(x) + intercept; }
  double predict(const Vector& x) const { return weights.dot(x) + intercept; }
  Vector predict(const Matrix& X) const;
};

/// Exact minimizer of ||y - Xw - b||^2 + l2 ||w||^2 with the intercept left
/// unpenalized. Solved through the centered normal equations.
/// Throws NumericError when the system is singular (only possible with l2 = 0).
RidgeModel fit_ridge(const Matrix& X, const Vector& y, double l2);

}  // namespace lope
