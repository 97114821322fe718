#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "lope/types.hpp"

namespace lope {

/// Fully connected network with rectifier hidden layers and a linear output.
/// Rows of the input matrix are samples.
class Mlp {
 public:
  struct Cache {
    std::vector<Matrix> activations;      // input and each layer output (post-activation)
    std::vector<Matrix> pre_activations;  // each layer before the rectifier
  };

  Mlp() = default;
  /// widths = {dim_in, hidden..., dim_out}. He-uniform initialization; the
  /// output layer starts at zero when zero_output_layer is set.
  Mlp(std::vector<std::size_t> widths, std::uint64_t seed, bool zero_output_layer = false);

  Matrix forward(const Matrix& X) const;
  Matrix forward(const Matrix& X, Cache& cache) const;
  /// Gradient of sum_ij d_out(i,j) * out(i,j) with respect to the flattened
  /// parameters (same layout as parameters()).
  Vector backward(const Cache& cache, const Matrix& d_out) const;

  Vector parameters() const;
  void set_parameters(const Vector& theta);
  std::size_t n_parameters() const;
  const std::vector<std::size_t>& widths() const { return widths_; }
  std::size_t dim_in() const { return widths_.front(); }
  std::size_t dim_out() const { return widths_.back(); }

  const std::vector<Matrix>& layer_weights() const { return weights_; }
  const std::vector<Vector>& layer_biases() const { return biases_; }

 private:
  std::vector<std::size_t> widths_;
  std::vector<Matrix> weights_;  // layer l: widths[l+1] x widths[l]
  std::vector<Vector> biases_;
};

struct MlpConfig {
  std::vector<std::size_t> hidden{32, 32, 32};
  double learning_rate = 1e-3;
  std::size_t epochs = 200;
  std::size_t batch_size = 32;
  double l2 = 0.0;
};

/// Scalar regressor on standardized inputs and targets, trained with Adam on
/// mini-batches of squared error.
class MlpRegressor {
 public:
  MlpRegressor() = default;
  MlpRegressor(Mlp net, Vector input_mean, Vector input_scale, double target_mean, double target_scale);

  double predict(const Eigen::Ref<const Vector>& x) const;
  double predict(const Vector& x) const { return predict(Eigen::Ref<const Vector>(x)); }
  Vector predict(const Matrix& X) const;

  const Mlp& net() const { return net_; }
  const Vector& input_mean() const { return input_mean_; }
  const Vector& input_scale() const { return input_scale_; }
  double target_mean() const { return target_mean_; }
  double target_scale() const { return target_scale_; }

 private:
  Mlp net_;
  Vector input_mean_;
  Vector input_scale_;
  double target_mean_ = 0.0;
  double target_scale_ = 1.0;
};

/// Deterministic given seed. Throws NumericError if the loss becomes non-finite.
MlpRegressor fit_mlp(const Matrix& X, const Vector& y, const MlpConfig& config, std::uint64_t seed);

/// Column means and standard deviations; zero deviations are replaced by one.
void column_standardization(const Matrix& X, Vector& mean, Vector& scale);

}  // namespace lope
