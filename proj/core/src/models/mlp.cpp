#include "lope/models/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "lope/error.hpp"
#include "lope/random.hpp"

namespace lope {

void column_standardization(const Matrix& X, Vector& mean, Vector& scale) {
  mean = X.colwise().mean();
  scale = ((X.rowwise() - mean.transpose()).array().square().colwise().mean()).sqrt();
  for (Eigen::Index j = 0; j < scale.size(); ++j) {
    if (!(scale(j) > 1e-12)) scale(j) = 1.0;
  }
}

Mlp::Mlp(std::vector<std::size_t> widths, std::uint64_t seed, bool zero_output_layer) : widths_(std::move(widths)) {
  if (widths_.size() < 2) throw ConfigError("an MLP needs input and output widths");
  Rng rng = make_rng(seed);
  for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
    const auto fan_in = static_cast<Eigen::Index>(widths_[l]);
    const auto fan_out = static_cast<Eigen::Index>(widths_[l + 1]);
    Matrix w(fan_out, fan_in);
    const bool last = l + 2 == widths_.size();
    const double bound = std::sqrt(6.0 / static_cast<double>(std::max<Eigen::Index>(fan_in, 1)));
    for (Eigen::Index j = 0; j < fan_in; ++j) {
      for (Eigen::Index i = 0; i < fan_out; ++i) {
        w(i, j) = (last && zero_output_layer) ? 0.0 : uniform(rng, -bound, bound);
      }
    }
    weights_.push_back(std::move(w));
    biases_.push_back(Vector::Zero(fan_out));
  }
}

Matrix Mlp::forward(const Matrix& X) const {
  Cache cache;
  return forward(X, cache);
}

Matrix Mlp::forward(const Matrix& X, Cache& cache) const {
  if (static_cast<std::size_t>(X.cols()) != dim_in()) throw DimensionError("MLP input dimension mismatch");
  cache.activations.assign(1, X);
  cache.pre_activations.clear();
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    Matrix z = cache.activations.back() * weights_[l].transpose();
    z.rowwise() += biases_[l].transpose();
    cache.pre_activations.push_back(z);
    if (l + 1 < weights_.size()) {
      cache.activations.push_back(z.cwiseMax(0.0));
    } else {
      cache.activations.push_back(std::move(z));
    }
  }
  return cache.activations.back();
}

Vector Mlp::backward(const Cache& cache, const Matrix& d_out) const {
  Vector grad(static_cast<Eigen::Index>(n_parameters()));
  std::vector<Eigen::Index> offsets(weights_.size());
  Eigen::Index offset = 0;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    offsets[l] = offset;
    offset += weights_[l].size() + biases_[l].size();
  }
  Matrix delta = d_out;
  for (std::size_t l = weights_.size(); l-- > 0;) {
    const Matrix grad_w = delta.transpose() * cache.activations[l];
    const Vector grad_b = delta.colwise().sum().transpose();
    grad.segment(offsets[l], grad_w.size()) = Eigen::Map<const Vector>(grad_w.data(), grad_w.size());
    grad.segment(offsets[l] + grad_w.size(), grad_b.size()) = grad_b;
    if (l > 0) {
      delta = (delta * weights_[l]).cwiseProduct(
          (cache.pre_activations[l - 1].array() > 0.0).cast<double>().matrix());
    }
  }
  return grad;
}

Vector Mlp::parameters() const {
  Vector theta(static_cast<Eigen::Index>(n_parameters()));
  Eigen::Index offset = 0;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    theta.segment(offset, weights_[l].size()) = Eigen::Map<const Vector>(weights_[l].data(), weights_[l].size());
    offset += weights_[l].size();
    theta.segment(offset, biases_[l].size()) = biases_[l];
    offset += biases_[l].size();
  }
  return theta;
}

void Mlp::set_parameters(const Vector& theta) {
  if (static_cast<std::size_t>(theta.size()) != n_parameters()) throw DimensionError("MLP parameter size mismatch");
  Eigen::Index offset = 0;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    weights_[l] = Eigen::Map<const Matrix>(theta.data() + offset, weights_[l].rows(), weights_[l].cols());
    offset += weights_[l].size();
    biases_[l] = theta.segment(offset, biases_[l].size());
    offset += biases_[l].size();
  }
}

std::size_t Mlp::n_parameters() const {
  std::size_t total = 0;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    total += static_cast<std::size_t>(weights_[l].size() + biases_[l].size());
  }
  return total;
}

MlpRegressor::MlpRegressor(Mlp net, Vector input_mean, Vector input_scale, double target_mean, double target_scale)
    : net_(std::move(net)),
      input_mean_(std::move(input_mean)),
      input_scale_(std::move(input_scale)),
      target_mean_(target_mean),
      target_scale_(target_scale) {}

double MlpRegressor::predict(const Eigen::Ref<const Vector>& x) const {
  const Matrix row = ((x - input_mean_).cwiseQuotient(input_scale_)).transpose();
  return net_.forward(row)(0, 0) * target_scale_ + target_mean_;
}

Vector MlpRegressor::predict(const Matrix& X) const {
  const Matrix Z = (X.rowwise() - input_mean_.transpose()).array().rowwise() / input_scale_.transpose().array();
  return (net_.forward(Z).col(0).array() * target_scale_ + target_mean_).matrix();
}

MlpRegressor fit_mlp(const Matrix& X, const Vector& y, const MlpConfig& config, std::uint64_t seed) {
  if (X.rows() != y.size()) throw DimensionError("MLP design rows and target length differ");
  if (X.rows() == 0) throw PreconditionError("MLP training data is empty");
  if (config.batch_size == 0 || !(config.learning_rate > 0.0)) {
    throw ConfigError("MLP needs a positive batch size and learning rate");
  }

  Vector in_mean;
  Vector in_scale;
  column_standardization(X, in_mean, in_scale);
  const double y_mean = y.mean();
  double y_scale = std::sqrt((y.array() - y_mean).square().mean());
  if (!(y_scale > 1e-12)) y_scale = 1.0;
  const Matrix Z = (X.rowwise() - in_mean.transpose()).array().rowwise() / in_scale.transpose().array();
  const Vector t = (y.array() - y_mean) / y_scale;

  std::vector<std::size_t> widths{static_cast<std::size_t>(X.cols())};
  widths.insert(widths.end(), config.hidden.begin(), config.hidden.end());
  widths.push_back(1);
  Mlp net(widths, derive_seed(seed, {0}));

  Vector theta = net.parameters();
  Vector m = Vector::Zero(theta.size());
  Vector v = Vector::Zero(theta.size());
  constexpr double kBeta1 = 0.9;
  constexpr double kBeta2 = 0.999;
  constexpr double kEps = 1e-8;
  std::size_t step = 0;

  const auto n = static_cast<std::size_t>(X.rows());
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng = make_rng(derive_seed(seed, {1}));
  Mlp::Cache cache;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < n; start += config.batch_size) {
      const std::size_t end = std::min(n, start + config.batch_size);
      const auto b = static_cast<Eigen::Index>(end - start);
      Matrix batch(b, Z.cols());
      Vector target(b);
      for (Eigen::Index i = 0; i < b; ++i) {
        batch.row(i) = Z.row(static_cast<Eigen::Index>(order[start + static_cast<std::size_t>(i)]));
        target(i) = t(static_cast<Eigen::Index>(order[start + static_cast<std::size_t>(i)]));
      }
      const Matrix out = net.forward(batch, cache);
      const Vector err = out.col(0) - target;
      epoch_loss += err.squaredNorm();
      const Matrix d_out = err * (2.0 / static_cast<double>(b));
      Vector grad = net.backward(cache, d_out);
      if (config.l2 > 0.0) grad += config.l2 * theta;
      ++step;
      m = kBeta1 * m + (1.0 - kBeta1) * grad;
      v = kBeta2 * v + (1.0 - kBeta2) * grad.cwiseAbs2();
      const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(step));
      theta.array() -= config.learning_rate * (m.array() / c1) / ((v.array() / c2).sqrt() + kEps);
      net.set_parameters(theta);
    }
    if (!std::isfinite(epoch_loss)) {
      std::ostringstream msg;
      msg << "MLP loss became non-finite at epoch " << epoch << " (n=" << n << ", lr=" << config.learning_rate << ")";
      throw NumericError(msg.str());
    }
  }
  return MlpRegressor(std::move(net), std::move(in_mean), std::move(in_scale), y_mean, y_scale);
}

}  // namespace lope
