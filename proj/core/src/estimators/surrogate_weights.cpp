#include "lope/estimators/surrogate_weights.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "lope/error.hpp"
#include "lope/estimators/features.hpp"
#include "lope/models/ridge.hpp"
#include "lope/models/softmax_classifier.hpp"

namespace lope {

SurrogateWeightModel::SurrogateWeightModel(ConditionalFn posterior, TabularPolicy logging, TabularPolicy target,
                                           double max_weight)
    : posterior_(std::move(posterior)),
      logging_(std::make_shared<const TabularPolicy>(std::move(logging))),
      target_(std::make_shared<const TabularPolicy>(std::move(target))),
      max_weight_(max_weight) {
  if (!posterior_) throw ConfigError("surrogate weight model needs a conditional action model");
  if (logging_->n_users() != target_->n_users() || logging_->n_actions() != target_->n_actions()) {
    throw DimensionError("logging and target policies differ in shape");
  }
  if (!(max_weight_ > 0.0)) throw ConfigError("max_weight must be positive");
  const Matrix& p0 = logging_->probs();
  const Matrix& p1 = target_->probs();
  for (Eigen::Index u = 0; u < p0.rows(); ++u) {
    for (Eigen::Index a = 0; a < p0.cols(); ++a) {
      if (p1(u, a) > 0.0 && !(p0(u, a) > 0.0)) {
        throw SupportError("target policy puts mass on action " + std::to_string(a) + " for user " +
                           std::to_string(u) + " where the logging policy has none");
      }
    }
  }
}

Vector SurrogateWeightModel::logging_posterior(std::size_t user, std::span<const double> s) const {
  Vector p = posterior_(user, s);
  if (p.size() != static_cast<Eigen::Index>(logging_->n_actions())) {
    throw DimensionError("conditional action model returned the wrong number of actions");
  }
  return p;
}

double SurrogateWeightModel::vanilla_weight(std::size_t user, std::size_t action) const {
  const double p0 = logging_->prob(user, action);
  if (!(p0 > 0.0)) throw SupportError("logging policy gives zero probability to a target action");
  return target_->prob(user, action) / p0;
}

double SurrogateWeightModel::weight_for(std::size_t user, std::span<const double> s,
                                        const Eigen::Ref<const Vector>& target_row) const {
  if (user >= logging_->n_users()) throw DimensionError("user index out of range");
  const Vector post = logging_posterior(user, s);
  double w = 0.0;
  for (std::size_t a = 0; a < logging_->n_actions(); ++a) {
    const double pa = post(static_cast<Eigen::Index>(a));
    if (pa == 0.0) continue;
    const double p0 = logging_->prob(user, a);
    if (!(p0 > 0.0)) throw SupportError("logging policy gives zero probability to action " + std::to_string(a));
    w += pa * target_row(static_cast<Eigen::Index>(a)) / p0;
  }
  return w;
}

double SurrogateWeightModel::weight(std::size_t user, std::span<const double> s) const {
  double w = weight_for(user, s, target_->row(user));
  if (blend_) w = 0.5 * (w + blend_(user, s));
  return std::min(w, max_weight_);
}

SurrogateWeightModel SurrogateWeightModel::retarget(TabularPolicy target) const {
  SurrogateWeightModel copy(posterior_, *logging_, std::move(target), max_weight_);
  copy.logging_ = logging_;
  return copy;
}

ConditionalFn classifier_posterior(const HistoricalDataset& dh, const ContextSet& contexts, std::size_t n_actions,
                                   const SoftmaxClassifierConfig& config) {
  SoftmaxClassifierConfig cc = config;
  cc.n_classes = n_actions;
  const auto clf = std::make_shared<const SoftmaxClassifier>(
      fit_softmax_classifier(design_xs(dh, contexts.features), dh.actions, cc));
  const auto features = std::make_shared<const Matrix>(contexts.features);
  return [clf, features](std::size_t user, std::span<const double> s) {
    return clf->predict_proba(encode_xs(features->row(static_cast<Eigen::Index>(user)).transpose(), s));
  };
}

ConditionalFn gaussian_bayes_posterior(const HistoricalDataset& dh, const ContextSet& contexts,
                                       const TabularPolicy& logging, double l2) {
  if (dh.empty()) throw PreconditionError("surrogate model needs a non-empty historical dataset");
  if (dh.dim_s == 0) throw PreconditionError("surrogate model needs at least one surrogate dimension");
  const std::size_t A = logging.n_actions();
  const Matrix X = design_xa(dh, contexts.features, A, true);
  const auto D = static_cast<Eigen::Index>(dh.dim_s);
  const auto n_users = contexts.features.rows();
  auto f_hat = std::make_shared<Matrix>(n_users * static_cast<Eigen::Index>(A), D);  // row x * A + a
  double sse = 0.0;
  Vector y(X.rows());
  for (Eigen::Index d = 0; d < D; ++d) {
    for (Eigen::Index i = 0; i < X.rows(); ++i) y(i) = dh.short_row(static_cast<std::size_t>(i))[static_cast<std::size_t>(d)];
    const RidgeModel m = fit_ridge(X, y, l2);
    for (Eigen::Index u = 0; u < n_users; ++u) {
      for (std::size_t a = 0; a < A; ++a) {
        (*f_hat)(u * static_cast<Eigen::Index>(A) + static_cast<Eigen::Index>(a), d) =
            m.predict(encode_xa(contexts.features.row(u).transpose(), a, A, true));
      }
    }
    sse += (y - m.predict(X)).squaredNorm();
  }
  // Pooled isotropic noise; floored so a noiseless surrogate still gives a proper posterior.
  const double var = std::max(sse / static_cast<double>(X.rows() * D), 1e-12);
  auto log_prior = std::make_shared<Matrix>(static_cast<Eigen::Index>(logging.n_users()), static_cast<Eigen::Index>(A));
  for (std::size_t u = 0; u < logging.n_users(); ++u) {
    for (std::size_t a = 0; a < A; ++a) {
      const double p = logging.prob(u, a);
      (*log_prior)(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(a)) =
          p > 0.0 ? std::log(p) : -std::numeric_limits<double>::infinity();
    }
  }
  return [f_hat, log_prior, var, A, D](std::size_t user, std::span<const double> s) {
    if (static_cast<Eigen::Index>(s.size()) != D) throw DimensionError("surrogate dimension mismatch");
    if (user >= static_cast<std::size_t>(log_prior->rows())) throw DimensionError("user index out of range");
    Vector logits(static_cast<Eigen::Index>(A));
    for (std::size_t a = 0; a < A; ++a) {
      const auto row = static_cast<Eigen::Index>(user * A + a);
      double dist = 0.0;
      for (Eigen::Index d = 0; d < D; ++d) {
        const double e = s[static_cast<std::size_t>(d)] - (*f_hat)(row, d);
        dist += e * e;
      }
      logits(static_cast<Eigen::Index>(a)) = (*log_prior)(static_cast<Eigen::Index>(user), static_cast<Eigen::Index>(a)) - 0.5 * dist / var;
    }
    const Vector p = (logits.array() - logits.maxCoeff()).exp().matrix();
    return Vector(p / p.sum());
  };
}

DensityRatioFn knn_density_ratio(const HistoricalDataset& dh, const ShortTermDataset& ds, const Matrix& features,
                                 std::size_t k) {
  if (dh.empty() || ds.empty()) throw PreconditionError("density ratio needs both D_H and D_S");
  if (ds.dim_s != dh.dim_s) throw DimensionError("D_S and D_H surrogate dimensions differ");
  Matrix zh = design_xs(dh, features);
  Matrix zs(static_cast<Eigen::Index>(ds.size()), zh.cols());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (ds.users[i] >= static_cast<std::size_t>(features.rows())) throw DimensionError("D_S user out of range");
    zs.row(static_cast<Eigen::Index>(i)) =
        encode_xs(features.row(static_cast<Eigen::Index>(ds.users[i])).transpose(), ds.short_row(i)).transpose();
  }
  Vector mean, scale;
  column_standardization(zh, mean, scale);
  auto standardize = [mean, scale](Matrix& z) { z = (z.rowwise() - mean.transpose()).array().rowwise() / scale.transpose().array(); };
  standardize(zh);
  standardize(zs);

  struct Pool {
    Matrix points;   // D_H rows then D_S rows
    std::size_t n_h;
    std::size_t n_s;
  };
  auto pool = std::make_shared<Pool>();
  pool->points.resize(zh.rows() + zs.rows(), zh.cols());
  pool->points << zh, zs;
  pool->n_h = dh.size();
  pool->n_s = ds.size();
  const std::size_t kk = std::min(k, pool->n_h + pool->n_s);
  auto feats = std::make_shared<const Matrix>(features);

  return [pool, kk, feats, mean, scale](std::size_t user, std::span<const double> s) {
    const Vector z =
        (encode_xs(feats->row(static_cast<Eigen::Index>(user)).transpose(), s) - mean).cwiseQuotient(scale);
    std::vector<std::pair<double, std::size_t>> dist(static_cast<std::size_t>(pool->points.rows()));
    for (Eigen::Index i = 0; i < pool->points.rows(); ++i) {
      dist[static_cast<std::size_t>(i)] = {(pool->points.row(i).transpose() - z).squaredNorm(), static_cast<std::size_t>(i)};
    }
    std::nth_element(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(kk - 1), dist.end());
    double from_s = 0.0;
    for (std::size_t j = 0; j < kk; ++j) from_s += dist[j].second >= pool->n_h ? 1.0 : 0.0;
    const double from_h = static_cast<double>(kk) - from_s;
    return ((from_s + 1.0) / static_cast<double>(pool->n_s + 1)) / ((from_h + 1.0) / static_cast<double>(pool->n_h + 1));
  };
}

SurrogateWeightModel estimate_surrogate_weights(const HistoricalDataset& dh, const ContextSet& contexts,
                                                const TabularPolicy& target, const TabularPolicy& logging,
                                                const NuisanceConfig& config, const ShortTermDataset* ds) {
  if (dh.empty()) throw PreconditionError("surrogate weights need a non-empty historical dataset");
  if (logging.n_users() != contexts.size()) throw DimensionError("logging policy does not cover the context set");
  ConditionalFn posterior = config.weight_model == WeightModel::kGaussianBayes
                                ? gaussian_bayes_posterior(dh, contexts, logging, config.surrogate_l2)
                                : classifier_posterior(dh, contexts, logging.n_actions(), config.classifier);
  SurrogateWeightModel model(std::move(posterior), logging, target, config.max_weight);
  if (config.use_short_experiment_for_weights && ds != nullptr && !ds->empty()) {
    model.set_blend(knn_density_ratio(dh, *ds, contexts.features, config.neighbours));
  }
  return model;
}

}  // namespace lope
