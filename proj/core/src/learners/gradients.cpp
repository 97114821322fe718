#include "lope/learners/gradients.hpp"

#include <memory>

#include "lope/error.hpp"

namespace lope {
namespace {

struct RecordInputs {
  std::size_t action;
  double propensity;
  double reward;
  double baseline;
};

Vector coefficients(GradientEstimator kind, LopeScore score, const RecordInputs& in,
                    const Eigen::Ref<const Vector>& pi_row, const Eigen::Ref<const Vector>& direct_row,
                    const Eigen::Ref<const Vector>& post_ratio_row) {
  const auto a = static_cast<Eigen::Index>(in.action);
  Vector c = Vector::Zero(pi_row.size());
  switch (kind) {
    case GradientEstimator::kIpsPg:
      c(a) = pi_row(a) / in.propensity * in.reward;
      break;
    case GradientEstimator::kDrPg:
      c = pi_row.cwiseProduct(direct_row);
      c(a) += pi_row(a) / in.propensity * (in.reward - in.baseline);
      break;
    case GradientEstimator::kLopePg: {
      c = pi_row.cwiseProduct(direct_row);
      const double resid = in.reward - in.baseline;
      if (score == LopeScore::kMarginal) {
        c += resid * post_ratio_row.cwiseProduct(pi_row);
      } else {
        c(a) += post_ratio_row.dot(pi_row) * resid;
      }
      break;
    }
  }
  return c;
}

double value_term(GradientEstimator kind, const RecordInputs& in, const Eigen::Ref<const Vector>& pi_row,
                  const Eigen::Ref<const Vector>& direct_row, const Eigen::Ref<const Vector>& post_ratio_row) {
  const auto a = static_cast<Eigen::Index>(in.action);
  switch (kind) {
    case GradientEstimator::kIpsPg:
      return pi_row(a) / in.propensity * in.reward;
    case GradientEstimator::kDrPg:
      return pi_row(a) / in.propensity * (in.reward - in.baseline) + pi_row.dot(direct_row);
    case GradientEstimator::kLopePg:
      return post_ratio_row.dot(pi_row) * (in.reward - in.baseline) + pi_row.dot(direct_row);
  }
  return 0.0;
}

RecordInputs inputs(const GradientTerms& t, std::size_t i) {
  return {t.actions[i], t.propensities[i], t.rewards[i], t.baseline[i]};
}

Vector post_row(const GradientTerms& t, std::size_t i) {
  if (t.estimator != GradientEstimator::kLopePg) return Vector();
  return t.posterior_ratio.row(static_cast<Eigen::Index>(i)).transpose();
}

GradientTerms base_terms(const HistoricalDataset& dh, GradientEstimator kind) {
  if (dh.empty()) throw PreconditionError("policy gradient needs a non-empty historical dataset");
  dh.validate();
  GradientTerms t;
  t.estimator = kind;
  t.users = dh.users;
  t.actions = dh.actions;
  t.propensities = dh.propensities;
  t.rewards = dh.long_rewards;
  t.baseline.assign(dh.size(), 0.0);
  return t;
}

Vector posterior_ratio(const SurrogateWeightModel& weights, std::size_t user, std::span<const double> s) {
  Vector r = weights.logging_posterior(user, s);
  for (Eigen::Index a = 0; a < r.size(); ++a) {
    const double p0 = weights.logging().prob(user, static_cast<std::size_t>(a));
    if (!(p0 > 0.0)) throw SupportError("logging policy must have full support for LOPE-PG");
    r(a) /= p0;
  }
  return r;
}

Vector single_record_gradient(const SoftmaxPolicyModel& model, const Matrix& features, std::size_t user,
                              const Vector& c) {
  const Matrix X = features.row(static_cast<Eigen::Index>(user));
  const Vector pi = model.probs(X).row(0).transpose();
  const Matrix d = (c - c.sum() * pi).transpose();
  return model.backprop_logits(X, d);
}

void check_user(const Matrix& features, std::size_t user) {
  if (user >= static_cast<std::size_t>(features.rows())) throw DimensionError("record user outside the context set");
}

}  // namespace

std::string to_string(GradientEstimator g) {
  switch (g) {
    case GradientEstimator::kIpsPg: return "ips_pg";
    case GradientEstimator::kDrPg: return "dr_pg";
    case GradientEstimator::kLopePg: return "lope_pg";
  }
  return "?";
}

GradientEstimator gradient_estimator_from_string(const std::string& name) {
  if (name == "ips_pg") return GradientEstimator::kIpsPg;
  if (name == "dr_pg") return GradientEstimator::kDrPg;
  if (name == "lope_pg") return GradientEstimator::kLopePg;
  throw ConfigError("unknown gradient estimator '" + name + "' (expected ips_pg, dr_pg or lope_pg)");
}

std::string to_string(LopeScore s) { return s == LopeScore::kMarginal ? "marginal" : "logged_action"; }

LopeScore lope_score_from_string(const std::string& name) {
  if (name == "marginal") return LopeScore::kMarginal;
  if (name == "logged_action") return LopeScore::kLoggedAction;
  throw ConfigError("unknown lope_score '" + name + "' (expected marginal or logged_action)");
}

GradientTerms ips_pg_terms(const HistoricalDataset& dh, std::size_t n_users, std::size_t n_actions) {
  GradientTerms t = base_terms(dh, GradientEstimator::kIpsPg);
  t.direct = Matrix::Zero(static_cast<Eigen::Index>(n_users), static_cast<Eigen::Index>(n_actions));
  return t;
}

GradientTerms dr_pg_terms(const HistoricalDataset& dh, const Matrix& q_hat_xa) {
  if (q_hat_xa.size() == 0) throw ConfigError("DR-PG needs a fitted q_hat(x,a)");
  GradientTerms t = base_terms(dh, GradientEstimator::kDrPg);
  t.direct = q_hat_xa;
  for (std::size_t i = 0; i < dh.size(); ++i) {
    if (dh.users[i] >= static_cast<std::size_t>(q_hat_xa.rows()) ||
        dh.actions[i] >= static_cast<std::size_t>(q_hat_xa.cols())) {
      throw DimensionError("record outside the q_hat table");
    }
    t.baseline[i] = q_hat_xa(static_cast<Eigen::Index>(dh.users[i]), static_cast<Eigen::Index>(dh.actions[i]));
  }
  return t;
}

GradientTerms lope_pg_terms(const HistoricalDataset& dh, const SurrogateWeightModel& weights,
                            const RewardModelFn& h_hat, const Matrix& h_bar, LopeScore score) {
  if (!h_hat || h_bar.size() == 0) throw ConfigError("LOPE-PG needs h_hat and the m(x,a) table");
  GradientTerms t = base_terms(dh, GradientEstimator::kLopePg);
  t.lope_score = score;
  t.direct = h_bar;
  t.posterior_ratio.resize(static_cast<Eigen::Index>(dh.size()), h_bar.cols());
  for (std::size_t i = 0; i < dh.size(); ++i) {
    t.baseline[i] = h_hat(dh.users[i], dh.actions[i], dh.short_row(i));
    t.posterior_ratio.row(static_cast<Eigen::Index>(i)) =
        posterior_ratio(weights, dh.users[i], dh.short_row(i)).transpose();
  }
  return t;
}

Vector record_coefficients(const GradientTerms& terms, std::size_t i, const Eigen::Ref<const Vector>& pi_row) {
  const Vector direct = terms.direct.row(static_cast<Eigen::Index>(terms.users[i])).transpose();
  return coefficients(terms.estimator, terms.lope_score, inputs(terms, i), pi_row, direct, post_row(terms, i));
}

double record_value(const GradientTerms& terms, std::size_t i, const Eigen::Ref<const Vector>& pi_row) {
  const Vector direct = terms.direct.row(static_cast<Eigen::Index>(terms.users[i])).transpose();
  return value_term(terms.estimator, inputs(terms, i), pi_row, direct, post_row(terms, i));
}

Vector policy_gradient(const GradientTerms& terms, const SoftmaxPolicyModel& model, const Matrix& features,
                       std::span<const std::size_t> subset) {
  const Matrix P = model.probs(features);
  Matrix D = Matrix::Zero(P.rows(), P.cols());
  auto add = [&](std::size_t i) {
    const auto u = static_cast<Eigen::Index>(terms.users[i]);
    const Vector pi = P.row(u).transpose();
    const Vector c = record_coefficients(terms, i, pi);
    D.row(u) += (c - c.sum() * pi).transpose();
  };
  std::size_t count = 0;
  if (subset.empty()) {
    for (std::size_t i = 0; i < terms.size(); ++i) add(i);
    count = terms.size();
  } else {
    for (const auto i : subset) add(i);
    count = subset.size();
  }
  if (count == 0) throw PreconditionError("policy gradient over an empty record set");
  return model.backprop_logits(features, D) / static_cast<double>(count);
}

double estimated_value(const GradientTerms& terms, const SoftmaxPolicyModel& model, const Matrix& features) {
  if (terms.size() == 0) throw PreconditionError("value estimate over an empty record set");
  const Matrix P = model.probs(features);
  double sum = 0.0;
  for (std::size_t i = 0; i < terms.size(); ++i) {
    sum += record_value(terms, i, P.row(static_cast<Eigen::Index>(terms.users[i])).transpose());
  }
  return sum / static_cast<double>(terms.size());
}

Vector grad_ips_pg(const HistoricalDataset& dh, const SoftmaxPolicyModel& model, const Matrix& features) {
  return policy_gradient(ips_pg_terms(dh, static_cast<std::size_t>(features.rows()), model.n_actions()), model,
                         features);
}

Vector grad_dr_pg(const HistoricalDataset& dh, const SoftmaxPolicyModel& model, const Matrix& features,
                  const Matrix& q_hat_xa) {
  return policy_gradient(dr_pg_terms(dh, q_hat_xa), model, features);
}

Vector grad_lope_pg(const HistoricalDataset& dh, const SoftmaxPolicyModel& model, const Matrix& features,
                    const SurrogateWeightModel& weights, const RewardModelBundle& bundle, LopeScore score) {
  bundle.require_lope();
  return policy_gradient(lope_pg_terms(dh, weights, bundle.h_hat, bundle.h_bar, score), model, features);
}

VectorKernel ips_pg_kernel(const SoftmaxPolicyModel& model, const Matrix& features) {
  auto m = std::make_shared<const SoftmaxPolicyModel>(model);
  auto f = std::make_shared<const Matrix>(features);
  return [m, f](const HistoricalRecord& rec) {
    check_user(*f, rec.user_index);
    const Vector pi = m->probs(Vector(f->row(static_cast<Eigen::Index>(rec.user_index)).transpose()));
    const Vector zero = Vector::Zero(pi.size());
    const Vector c = coefficients(GradientEstimator::kIpsPg, LopeScore::kMarginal,
                                  {rec.action, rec.logging_propensity, rec.long_reward, 0.0}, pi, zero, zero);
    return single_record_gradient(*m, *f, rec.user_index, c);
  };
}

VectorKernel dr_pg_kernel(const SoftmaxPolicyModel& model, const Matrix& features, const Matrix& q_hat_xa) {
  auto m = std::make_shared<const SoftmaxPolicyModel>(model);
  auto f = std::make_shared<const Matrix>(features);
  auto q = std::make_shared<const Matrix>(q_hat_xa);
  return [m, f, q](const HistoricalRecord& rec) {
    check_user(*f, rec.user_index);
    const auto u = static_cast<Eigen::Index>(rec.user_index);
    const Vector pi = m->probs(Vector(f->row(u).transpose()));
    const Vector direct = q->row(u).transpose();
    const Vector c = coefficients(GradientEstimator::kDrPg, LopeScore::kMarginal,
                                  {rec.action, rec.logging_propensity, rec.long_reward,
                                   (*q)(u, static_cast<Eigen::Index>(rec.action))},
                                  pi, direct, Vector::Zero(pi.size()));
    return single_record_gradient(*m, *f, rec.user_index, c);
  };
}

VectorKernel lope_pg_kernel(const SoftmaxPolicyModel& model, const Matrix& features,
                            const SurrogateWeightModel& weights, const RewardModelFn& h_hat, const Matrix& h_bar,
                            LopeScore score) {
  if (!h_hat || h_bar.size() == 0) throw ConfigError("LOPE-PG needs h_hat and the m(x,a) table");
  auto m = std::make_shared<const SoftmaxPolicyModel>(model);
  auto f = std::make_shared<const Matrix>(features);
  auto w = std::make_shared<const SurrogateWeightModel>(weights);
  auto hb = std::make_shared<const Matrix>(h_bar);
  return [m, f, w, hb, h_hat, score](const HistoricalRecord& rec) {
    check_user(*f, rec.user_index);
    const auto u = static_cast<Eigen::Index>(rec.user_index);
    const Vector pi = m->probs(Vector(f->row(u).transpose()));
    const Vector direct = hb->row(u).transpose();
    const Vector ratio = posterior_ratio(*w, rec.user_index, rec.short_rewards);
    const Vector c = coefficients(
        GradientEstimator::kLopePg, score,
        {rec.action, rec.logging_propensity, rec.long_reward, h_hat(rec.user_index, rec.action, rec.short_rewards)},
        pi, direct, ratio);
    return single_record_gradient(*m, *f, rec.user_index, c);
  };
}

Vector exact_policy_gradient(const SoftmaxPolicyModel& model, const Matrix& features, const Matrix& q_table,
                             const Vector& weights) {
  if (q_table.rows() != features.rows() || weights.size() != features.rows() ||
      static_cast<std::size_t>(q_table.cols()) != model.n_actions()) {
    throw DimensionError("exact gradient inputs disagree in shape");
  }
  const Matrix P = model.probs(features);
  const Vector v = P.cwiseProduct(q_table).rowwise().sum();
  // d pi(a|x) / d logit(b|x) = pi(a)(1{a=b} - pi(b)), so dV/dlogit = pi (q - V_x).
  Matrix D = P.cwiseProduct(q_table.colwise() - v);
  D.array().colwise() *= weights.array();
  return model.backprop_logits(features, D);
}

}  // namespace lope
