#include "lope/envs/tabular_env.hpp"

#include <cmath>
#include <sstream>
#include <string>

#include "lope/error.hpp"
#include "lope/random.hpp"

namespace lope {
namespace {

void check_distribution(std::span<const double> p, double tolerance, const std::string& what) {
  double total = 0.0;
  for (const double v : p) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw ValidationError(what + " has a negative or non-finite entry");
    total += v;
  }
  if (std::abs(total - 1.0) > tolerance) throw ValidationError(what + " does not sum to one");
}

std::string describe(const HistoricalRecord& rec) {
  std::ostringstream os;
  os << "(x=" << rec.user_index << ", a=" << rec.action << ", s=[";
  for (std::size_t d = 0; d < rec.short_rewards.size(); ++d) os << (d ? "," : "") << rec.short_rewards[d];
  os << "], r=" << rec.long_reward << ")";
  return os.str();
}

double checked(double value, const HistoricalRecord& rec) {
  if (!std::isfinite(value)) throw NumericError("kernel returned a non-finite value at " + describe(rec));
  return value;
}

}  // namespace

TabularEnv::TabularEnv(Vector p_x, std::size_t n_actions, std::size_t n_surrogates, std::vector<double> p_s_given_xa,
                       std::vector<double> q_xas, std::vector<double> noise_var)
    : p_x_(std::move(p_x)),
      n_actions_(n_actions),
      n_surrogates_(n_surrogates),
      p_s_(std::move(p_s_given_xa)),
      q_(std::move(q_xas)),
      noise_var_(std::move(noise_var)) {
  if (p_x_.size() < 1 || n_actions_ < 2 || n_surrogates_ < 1) throw DimensionError("tabular environment sizes");
  const std::size_t cells = n_contexts() * n_actions_ * n_surrogates_;
  if (p_s_.size() != cells || q_.size() != cells || noise_var_.size() != cells) {
    throw DimensionError("tabular tensors must have n_contexts * n_actions * n_surrogates entries");
  }
  check_distribution({p_x_.data(), n_contexts()}, 1e-12, "p(x)");
  for (std::size_t x = 0; x < n_contexts(); ++x) {
    for (std::size_t a = 0; a < n_actions_; ++a) {
      check_distribution({p_s_.data() + index(x, a, 0), n_surrogates_}, 1e-12, "p(s|x,a)");
    }
  }
  for (std::size_t i = 0; i < cells; ++i) {
    if (!std::isfinite(q_[i])) throw ValidationError("q(x,a,s) must be finite");
    if (!(noise_var_[i] >= 0.0) || !std::isfinite(noise_var_[i])) {
      throw ValidationError("noise variance must be finite and non-negative");
    }
  }
}

void TabularEnv::check_policy(const TabularPolicy& policy) const {
  if (policy.n_users() != n_contexts() || policy.n_actions() != n_actions_) {
    throw DimensionError("policy shape does not match the tabular environment");
  }
}

Matrix TabularEnv::q_table() const {
  Matrix table = Matrix::Zero(static_cast<Eigen::Index>(n_contexts()), static_cast<Eigen::Index>(n_actions_));
  for (std::size_t x = 0; x < n_contexts(); ++x) {
    for (std::size_t a = 0; a < n_actions_; ++a) {
      double v = 0.0;
      for (std::size_t s = 0; s < n_surrogates_; ++s) v += p_s(x, a, s) * q(x, a, s);
      table(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(a)) = v;
    }
  }
  return table;
}

Matrix TabularEnv::reward_variance_table() const {
  const Matrix mean = q_table();
  Matrix var = Matrix::Zero(mean.rows(), mean.cols());
  for (std::size_t x = 0; x < n_contexts(); ++x) {
    for (std::size_t a = 0; a < n_actions_; ++a) {
      const double m = mean(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(a));
      double v = 0.0;
      for (std::size_t s = 0; s < n_surrogates_; ++s) {
        const double d = q(x, a, s) - m;
        v += p_s(x, a, s) * (noise_var(x, a, s) + d * d);
      }
      var(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(a)) = v;
    }
  }
  return var;
}

double TabularEnv::value(const TabularPolicy& policy) const {
  check_policy(policy);
  const Matrix table = q_table();
  double v = 0.0;
  for (std::size_t x = 0; x < n_contexts(); ++x) {
    double row = 0.0;
    for (std::size_t a = 0; a < n_actions_; ++a) row += policy.prob(x, a) * table(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(a));
    v += p_x_(static_cast<Eigen::Index>(x)) * row;
  }
  return v;
}

Vector TabularEnv::marginal_surrogate(const TabularPolicy& policy, std::size_t x) const {
  check_policy(policy);
  if (x >= n_contexts()) throw DimensionError("context index out of range");
  Vector m = Vector::Zero(static_cast<Eigen::Index>(n_surrogates_));
  for (std::size_t a = 0; a < n_actions_; ++a) {
    for (std::size_t s = 0; s < n_surrogates_; ++s) m(static_cast<Eigen::Index>(s)) += policy.prob(x, a) * p_s(x, a, s);
  }
  return m;
}

Vector TabularEnv::logging_posterior(const TabularPolicy& logging, std::size_t x, std::size_t s) const {
  check_policy(logging);
  if (x >= n_contexts() || s >= n_surrogates_) throw DimensionError("index out of range");
  Vector post(static_cast<Eigen::Index>(n_actions_));
  double total = 0.0;
  for (std::size_t a = 0; a < n_actions_; ++a) {
    post(static_cast<Eigen::Index>(a)) = logging.prob(x, a) * p_s(x, a, s);
    total += post(static_cast<Eigen::Index>(a));
  }
  if (!(total > 0.0)) throw SupportError("surrogate value has zero probability under the logging policy");
  return post / total;
}

double TabularEnv::surrogate_weight(const TabularPolicy& logging, const TabularPolicy& target, std::size_t x,
                                    std::size_t s) const {
  const double p0 = marginal_surrogate(logging, x)(static_cast<Eigen::Index>(s));
  if (!(p0 > 0.0)) throw SupportError("surrogate value has zero probability under the logging policy");
  return marginal_surrogate(target, x)(static_cast<Eigen::Index>(s)) / p0;
}

ContextSet TabularEnv::contexts() const {
  ContextSet c;
  c.features = Matrix::Identity(static_cast<Eigen::Index>(n_contexts()), static_cast<Eigen::Index>(n_contexts()));
  c.weights = p_x_;
  return c;
}

std::vector<double> TabularEnv::encode_surrogate(std::size_t s) const {
  if (s >= n_surrogates_) throw DimensionError("surrogate index out of range");
  std::vector<double> v(n_surrogates_, 0.0);
  v[s] = 1.0;
  return v;
}

std::size_t TabularEnv::decode_surrogate(std::span<const double> s) const {
  if (s.size() != n_surrogates_) throw DimensionError("surrogate vector has the wrong length");
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] > 0.5) return i;
  }
  throw ValidationError("surrogate vector is not one-hot");
}

void TabularEnv::for_each_outcome(const TabularPolicy& policy,
                                  const std::function<void(const HistoricalRecord&, double)>& visit) const {
  check_policy(policy);
  std::vector<std::vector<double>> one_hot;
  for (std::size_t s = 0; s < n_surrogates_; ++s) one_hot.push_back(encode_surrogate(s));
  for (std::size_t x = 0; x < n_contexts(); ++x) {
    const double px = p_x_(static_cast<Eigen::Index>(x));
    if (px <= 0.0) continue;
    for (std::size_t a = 0; a < n_actions_; ++a) {
      const double pa = policy.prob(x, a);
      if (pa <= 0.0) continue;
      for (std::size_t s = 0; s < n_surrogates_; ++s) {
        const double ps = p_s(x, a, s);
        if (ps <= 0.0) continue;
        HistoricalRecord rec{x, a, pa, one_hot[s], q(x, a, s)};
        const double mass = px * pa * ps;
        const double sd = std::sqrt(noise_var(x, a, s));
        if (sd == 0.0) {
          visit(rec, mass);
        } else {
          rec.long_reward = q(x, a, s) + sd;
          visit(rec, 0.5 * mass);
          rec.long_reward = q(x, a, s) - sd;
          visit(rec, 0.5 * mass);
        }
      }
    }
  }
}

HistoricalDataset TabularEnv::sample_historical(const TabularPolicy& logging, std::size_t n,
                                                std::uint64_t seed) const {
  if (n < 1) throw PreconditionError("sample size must be at least 1");
  check_policy(logging);
  Rng rng = make_rng(seed);
  HistoricalDataset data;
  data.dim_s = n_surrogates_;
  data.provenance = "tabular logging policy";
  data.reserve(n);
  const RowMatrix probs(logging.probs());
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t x = sample_categorical({p_x_.data(), n_contexts()}, rng);
    const std::size_t a = sample_categorical({probs.row(static_cast<Eigen::Index>(x)).data(), n_actions_}, rng);
    const std::size_t s = sample_categorical({p_s_.data() + index(x, a, 0), n_surrogates_}, rng);
    const double sd = std::sqrt(noise_var(x, a, s));
    const double r = q(x, a, s) + (uniform01(rng) < 0.5 ? sd : -sd);
    data.push_back(x, a, logging.prob(x, a), encode_surrogate(s), r);
  }
  return data;
}

TabularEnv random_tabular_env(std::uint64_t seed, const TabularEnvOptions& options) {
  const std::size_t nx = options.n_contexts;
  const std::size_t na = options.n_actions;
  const std::size_t ns = options.n_surrogates;
  if (nx < 1 || na < 2 || ns < 1) throw ConfigError("tabular environment sizes");
  Rng rng = make_rng(derive_seed(seed, {kEnvStream}));

  Vector p_x(static_cast<Eigen::Index>(nx));
  for (auto& v : p_x) v = uniform(rng, 0.2, 1.0);
  p_x /= p_x.sum();

  std::vector<double> p_s(nx * na * ns);
  auto fill_row = [&](double* row) {
    double total = 0.0;
    for (std::size_t s = 0; s < ns; ++s) total += (row[s] = uniform(rng, 0.1, 1.0));
    for (std::size_t s = 0; s < ns; ++s) row[s] /= total;
  };
  for (std::size_t x = 0; x < nx; ++x) {
    if (options.action_independent_surrogates) {
      fill_row(&p_s[(x * na) * ns]);
      for (std::size_t a = 1; a < na; ++a) {
        for (std::size_t s = 0; s < ns; ++s) p_s[(x * na + a) * ns + s] = p_s[(x * na) * ns + s];
      }
    } else {
      for (std::size_t a = 0; a < na; ++a) fill_row(&p_s[(x * na + a) * ns]);
    }
  }

  std::vector<double> q(nx * na * ns);
  for (std::size_t x = 0; x < nx; ++x) {
    if (options.structure == TabularRewardStructure::kSurrogacy) {
      for (std::size_t s = 0; s < ns; ++s) {
        const double v = uniform01(rng);
        for (std::size_t a = 0; a < na; ++a) q[(x * na + a) * ns + s] = v;
      }
    } else {
      for (std::size_t a = 0; a < na; ++a) {
        for (std::size_t s = 0; s < ns; ++s) q[(x * na + a) * ns + s] = uniform01(rng);
      }
    }
  }

  std::vector<double> noise(nx * na * ns);
  for (std::size_t x = 0; x < nx; ++x) {
    for (std::size_t s = 0; s < ns; ++s) {
      const double v = uniform(rng, 0.0, options.max_noise_var);
      for (std::size_t a = 0; a < na; ++a) noise[(x * na + a) * ns + s] = v;
    }
  }
  return TabularEnv(std::move(p_x), na, ns, std::move(p_s), std::move(q), std::move(noise));
}

TabularPolicy random_tabular_policy(std::uint64_t seed, std::size_t n_contexts, std::size_t n_actions) {
  Rng rng = make_rng(seed);
  Matrix probs(static_cast<Eigen::Index>(n_contexts), static_cast<Eigen::Index>(n_actions));
  for (Eigen::Index x = 0; x < probs.rows(); ++x) {
    for (Eigen::Index a = 0; a < probs.cols(); ++a) probs(x, a) = uniform(rng, 0.2, 1.0);
    probs.row(x) /= probs.row(x).sum();
  }
  return TabularPolicy(std::move(probs));
}

Vector tabular_marginal_surrogate(const TabularEnv& env, const TabularPolicy& policy, std::size_t x) {
  return env.marginal_surrogate(policy, x);
}

double tabular_exact_estimator_expectation(const TabularEnv& env, const TabularPolicy& logging,
                                           const RecordKernel& kernel) {
  double mean = 0.0;
  env.for_each_outcome(logging, [&](const HistoricalRecord& rec, double p) { mean += p * checked(kernel(rec), rec); });
  return mean;
}

KernelMoments tabular_exact_kernel_moments(const TabularEnv& env, const TabularPolicy& logging,
                                           const RecordKernel& kernel) {
  std::vector<std::pair<double, double>> values;
  env.for_each_outcome(logging, [&](const HistoricalRecord& rec, double p) {
    values.emplace_back(p, checked(kernel(rec), rec));
  });
  KernelMoments m;
  for (const auto& [p, v] : values) m.mean += p * v;
  for (const auto& [p, v] : values) m.variance += p * (v - m.mean) * (v - m.mean);
  return m;
}

Vector tabular_exact_vector_expectation(const TabularEnv& env, const TabularPolicy& logging,
                                        const VectorKernel& kernel) {
  Vector mean;
  env.for_each_outcome(logging, [&](const HistoricalRecord& rec, double p) {
    const Vector v = kernel(rec);
    if (!v.allFinite()) throw NumericError("kernel returned a non-finite value at " + describe(rec));
    if (mean.size() == 0) mean = Vector::Zero(v.size());
    if (v.size() != mean.size()) throw DimensionError("vector kernel changed its output length");
    mean += p * v;
  });
  return mean;
}

double IdentitySides::gap() const { return std::abs(lhs - rhs); }

namespace {

// Shared enumeration for the two weight identities: sigma2 = 1 gives the
// weight-variance identity.
IdentitySides weighted_identity(const TabularEnv& env, const TabularPolicy& logging, const TabularPolicy& target,
                                const Matrix& sigma2_xs) {
  IdentitySides out;
  double ew2_xa = 0.0;
  double ew2_xs = 0.0;
  for (std::size_t x = 0; x < env.n_contexts(); ++x) {
    const double px = env.p_x()(static_cast<Eigen::Index>(x));
    const Vector m0 = env.marginal_surrogate(logging, x);
    const Vector m1 = env.marginal_surrogate(target, x);
    for (std::size_t s = 0; s < env.n_surrogates(); ++s) {
      const double p0s = m0(static_cast<Eigen::Index>(s));
      if (p0s <= 0.0) continue;
      const double sig = sigma2_xs(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(s));
      const double ws = m1(static_cast<Eigen::Index>(s)) / p0s;
      const Vector post = env.logging_posterior(logging, x, s);
      double mean_w = 0.0;
      double mean_w2 = 0.0;
      for (std::size_t a = 0; a < env.n_actions(); ++a) {
        const double w = target.prob(x, a) / logging.prob(x, a);
        const double pa = post(static_cast<Eigen::Index>(a));
        mean_w += pa * w;
        mean_w2 += pa * w * w;
      }
      double var_w = 0.0;
      for (std::size_t a = 0; a < env.n_actions(); ++a) {
        const double d = target.prob(x, a) / logging.prob(x, a) - mean_w;
        var_w += post(static_cast<Eigen::Index>(a)) * d * d;
      }
      ew2_xa += px * p0s * sig * mean_w2;
      ew2_xs += px * p0s * sig * ws * ws;
      out.rhs += px * p0s * sig * var_w;
    }
  }
  out.lhs = ew2_xa - ew2_xs;
  return out;
}

void check_pair(const TabularEnv& env, const TabularPolicy& logging, const TabularPolicy& target) {
  if (logging.n_users() != env.n_contexts() || target.n_users() != env.n_contexts() ||
      logging.n_actions() != env.n_actions() || target.n_actions() != env.n_actions()) {
    throw DimensionError("policy shape does not match the tabular environment");
  }
  for (std::size_t x = 0; x < env.n_contexts(); ++x) {
    for (std::size_t a = 0; a < env.n_actions(); ++a) {
      if (!(logging.prob(x, a) > 0.0)) throw SupportError("logging policy must have full support");
    }
  }
}

}  // namespace

IdentitySides tabular_weight_variance_identity(const TabularEnv& env, const TabularPolicy& logging,
                                               const TabularPolicy& target) {
  check_pair(env, logging, target);
  // Both weights have mean one, so the variance difference is a difference of
  // second moments.
  return weighted_identity(env, logging, target,
                           Matrix::Ones(static_cast<Eigen::Index>(env.n_contexts()),
                                        static_cast<Eigen::Index>(env.n_surrogates())));
}

IdentitySides tabular_noise_term_identity(const TabularEnv& env, const TabularPolicy& logging,
                                          const TabularPolicy& target, const Matrix& sigma2_xs) {
  check_pair(env, logging, target);
  if (sigma2_xs.rows() != static_cast<Eigen::Index>(env.n_contexts()) ||
      sigma2_xs.cols() != static_cast<Eigen::Index>(env.n_surrogates())) {
    throw DimensionError("sigma2 must be n_contexts x n_surrogates");
  }
  return weighted_identity(env, logging, target, sigma2_xs);
}

DrVarianceTerms tabular_dr_variance_decomposition(const TabularEnv& env, const TabularPolicy& logging,
                                                  const TabularPolicy& target, const Matrix& q_hat) {
  check_pair(env, logging, target);
  if (q_hat.rows() != static_cast<Eigen::Index>(env.n_contexts()) ||
      q_hat.cols() != static_cast<Eigen::Index>(env.n_actions())) {
    throw DimensionError("q_hat must be n_contexts x n_actions");
  }
  const Matrix q = env.q_table();
  const Matrix var_r = env.reward_variance_table();
  const Vector q_hat_pi1 = (target.probs().cwiseProduct(q_hat)).rowwise().sum();
  const Vector q_pi1 = (target.probs().cwiseProduct(q)).rowwise().sum();

  DrVarianceTerms t;
  const KernelMoments m = tabular_exact_kernel_moments(env, logging, [&](const HistoricalRecord& rec) {
    const auto x = static_cast<Eigen::Index>(rec.user_index);
    const auto a = static_cast<Eigen::Index>(rec.action);
    const double w = target.prob(rec.user_index, rec.action) / rec.logging_propensity;
    return w * (rec.long_reward - q_hat(x, a)) + q_hat_pi1(x);
  });
  t.enumerated = m.variance;

  double mean_value = 0.0;
  for (std::size_t xi = 0; xi < env.n_contexts(); ++xi) mean_value += env.p_x()(static_cast<Eigen::Index>(xi)) * q_pi1(static_cast<Eigen::Index>(xi));
  for (std::size_t xi = 0; xi < env.n_contexts(); ++xi) {
    const auto x = static_cast<Eigen::Index>(xi);
    const double px = env.p_x()(x);
    double mean_err = 0.0;
    for (std::size_t ai = 0; ai < env.n_actions(); ++ai) {
      const auto a = static_cast<Eigen::Index>(ai);
      const double w = target.prob(xi, ai) / logging.prob(xi, ai);
      t.noise_term += px * logging.prob(xi, ai) * w * w * var_r(x, a);
      mean_err += logging.prob(xi, ai) * w * (q(x, a) - q_hat(x, a));
    }
    double var_err = 0.0;
    for (std::size_t ai = 0; ai < env.n_actions(); ++ai) {
      const auto a = static_cast<Eigen::Index>(ai);
      const double d = target.prob(xi, ai) / logging.prob(xi, ai) * (q(x, a) - q_hat(x, a)) - mean_err;
      var_err += logging.prob(xi, ai) * d * d;
    }
    t.error_term += px * var_err;
    const double dv = q_pi1(x) - mean_value;
    t.value_term += px * dv * dv;
  }
  return t;
}

}  // namespace lope
