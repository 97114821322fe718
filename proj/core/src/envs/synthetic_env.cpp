#include "lope/envs/synthetic_env.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <string>

#include "lope/dataset_io.hpp"
#include "lope/error.hpp"
#include "lope/models/kmeans.hpp"

namespace lope {
namespace {

Matrix standard_normal_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = standard_normal(rng);
  }
  return m;
}

Matrix uniform_matrix(std::size_t rows, std::size_t cols, Rng& rng) {
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = uniform(rng, -1.0, 1.0);
  }
  return m;
}

// Row-major copy so each row is a contiguous probability vector.
RowMatrix row_major(const Matrix& m) { return RowMatrix(m); }

}  // namespace

void SyntheticEnvConfig::validate() const {
  if (n_users < 1 || dim_x < 1 || dim_e < 1 || dim_s < 1) throw ConfigError("environment sizes must be positive");
  if (n_actions < 2) throw ConfigError("n_actions must be at least 2");
  if (n_clusters < 1 || n_clusters > n_users) throw ConfigError("n_clusters must lie in [1, n_users]");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ConfigError("lambda must lie in [0, 1]");
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw ConfigError("epsilon must lie in [0, 1]");
  if (!(sigma_r >= 0.0) || !(sigma_s >= 0.0)) throw ConfigError("noise scales must be non-negative");
  if (!std::isfinite(beta)) throw ConfigError("beta must be finite");
}

nlohmann::json to_json(const SyntheticEnvConfig& c) {
  return {{"n_users", c.n_users},     {"dim_x", c.dim_x},
          {"n_actions", c.n_actions}, {"dim_e", c.dim_e},
          {"dim_s", c.dim_s},         {"n_clusters", c.n_clusters},
          {"lambda", c.lambda},       {"beta", c.beta},
          {"epsilon", c.epsilon},     {"sigma_r", c.sigma_r},
          {"sigma_s", c.sigma_s},     {"reward_uses_realized_s", c.reward_uses_realized_s},
          {"seed", c.seed}};
}

SyntheticEnvConfig synthetic_config_from_json(const nlohmann::json& j) {
  static const std::set<std::string> known{"n_users", "dim_x",   "n_actions", "dim_e",   "dim_s",
                                           "n_clusters", "lambda", "beta",    "epsilon", "sigma_r",
                                           "sigma_s", "reward_uses_realized_s", "seed"};
  if (!j.is_object()) throw ConfigError("environment config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) throw ConfigError("unknown environment config key '" + key + "'");
  }
  SyntheticEnvConfig c;
  try {
    c.n_users = j.value("n_users", c.n_users);
    c.dim_x = j.value("dim_x", c.dim_x);
    c.n_actions = j.value("n_actions", c.n_actions);
    c.dim_e = j.value("dim_e", c.dim_e);
    c.dim_s = j.value("dim_s", c.dim_s);
    c.n_clusters = j.value("n_clusters", c.n_clusters);
    c.lambda = j.value("lambda", c.lambda);
    c.beta = j.value("beta", c.beta);
    c.epsilon = j.value("epsilon", c.epsilon);
    c.sigma_r = j.value("sigma_r", c.sigma_r);
    c.sigma_s = j.value("sigma_s", c.sigma_s);
    c.reward_uses_realized_s = j.value("reward_uses_realized_s", c.reward_uses_realized_s);
    c.seed = j.value("seed", c.seed);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("environment config: ") + e.what());
  }
  c.validate();
  return c;
}

SyntheticEnv SyntheticEnv::build(const SyntheticEnvConfig& config) {
  config.validate();
  Rng rng = make_rng(derive_seed(config.seed, {kEnvStream}));
  const auto n_users = static_cast<Eigen::Index>(config.n_users);
  const auto n_actions = static_cast<Eigen::Index>(config.n_actions);

  ContextSet contexts = ContextSet::uniform(standard_normal_matrix(n_users, static_cast<Eigen::Index>(config.dim_x), rng));
  ActionSpace actions{standard_normal_matrix(n_actions, static_cast<Eigen::Index>(config.dim_e), rng)};

  SyntheticEnvParams p;
  for (std::size_t d = 0; d < config.dim_s; ++d) p.m_f.push_back(uniform_matrix(config.dim_x, config.dim_e, rng));
  p.m_h = uniform_matrix(config.dim_x, config.dim_e, rng);
  p.theta_g = uniform_matrix(config.n_clusters, config.dim_s, rng);
  for (std::size_t d = 0; d < config.dim_s; ++d) {
    p.theta_f_cluster.push_back(uniform_matrix(config.n_clusters, config.dim_x, rng));
  }
  for (std::size_t d = 0; d < config.dim_s; ++d) {
    p.theta_f_action.push_back(uniform_matrix(config.n_actions, config.dim_e, rng));
  }
  p.theta_h_cluster = uniform_matrix(config.n_clusters, config.dim_x, rng);
  p.theta_h_action = uniform_matrix(config.n_actions, config.dim_e, rng);
  p.cluster_of = kmeans(contexts.features, config.n_clusters, derive_seed(config.seed, {kEnvStream, 1})).assignments;

  return SyntheticEnv(config, std::move(contexts), std::move(actions), std::move(p));
}

SyntheticEnv::SyntheticEnv(SyntheticEnvConfig config, ContextSet contexts, ActionSpace actions,
                           SyntheticEnvParams params)
    : config_(config), contexts_(std::move(contexts)), actions_(std::move(actions)), params_(std::move(params)) {
  config_.validate();
  contexts_.validate();
  actions_.validate();
  const auto n = static_cast<Eigen::Index>(contexts_.size());
  const auto A = static_cast<Eigen::Index>(actions_.size());
  const auto K = static_cast<Eigen::Index>(config_.n_clusters);
  const auto dx = static_cast<Eigen::Index>(contexts_.dim());
  const auto de = static_cast<Eigen::Index>(actions_.dim());
  if (params_.m_f.size() != config_.dim_s || params_.theta_f_cluster.size() != config_.dim_s ||
      params_.theta_f_action.size() != config_.dim_s || params_.cluster_of.size() != contexts_.size() ||
      params_.theta_g.rows() != K || params_.theta_g.cols() != static_cast<Eigen::Index>(config_.dim_s) ||
      params_.m_h.rows() != dx || params_.m_h.cols() != de || params_.theta_h_cluster.rows() != K ||
      params_.theta_h_cluster.cols() != dx || params_.theta_h_action.rows() != A ||
      params_.theta_h_action.cols() != de) {
    throw DimensionError("synthetic environment parameters do not match the configuration");
  }
  for (const auto c : params_.cluster_of) {
    if (c >= config_.n_clusters) throw ValidationError("cluster index out of range");
  }

  const Matrix& X = contexts_.features;
  const Matrix& E = actions_.embeddings;
  // Per-user cluster rows gathered once.
  auto gather = [&](const Matrix& per_cluster) {
    Matrix out(n, per_cluster.cols());
    for (Eigen::Index i = 0; i < n; ++i) {
      out.row(i) = per_cluster.row(static_cast<Eigen::Index>(params_.cluster_of[static_cast<std::size_t>(i)]));
    }
    return out;
  };

  f_table_.clear();
  Matrix g_at_f = Matrix::Zero(n, A);
  const Matrix theta_g_user = gather(params_.theta_g);
  for (std::size_t d = 0; d < config_.dim_s; ++d) {
    Matrix f = X * params_.m_f[d] * E.transpose();
    const Vector cluster_term = X.cwiseProduct(gather(params_.theta_f_cluster[d])).rowwise().sum();
    const Vector action_term = E.cwiseProduct(params_.theta_f_action[d]).rowwise().sum();
    f.colwise() += cluster_term;
    f.rowwise() += action_term.transpose();
    g_at_f += (f.array().colwise() * theta_g_user.col(static_cast<Eigen::Index>(d)).array()).matrix();
    f_table_.push_back(std::move(f));
  }
  h_table_ = X * params_.m_h * E.transpose();
  h_table_.colwise() += X.cwiseProduct(gather(params_.theta_h_cluster)).rowwise().sum();
  h_table_.rowwise() += E.cwiseProduct(params_.theta_h_action).rowwise().sum().transpose();
  q_table_ = (1.0 - config_.lambda) * g_at_f + config_.lambda * h_table_;
}

void SyntheticEnv::check_indices(std::size_t user, std::size_t action) const {
  if (user >= n_users()) throw DimensionError("user index " + std::to_string(user) + " out of range");
  if (action >= n_actions()) throw DimensionError("action index " + std::to_string(action) + " out of range");
}

void SyntheticEnv::check_policy(const TabularPolicy& policy) const {
  if (policy.n_users() != n_users() || policy.n_actions() != n_actions()) {
    throw DimensionError("policy shape does not match the environment");
  }
}

Vector SyntheticEnv::expected_short(std::size_t user, std::size_t action) const {
  check_indices(user, action);
  Vector s(static_cast<Eigen::Index>(dim_s()));
  for (std::size_t d = 0; d < dim_s(); ++d) {
    s(static_cast<Eigen::Index>(d)) = f_table_[d](static_cast<Eigen::Index>(user), static_cast<Eigen::Index>(action));
  }
  return s;
}

double SyntheticEnv::surrogate_effect(std::size_t user, std::span<const double> s) const {
  if (user >= n_users()) throw DimensionError("user index out of range");
  if (s.size() != dim_s()) throw DimensionError("surrogate dimension mismatch");
  const auto c = static_cast<Eigen::Index>(params_.cluster_of[user]);
  double g = 0.0;
  for (std::size_t d = 0; d < s.size(); ++d) g += params_.theta_g(c, static_cast<Eigen::Index>(d)) * s[d];
  return g;
}

double SyntheticEnv::action_effect(std::size_t user, std::size_t action) const {
  check_indices(user, action);
  return h_table_(static_cast<Eigen::Index>(user), static_cast<Eigen::Index>(action));
}

double SyntheticEnv::expected_long(std::size_t user, std::size_t action) const {
  check_indices(user, action);
  return q_table_(static_cast<Eigen::Index>(user), static_cast<Eigen::Index>(action));
}

TabularPolicy softmax_policy(const Matrix& q_table, double beta) {
  Matrix logits = beta * q_table;
  logits = logits.colwise() - logits.rowwise().maxCoeff();
  Matrix probs = logits.array().exp();
  probs.array().colwise() /= probs.rowwise().sum().array();
  return TabularPolicy(std::move(probs));
}

TabularPolicy epsilon_greedy_policy(const Matrix& q_table, double epsilon) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw PreconditionError("epsilon must lie in [0, 1]");
  const double floor = epsilon / static_cast<double>(q_table.cols());
  Matrix probs = Matrix::Constant(q_table.rows(), q_table.cols(), floor);
  for (Eigen::Index x = 0; x < q_table.rows(); ++x) {
    Eigen::Index best = 0;
    for (Eigen::Index a = 1; a < q_table.cols(); ++a) {
      if (q_table(x, a) > q_table(x, best)) best = a;
    }
    probs(x, best) += 1.0 - epsilon;
  }
  return TabularPolicy(std::move(probs));
}

TabularPolicy SyntheticEnv::make_logging_policy(double beta) const { return softmax_policy(q_table_, beta); }

TabularPolicy SyntheticEnv::make_target_policy(double epsilon) const {
  return epsilon_greedy_policy(q_table_, epsilon);
}

Vector SyntheticEnv::sample_short(std::size_t user, std::size_t action, Rng& rng) const {
  Vector s = expected_short(user, action);
  for (Eigen::Index d = 0; d < s.size(); ++d) s(d) += config_.sigma_s * standard_normal(rng);
  return s;
}

std::size_t SyntheticEnv::draw_user(Rng& rng) const {
  if (contexts_.is_uniform()) {
    std::uniform_int_distribution<std::size_t> pick(0, n_users() - 1);
    return pick(rng);
  }
  return sample_categorical({contexts_.weights.data(), static_cast<std::size_t>(contexts_.weights.size())}, rng);
}

double SyntheticEnv::draw_outcome(std::size_t user, std::size_t action, Rng& rng, std::vector<double>& s) const {
  const auto x = static_cast<Eigen::Index>(user);
  const auto a = static_cast<Eigen::Index>(action);
  s.resize(dim_s());
  for (std::size_t d = 0; d < dim_s(); ++d) {
    s[d] = f_table_[d](x, a) + config_.sigma_s * standard_normal(rng);
  }
  double g = 0.0;
  if (config_.reward_uses_realized_s) {
    g = surrogate_effect(user, s);
  } else {
    const auto c = static_cast<Eigen::Index>(params_.cluster_of[user]);
    for (std::size_t d = 0; d < dim_s(); ++d) g += params_.theta_g(c, static_cast<Eigen::Index>(d)) * f_table_[d](x, a);
  }
  return (1.0 - config_.lambda) * g + config_.lambda * h_table_(x, a) + config_.sigma_r * standard_normal(rng);
}

HistoricalDataset SyntheticEnv::sample_historical(const TabularPolicy& logging, std::size_t n,
                                                  std::uint64_t seed) const {
  if (n < 1) throw PreconditionError("sample size must be at least 1");
  check_policy(logging);
  const RowMatrix probs = row_major(logging.probs());
  Rng rng = make_rng(seed);
  HistoricalDataset data;
  data.dim_s = dim_s();
  data.provenance = "synthetic logging policy";
  data.reserve(n);
  std::vector<double> s;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t user = draw_user(rng);
    const std::size_t action =
        sample_categorical({probs.row(static_cast<Eigen::Index>(user)).data(), n_actions()}, rng);
    const double r = draw_outcome(user, action, rng, s);
    data.push_back(user, action, logging.prob(user, action), s, r);
  }
  return data;
}

ShortTermDataset SyntheticEnv::sample_short_experiment(const TabularPolicy& target, std::size_t n,
                                                       std::uint64_t seed) const {
  if (n < 1) throw PreconditionError("sample size must be at least 1");
  check_policy(target);
  const RowMatrix probs = row_major(target.probs());
  Rng rng = make_rng(seed);
  ShortTermDataset data;
  data.dim_s = dim_s();
  std::vector<double> s;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t user = draw_user(rng);
    const std::size_t action =
        sample_categorical({probs.row(static_cast<Eigen::Index>(user)).data(), n_actions()}, rng);
    draw_outcome(user, action, rng, s);
    data.push_back(user, s);
  }
  return data;
}

LongTermOutcomes SyntheticEnv::sample_long_experiment(const TabularPolicy& target, std::size_t n,
                                                      std::uint64_t seed) const {
  if (n < 1) throw PreconditionError("sample size must be at least 1");
  check_policy(target);
  const RowMatrix probs = row_major(target.probs());
  Rng rng = make_rng(seed);
  LongTermOutcomes out;
  out.rewards.reserve(n);
  std::vector<double> s;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t user = draw_user(rng);
    const std::size_t action =
        sample_categorical({probs.row(static_cast<Eigen::Index>(user)).data(), n_actions()}, rng);
    out.rewards.push_back(draw_outcome(user, action, rng, s));
  }
  return out;
}

void SyntheticEnv::write_parameters_csv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "tensor,i,j,k,value\n";
  auto emit = [&](const std::string& name, const Matrix& m, long k) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) {
        out << name << ',' << i << ',' << j << ',' << k << ',' << format_double(m(i, j)) << '\n';
      }
    }
  };
  emit("user_features", contexts_.features, -1);
  emit("action_embeddings", actions_.embeddings, -1);
  for (std::size_t d = 0; d < dim_s(); ++d) emit("M_f", params_.m_f[d], static_cast<long>(d));
  emit("M_h", params_.m_h, -1);
  emit("theta_g", params_.theta_g, -1);
  for (std::size_t d = 0; d < dim_s(); ++d) emit("theta_f_cluster", params_.theta_f_cluster[d], static_cast<long>(d));
  for (std::size_t d = 0; d < dim_s(); ++d) emit("theta_f_action", params_.theta_f_action[d], static_cast<long>(d));
  emit("theta_h_cluster", params_.theta_h_cluster, -1);
  emit("theta_h_action", params_.theta_h_action, -1);
  for (std::size_t u = 0; u < params_.cluster_of.size(); ++u) {
    out << "cluster_of," << u << ",0,-1," << params_.cluster_of[u] << '\n';
  }
}

}  // namespace lope
