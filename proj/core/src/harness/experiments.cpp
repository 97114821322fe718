#include "lope/harness/experiments.hpp"

#include <cmath>
#include <limits>
#include <set>

#include "lope/error.hpp"
#include "lope/estimators/estimators.hpp"
#include "lope/harness/parallel.hpp"
#include "lope/policy_value.hpp"

namespace lope {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::size_t whole(double value, const char* name) {
  if (!(value >= 0.0) || std::floor(value) != value) {
    throw ConfigError(std::string(name) + " must be a non-negative whole number");
  }
  return static_cast<std::size_t>(value);
}

std::string cell_label(SweepParameter p, double value, std::size_t r) {
  return to_string(p) + "=" + std::to_string(value) + " replication " + std::to_string(r);
}

std::vector<NamedEstimator> resolve(const SweepConfig& config, const std::vector<NamedEstimator>& given) {
  return given.empty() ? standard_estimators(config.base.estimators) : given;
}

bool any_needs_nuisances(const std::vector<NamedEstimator>& estimators) {
  for (const auto& e : estimators) {
    if (e.needs_nuisances) return true;
  }
  return false;
}

// Estimates for every replication of one cell, NaN where something failed.
struct CellResult {
  std::vector<std::vector<double>> estimates;  // [estimator][replication]
  std::vector<double> truths;
  std::vector<double> logging_truths;
  std::vector<double> logging_estimates;  // on-policy mean of D_H
  std::vector<std::string> failures;
};

CellResult run_cell(const ExperimentConfig& cell, SweepParameter parameter, double value,
                    const std::vector<NamedEstimator>& estimators) {
  const std::size_t R = cell.replications;
  CellResult out;
  out.estimates.assign(estimators.size(), std::vector<double>(R, kNaN));
  out.truths.assign(R, kNaN);
  out.logging_truths.assign(R, kNaN);
  out.logging_estimates.assign(R, kNaN);
  std::vector<std::vector<std::string>> failures(R);
  const bool fit = any_needs_nuisances(estimators);

  parallel_for(R, cell.workers, [&](std::size_t r) {
    std::optional<Replication> rep;
    try {
      rep.emplace(make_replication(cell, r, fit));
    } catch (const std::exception& e) {
      failures[r].push_back(cell_label(parameter, value, r) + ": setup failed: " + e.what());
      return;
    }
    out.truths[r] = rep->true_value;
    out.logging_truths[r] = rep->logging_value;
    out.logging_estimates[r] = on_policy_value(rep->dh);
    for (std::size_t k = 0; k < estimators.size(); ++k) {
      try {
        const double v = estimators[k].estimate(*rep);
        if (!std::isfinite(v)) throw NumericError("non-finite estimate");
        out.estimates[k][r] = v;
      } catch (const std::exception& e) {
        failures[r].push_back(cell_label(parameter, value, r) + ": " + estimators[k].name + ": " + e.what());
      }
    }
  });
  for (auto& f : failures) {
    for (auto& line : f) out.failures.push_back(std::move(line));
  }
  return out;
}

}  // namespace

std::string to_string(SweepParameter p) {
  switch (p) {
    case SweepParameter::kN: return "n";
    case SweepParameter::kLambda: return "lambda";
    case SweepParameter::kSigmaR: return "sigma_r";
    case SweepParameter::kEpsilon: return "epsilon";
    case SweepParameter::kSigmaS: return "sigma_s";
    case SweepParameter::kNClusters: return "n_clusters";
  }
  return "?";
}

SweepParameter sweep_parameter_from_string(const std::string& name) {
  if (name == "n") return SweepParameter::kN;
  if (name == "lambda") return SweepParameter::kLambda;
  if (name == "sigma_r") return SweepParameter::kSigmaR;
  if (name == "epsilon") return SweepParameter::kEpsilon;
  if (name == "sigma_s") return SweepParameter::kSigmaS;
  if (name == "n_clusters") return SweepParameter::kNClusters;
  throw ConfigError("unknown sweep parameter '" + name +
                    "' (expected n, lambda, sigma_r, epsilon, sigma_s or n_clusters)");
}

void SweepConfig::validate() const {
  if (grid.empty()) throw ConfigError("sweep grid must not be empty");
  if (base.replications < 2) throw ConfigError("a sweep needs at least two replications");
  for (const double v : grid) apply_parameter(base, parameter, v).env.validate();
}

ExperimentConfig apply_parameter(ExperimentConfig config, SweepParameter parameter, double value) {
  switch (parameter) {
    case SweepParameter::kN:
      config.n = whole(value, "n");
      if (config.n < 1) throw ConfigError("n must be at least 1");
      break;
    case SweepParameter::kLambda: config.env.lambda = value; break;
    case SweepParameter::kSigmaR: config.env.sigma_r = value; break;
    case SweepParameter::kEpsilon: config.env.epsilon = value; break;
    case SweepParameter::kSigmaS: config.env.sigma_s = value; break;
    case SweepParameter::kNClusters: config.env.n_clusters = whole(value, "n_clusters"); break;
  }
  return config;
}

nlohmann::json to_json(const ExperimentConfig& c) {
  return {{"env", to_json(c.env)},
          {"n", c.n},
          {"replications", c.replications},
          {"seed", c.seed},
          {"workers", c.workers},
          {"fix_env_across_replications", c.fix_env_across_replications},
          {"nuisance", to_json(c.nuisance)},
          {"estimators", c.estimators}};
}

ExperimentConfig experiment_config_from_json(const nlohmann::json& j) {
  static const std::set<std::string> known{"env",     "n",   "replications", "seed", "workers",
                                           "fix_env_across_replications", "nuisance", "estimators"};
  if (!j.is_object()) throw ConfigError("experiment config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) throw ConfigError("unknown experiment config key '" + key + "'");
  }
  ExperimentConfig c;
  try {
    if (j.contains("env")) c.env = synthetic_config_from_json(j.at("env"));
    c.n = j.value("n", c.n);
    c.replications = j.value("replications", c.replications);
    c.seed = j.value("seed", c.seed);
    c.workers = j.value("workers", c.workers);
    c.fix_env_across_replications = j.value("fix_env_across_replications", c.fix_env_across_replications);
    if (j.contains("nuisance")) c.nuisance = nuisance_config_from_json(j.at("nuisance"));
    if (j.contains("estimators")) c.estimators = j.at("estimators").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("experiment config: ") + e.what());
  }
  standard_estimators(c.estimators);  // rejects unknown names early
  return c;
}

SurrogateSampler env_surrogate_sampler(std::shared_ptr<const SyntheticEnv> env) {
  return [env](std::size_t user, std::size_t action, Rng& rng, std::vector<double>& s) {
    const Vector v = env->sample_short(user, action, rng);
    s.assign(v.data(), v.data() + v.size());
  };
}

Replication make_replication(const ExperimentConfig& config, std::size_t r, bool fit_nuisances) {
  if (config.n < 1) throw ConfigError("n must be at least 1");
  SyntheticEnvConfig env_config = config.env;
  if (!config.fix_env_across_replications) env_config.seed = derive_seed(config.seed, {r, kEnvStream});
  Replication rep;
  rep.env = std::make_shared<const SyntheticEnv>(SyntheticEnv::build(env_config));
  const SyntheticEnv& env = *rep.env;
  rep.logging = env.make_logging_policy(env_config.beta);
  rep.target = env.make_target_policy(env_config.epsilon);
  rep.dh = env.sample_historical(rep.logging, config.n, derive_seed(config.seed, {r, kHistoricalStream}));
  rep.ds = env.sample_short_experiment(rep.target, config.n, derive_seed(config.seed, {r, kShortStream}));
  rep.de = env.sample_long_experiment(rep.target, config.n, derive_seed(config.seed, {r, kLongStream}));
  rep.true_value = policy_value_exact(rep.target, env.q_table(), env.contexts().weights);
  rep.logging_value = policy_value_exact(rep.logging, env.q_table(), env.contexts().weights);
  if (fit_nuisances) {
    NuisanceConfig nc = config.nuisance;
    nc.seed = derive_seed(config.seed, {r, kNuisanceStream});
    rep.bundle = fit_reward_models(rep.dh, env.contexts(), env.n_actions(), nc, env_surrogate_sampler(rep.env));
    rep.weights = estimate_surrogate_weights(rep.dh, env.contexts(), rep.target, rep.logging, nc, &rep.ds);
  }
  return rep;
}

NamedEstimator standard_estimator(const std::string& name) {
  if (name == "avg") {
    return {name, [](const Replication& r) { return avg_estimate(r.de).value; }, false};
  }
  if (name == "lci") {
    return {name, [](const Replication& r) { return lci_estimate(r.ds, r.bundle.value()).value; }, true};
  }
  if (name == "ips") {
    return {name, [](const Replication& r) { return ips_estimate(r.dh, r.target).value; }, false};
  }
  if (name == "dr") {
    return {name, [](const Replication& r) { return dr_estimate(r.dh, r.target, r.bundle.value().q_hat_xa).value; },
            true};
  }
  if (name == "lope") {
    return {name,
            [](const Replication& r) { return lope_estimate(r.dh, r.weights.value(), r.bundle.value()).value; },
            true};
  }
  throw ConfigError("unknown estimator '" + name + "' (expected avg, lci, ips, dr or lope)");
}

std::vector<NamedEstimator> standard_estimators(const std::vector<std::string>& names) {
  if (names.empty()) throw ConfigError("estimator list must not be empty");
  std::vector<NamedEstimator> out;
  for (const auto& n : names) out.push_back(standard_estimator(n));
  return out;
}

SweepReport run_evaluation_sweep(const SweepConfig& config, const std::vector<NamedEstimator>& given) {
  config.validate();
  const auto estimators = resolve(config, given);
  SweepReport report;
  report.parameter = config.parameter;
  for (const double value : config.grid) {
    const ExperimentConfig cell = apply_parameter(config.base, config.parameter, value);
    CellResult res = run_cell(cell, config.parameter, value, estimators);
    for (std::size_t k = 0; k < estimators.size(); ++k) {
      report.rows.push_back(aggregate_metrics(estimators[k].name, value, res.estimates[k], res.truths));
    }
    for (auto& f : res.failures) report.failures.push_back(std::move(f));
  }
  return report;
}

SelectionReport run_selection_experiment(const SweepConfig& config, const std::vector<NamedEstimator>& given) {
  config.validate();
  const auto estimators = resolve(config, given);
  SelectionReport report;
  report.parameter = config.parameter;
  for (const double value : config.grid) {
    const ExperimentConfig cell = apply_parameter(config.base, config.parameter, value);
    CellResult res = run_cell(cell, config.parameter, value, estimators);
    for (std::size_t k = 0; k < estimators.size(); ++k) {
      SelectionRow row;
      row.estimator = estimators[k].name;
      row.parameter_value = value;
      std::size_t hits = 0;
      for (std::size_t r = 0; r < cell.replications; ++r) {
        const double v1 = res.estimates[k][r];
        if (!std::isfinite(v1) || !std::isfinite(res.truths[r])) {
          row.complete = false;
          continue;
        }
        ++row.n_replications;
        const bool predicted = v1 > res.logging_estimates[r];
        const bool actual = res.truths[r] > res.logging_truths[r];
        if (predicted == actual) ++hits;
      }
      row.accuracy = row.n_replications ? static_cast<double>(hits) / static_cast<double>(row.n_replications) : kNaN;
      report.rows.push_back(row);
    }
    for (auto& f : res.failures) report.failures.push_back(std::move(f));
  }
  return report;
}

OplReport run_opl_experiment(const OplConfig& config) {
  config.sweep.validate();
  config.learner.validate();
  for (const auto& name : config.learners) {
    if (name != "reg_based") gradient_estimator_from_string(name);
  }
  OplReport report;
  report.parameter = config.sweep.parameter;
  const std::size_t L = config.learners.size();
  for (const double value : config.sweep.grid) {
    const ExperimentConfig cell = apply_parameter(config.sweep.base, config.sweep.parameter, value);
    const std::size_t R = cell.replications;
    std::vector<std::vector<double>> values(L, std::vector<double>(R, kNaN));
    std::vector<std::vector<std::string>> failures(R);
    parallel_for(R, cell.workers, [&](std::size_t r) {
      std::optional<Replication> rep;
      try {
        rep.emplace(make_replication(cell, r, false));
      } catch (const std::exception& e) {
        failures[r].push_back(cell_label(config.sweep.parameter, value, r) + ": setup failed: " + e.what());
        return;
      }
      const SyntheticEnv& env = *rep->env;
      NuisanceConfig nc = cell.nuisance;
      nc.seed = derive_seed(cell.seed, {r, kNuisanceStream});
      for (std::size_t k = 0; k < L; ++k) {
        try {
          TabularPolicy policy;
          if (config.learners[k] == "reg_based") {
            policy = reg_based_policy(rep->dh, env.contexts(), env.n_actions(), nc.regressor, nc.action_interactions,
                                      derive_seed(cell.seed, {r, kLearnerStream}));
          } else {
            LearnerConfig lc = config.learner;
            lc.gradient_estimator = gradient_estimator_from_string(config.learners[k]);
            lc.nuisance = nc;
            lc.seed = derive_seed(cell.seed, {r, kLearnerStream});
            const TrainingResult trained =
                train_policy(rep->dh, env.contexts(), rep->logging, lc, env_surrogate_sampler(rep->env));
            policy = trained.model.as_tabular(env.contexts().features);
          }
          values[k][r] = policy_value_exact(policy, env.q_table(), env.contexts().weights);
        } catch (const std::exception& e) {
          failures[r].push_back(cell_label(config.sweep.parameter, value, r) + ": " + config.learners[k] + ": " +
                                e.what());
        }
      }
    });
    double lope_mean = kNaN;
    std::vector<OplRow> rows;
    for (std::size_t k = 0; k < L; ++k) {
      OplRow row;
      row.learner = config.learners[k];
      row.parameter_value = value;
      double sum = 0.0;
      for (const double v : values[k]) {
        if (std::isfinite(v)) {
          sum += v;
          ++row.n_replications;
        } else {
          row.complete = false;
        }
      }
      row.mean_value = row.n_replications ? sum / static_cast<double>(row.n_replications) : kNaN;
      if (row.learner == "lope_pg") lope_mean = row.mean_value;
      rows.push_back(row);
    }
    for (auto& row : rows) {
      row.relative_value = row.mean_value / lope_mean;
      report.rows.push_back(row);
    }
    for (auto& f : failures) {
      for (auto& line : f) report.failures.push_back(std::move(line));
    }
  }
  return report;
}

}  // namespace lope
