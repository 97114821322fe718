#include "cli.hpp"

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "lope/dataset_io.hpp"
#include "lope/envs/synthetic_env.hpp"
#include "lope/error.hpp"
#include "lope/estimators/estimators.hpp"
#include "lope/harness/experiments.hpp"
#include "lope/harness/report.hpp"
#include "lope/harness/theorem_suite.hpp"
#include "lope/learners/trainer.hpp"
#include "lope/policy_value.hpp"

namespace lope::cli {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

// Collects outputs of one run and writes manifest.json next to them.
class Run {
 public:
  Run(std::string command, const std::vector<std::string>& args, fs::path dir, std::uint64_t seed)
      : command_(std::move(command)), args_(args), dir_(std::move(dir)), seed_(seed), started_(utc_now()) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec || !fs::is_directory(dir_)) throw ValidationError("cannot create output directory " + dir_.string());
  }

  fs::path path(const std::string& name) {
    outputs_.push_back(name);
    return dir_ / name;
  }
  void add(const fs::path& p) { outputs_.push_back(p.filename().string()); }

  void finish(const json& config) {
    json m{{"command", command_},
           {"argv", args_},
           {"config", config},
           {"seed", seed_},
           {"version", LOPE_VERSION},
           {"started_at", started_},
           {"outputs", outputs_}};
    write_json_file(dir_ / "manifest.json", m);
  }

 private:
  std::string command_;
  std::vector<std::string> args_;
  fs::path dir_;
  std::uint64_t seed_;
  std::string started_;
  std::vector<std::string> outputs_;
};

std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> grid;
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    std::size_t pos = 0;
    double v = 0.0;
    try {
      v = std::stod(cell, &pos);
    } catch (const std::exception&) {
      throw ValidationError("bad grid value '" + cell + "'");
    }
    if (pos != cell.size()) throw ValidationError("bad grid value '" + cell + "'");
    grid.push_back(v);
  }
  if (grid.empty()) throw ValidationError("--grid needs at least one value");
  return grid;
}

json load_json(const std::string& path) {
  if (!fs::exists(path)) throw ValidationError("no such file: " + path);
  try {
    return read_json_file(path);
  } catch (const json::exception& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

void require_file(const std::string& path) {
  if (!fs::exists(path)) throw ValidationError("no such file: " + path);
}

ContextSet one_hot_contexts(std::size_t n_users) {
  return ContextSet::uniform(Matrix::Identity(static_cast<Eigen::Index>(n_users), static_cast<Eigen::Index>(n_users)));
}

// Tabular policies load as-is; trained softmax policies are tabulated over the contexts.
TabularPolicy load_policy(const std::string& path, const std::optional<ContextSet>& contexts) {
  const json j = load_json(path);
  if (j.value("kind", std::string()) == "softmax_policy") {
    if (!contexts) throw ValidationError(path + " is a trained policy; pass --contexts to tabulate it");
    return policy_model_from_json(j).as_tabular(contexts->features);
  }
  try {
    return policy_from_json(j);
  } catch (const json::exception& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

LongTermOutcomes read_long_csv(const std::string& path) {
  require_file(path);
  std::ifstream in(path);
  LongTermOutcomes out;
  std::string line;
  if (!std::getline(in, line)) return out;
  if (line != "r") throw ValidationError(path + ": long-term CSV header must be r");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      out.rewards.push_back(std::stod(line));
    } catch (const std::exception&) {
      throw ValidationError(path + ": bad reward '" + line + "'");
    }
  }
  return out;
}

void write_long_csv(const fs::path& path, const LongTermOutcomes& data) {
  std::ofstream out(path);
  out << "r\n";
  for (const double r : data.rewards) out << format_double(r) << '\n';
}

SyntheticEnvConfig env_config_from_file(const std::string& path) {
  if (path.empty()) return {};
  const json j = load_json(path);
  // Accept either a bare env config or an experiment config with an "env" key.
  return synthetic_config_from_json(j.contains("env") ? j.at("env") : j);
}

ExperimentConfig experiment_from_file(const std::string& path) {
  if (path.empty()) return {};
  return experiment_config_from_json(load_json(path));
}

struct Common {
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::size_t workers = 1;
};

void add_common(CLI::App* cmd, Common& c, const std::string& default_dir) {
  c.out_dir = default_dir;
  cmd->add_option("--out", c.out_dir, "Output directory");
  cmd->add_option("--seed", c.seed, "Base random seed")->each([&c](const std::string&) { c.seed_given = true; });
  cmd->add_option("--workers", c.workers, "Worker threads")->check(CLI::PositiveNumber);
}

int print_suite(const TheoremSuiteReport& report, std::ostream& out) {
  for (const auto& c : report.checks) {
    out << std::left << std::setw(36) << c.name << std::setw(14) << std::setprecision(3) << std::scientific << c.value
        << std::defaultfloat << (c.informational ? "info" : (c.passed ? "pass" : "FAIL"));
    if (!c.detail.empty()) out << "  " << c.detail;
    out << '\n';
  }
  out << "max identity gap: " << std::scientific << std::setprecision(3) << report.max_identity_gap()
      << std::defaultfloat << '\n';
  return report.all_passed() ? kExitOk : kExitRuntime;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Long-term off-policy evaluation and learning", "lope"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  // oracle-check
  Common oc;
  std::size_t n_envs = 10;
  bool on_policy = false;
  auto* oracle = app.add_subcommand("oracle-check", "Verify the exact identities on random tabular environments");
  add_common(oracle, oc, "runs/oracle-check");
  oracle->add_option("--envs", n_envs, "Number of random environments")->check(CLI::PositiveNumber);
  oracle->add_flag("--on-policy", on_policy, "Use the logging policy as target");

  // simulate
  Common sc;
  std::string sim_config;
  std::size_t sim_n = 500;
  auto* simulate = app.add_subcommand("simulate", "Sample D_H, D_S, D_E and both policies from a synthetic env");
  add_common(simulate, sc, "runs/simulate");
  simulate->add_option("--config", sim_config, "Environment config JSON");
  simulate->add_option("--n", sim_n, "Records per dataset")->check(CLI::PositiveNumber);

  // estimate
  Common ec;
  std::string est_name, est_data, est_policy, est_logging, est_contexts, est_short, est_long, est_config;
  auto* estimate = app.add_subcommand("estimate", "Estimate V(pi1) from logged data");
  add_common(estimate, ec, "runs/estimate");
  estimate->add_option("--estimator", est_name, "avg, lci, ips, dr or lope")
      ->required()
      ->check(CLI::IsMember({"avg", "lci", "ips", "dr", "lope"}));
  estimate->add_option("--data", est_data, "Historical dataset CSV");
  estimate->add_option("--policy", est_policy, "Target policy JSON");
  estimate->add_option("--logging", est_logging, "Logging policy JSON (lope)");
  estimate->add_option("--contexts", est_contexts, "User features CSV (default: one-hot users)");
  estimate->add_option("--short", est_short, "Short-term experiment CSV (lci)");
  estimate->add_option("--long", est_long, "Long-term experiment CSV (avg)");
  estimate->add_option("--config", est_config, "Nuisance config JSON");

  // sweep / select / opl share the grid flags
  struct GridFlags {
    Common common;
    std::string param = "n";
    std::string grid;
    std::string config;
    std::size_t replications = 0;
    bool linear_y = false;
    std::string learner_config;
  };
  GridFlags sw, se, op;
  auto add_grid = [](CLI::App* cmd, GridFlags& g, const std::string& dir) {
    add_common(cmd, g.common, dir);
    cmd->add_option("--param", g.param, "n, lambda, sigma_r, epsilon, sigma_s or n_clusters");
    cmd->add_option("--grid", g.grid, "Comma-separated values")->required();
    cmd->add_option("--config", g.config, "Experiment config JSON");
    cmd->add_option("--replications", g.replications, "Replications per cell (overrides config)");
  };
  auto* sweep = app.add_subcommand("sweep", "MSE, squared bias and variance over a parameter grid");
  add_grid(sweep, sw, "runs/sweep");
  sweep->add_flag("--linear-y", sw.linear_y, "Linear instead of log y-axis in charts");
  auto* select = app.add_subcommand("select", "Policy-selection accuracy over a parameter grid");
  add_grid(select, se, "runs/select");
  auto* opl = app.add_subcommand("opl", "Train policies on D_H and score them exactly");
  add_grid(opl, op, "runs/opl");
  opl->add_option("--learner-config", op.learner_config, "Learner config JSON");

  // learn
  Common lc;
  std::string learn_data, learn_contexts, learn_logging, learn_config;
  auto* learn = app.add_subcommand("learn", "Train a softmax policy by policy gradient");
  add_common(learn, lc, "runs/learn");
  learn->add_option("--data", learn_data, "Historical dataset CSV")->required();
  learn->add_option("--contexts", learn_contexts, "User features CSV (default: one-hot users)");
  learn->add_option("--logging", learn_logging, "Logging policy JSON")->required();
  learn->add_option("--config", learn_config, "Learner config JSON");

  // report
  Common rc;
  std::string report_csv;
  bool report_linear = false;
  auto* report = app.add_subcommand("report", "Redraw sweep charts from a stored CSV");
  add_common(report, rc, "runs/report");
  report->add_option("--csv", report_csv, "Sweep CSV")->required();
  report->add_flag("--linear-y", report_linear, "Linear instead of log y-axis");

  // envs dump
  Common dc;
  std::string dump_config;
  auto* envs = app.add_subcommand("envs", "Environment utilities");
  envs->require_subcommand(1);
  auto* dump = envs->add_subcommand("dump", "Write every sampled environment parameter to CSV");
  add_common(dump, dc, "runs/envs");
  dump->add_option("--config", dump_config, "Environment config JSON");

  std::vector<std::string> rev(args.begin() + (args.empty() ? 0 : 1), args.end());
  std::reverse(rev.begin(), rev.end());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitValidation;
  }

  try {
    if (oracle->parsed()) {
      Run run("oracle-check", args, oc.out_dir, oc.seed);
      TheoremSuiteOptions opts{oc.seed, n_envs, on_policy};
      const auto suite = run_theorem_suite(opts);
      write_theorem_csv(run.path("oracle_check.csv"), suite);
      run.finish({{"envs", n_envs}, {"on_policy", on_policy}});
      return print_suite(suite, out);
    }

    if (simulate->parsed()) {
      SyntheticEnvConfig cfg = env_config_from_file(sim_config);
      if (sc.seed_given) cfg.seed = sc.seed;
      Run run("simulate", args, sc.out_dir, cfg.seed);
      const SyntheticEnv env = SyntheticEnv::build(cfg);
      const TabularPolicy pi0 = env.make_logging_policy(cfg.beta);
      const TabularPolicy pi1 = env.make_target_policy(cfg.epsilon);
      write_historical_csv(run.path("dh.csv"), env.sample_historical(pi0, sim_n, derive_seed(cfg.seed, {kHistoricalStream})));
      write_short_csv(run.path("ds.csv"), env.sample_short_experiment(pi1, sim_n, derive_seed(cfg.seed, {kShortStream})));
      write_long_csv(run.path("de.csv"), env.sample_long_experiment(pi1, sim_n, derive_seed(cfg.seed, {kLongStream})));
      write_contexts_csv(run.path("contexts.csv"), env.contexts());
      write_json_file(run.path("pi0.json"), policy_to_json(pi0));
      write_json_file(run.path("pi1.json"), policy_to_json(pi1));
      const double v0 = policy_value_exact(pi0, env.q_table(), env.contexts().weights);
      const double v1 = policy_value_exact(pi1, env.q_table(), env.contexts().weights);
      write_json_file(run.path("truth.json"), {{"value_pi0", v0}, {"value_pi1", v1}});
      run.finish({{"env", to_json(cfg)}, {"n", sim_n}});
      out << "V(pi0) = " << v0 << "\nV(pi1) = " << v1 << '\n';
      return kExitOk;
    }

    if (estimate->parsed()) {
      NuisanceConfig nc = est_config.empty() ? NuisanceConfig{} : nuisance_config_from_json(load_json(est_config));
      if (ec.seed_given) nc.seed = ec.seed;
      EstimateReport result;
      if (est_name == "avg") {
        if (est_long.empty()) throw ValidationError("avg needs --long");
        result = avg_estimate(read_long_csv(est_long));
      } else {
        if (est_data.empty() || est_policy.empty()) throw ValidationError(est_name + " needs --data and --policy");
        require_file(est_data);
        const HistoricalDataset dh = read_historical_csv(est_data);
        if (dh.empty()) throw PreconditionError("estimator called on an empty historical dataset (" + est_data + ")");
        std::optional<ContextSet> contexts;
        if (!est_contexts.empty()) {
          require_file(est_contexts);
          contexts = read_contexts_csv(est_contexts);
        }
        const TabularPolicy pi1 = load_policy(est_policy, contexts);
        if (!contexts) contexts = one_hot_contexts(pi1.n_users());
        if (contexts->size() != pi1.n_users()) throw DimensionError("contexts and policy cover different users");
        if (est_name == "ips") {
          result = ips_estimate(dh, pi1);
        } else {
          const RewardModelBundle bundle = fit_reward_models(dh, *contexts, pi1.n_actions(), nc);
          if (est_name == "dr") {
            result = dr_estimate(dh, pi1, bundle.q_hat_xa);
          } else if (est_name == "lci") {
            if (est_short.empty()) throw ValidationError("lci needs --short");
            require_file(est_short);
            result = lci_estimate(read_short_csv(est_short), bundle);
          } else {
            if (est_logging.empty()) throw ValidationError("lope needs --logging");
            const TabularPolicy pi0 = load_policy(est_logging, contexts);
            std::optional<ShortTermDataset> ds;
            if (!est_short.empty()) {
              require_file(est_short);
              ds = read_short_csv(est_short);
            }
            const SurrogateWeightModel w =
                estimate_surrogate_weights(dh, *contexts, pi1, pi0, nc, ds ? &*ds : nullptr);
            result = lope_estimate(dh, w, bundle);
          }
        }
      }
      Run run("estimate", args, ec.out_dir, nc.seed);
      const json j{{"estimator_name", result.estimator_name}, {"value", result.value}, {"diagnostics", result.diagnostics}};
      write_json_file(run.path("estimate.json"), j);
      run.finish({{"estimator", est_name}, {"data", est_data}, {"policy", est_policy}, {"nuisance", to_json(nc)}});
      out << result.estimator_name << ": " << format_double(result.value) << '\n';
      return kExitOk;
    }

    auto grid_config = [](GridFlags& g) {
      SweepConfig cfg;
      cfg.base = experiment_from_file(g.config);
      if (g.common.seed_given) cfg.base.seed = g.common.seed;
      cfg.base.workers = g.common.workers;
      if (g.replications) cfg.base.replications = g.replications;
      cfg.parameter = sweep_parameter_from_string(g.param);
      cfg.grid = parse_grid(g.grid);
      cfg.validate();
      return cfg;
    };
    auto grid_json = [](const SweepConfig& cfg) {
      return json{{"experiment", to_json(cfg.base)}, {"param", to_string(cfg.parameter)}, {"grid", cfg.grid}};
    };
    auto write_failures = [](Run& run, const std::vector<std::string>& failures, std::ostream& e) {
      if (failures.empty()) return;
      std::ofstream f(run.path("failures.txt"));
      for (const auto& line : failures) f << line << '\n';
      e << failures.size() << " replication failures, see failures.txt\n";
    };

    if (sweep->parsed()) {
      const SweepConfig cfg = grid_config(sw);
      Run run("sweep", args, sw.common.out_dir, cfg.base.seed);
      const SweepReport rep = run_evaluation_sweep(cfg);
      const std::string stem = "sweep_" + to_string(cfg.parameter);
      write_sweep_csv(run.path(stem + ".csv"), rep.rows);
      // Charts are drawn from the CSV so `report` reproduces them exactly.
      for (const auto& p : write_sweep_svgs(sw.common.out_dir, stem, read_sweep_csv(fs::path(sw.common.out_dir) / (stem + ".csv")), !sw.linear_y)) {
        run.add(p);
      }
      write_failures(run, rep.failures, err);
      run.finish(grid_json(cfg));
      for (const auto& r : rep.rows) {
        out << r.estimator << " " << to_string(cfg.parameter) << "=" << r.parameter_value << " mse=" << r.mse
            << " bias2=" << r.squared_bias << " var=" << r.variance << " R=" << r.n_replications << '\n';
      }
      return kExitOk;
    }

    if (select->parsed()) {
      const SweepConfig cfg = grid_config(se);
      Run run("select", args, se.common.out_dir, cfg.base.seed);
      const SelectionReport rep = run_selection_experiment(cfg);
      write_selection_csv(run.path("selection_" + to_string(cfg.parameter) + ".csv"), rep);
      write_failures(run, rep.failures, err);
      run.finish(grid_json(cfg));
      for (const auto& r : rep.rows) {
        out << r.estimator << " " << to_string(cfg.parameter) << "=" << r.parameter_value << " accuracy=" << r.accuracy
            << " R=" << r.n_replications << '\n';
      }
      return kExitOk;
    }

    if (opl->parsed()) {
      OplConfig cfg;
      cfg.sweep = grid_config(op);
      if (!op.learner_config.empty()) cfg.learner = learner_config_from_json(load_json(op.learner_config));
      Run run("opl", args, op.common.out_dir, cfg.sweep.base.seed);
      const OplReport rep = run_opl_experiment(cfg);
      write_opl_csv(run.path("opl_" + to_string(cfg.sweep.parameter) + ".csv"), rep);
      write_failures(run, rep.failures, err);
      json j = grid_json(cfg.sweep);
      j["learner"] = to_json(cfg.learner);
      run.finish(j);
      for (const auto& r : rep.rows) {
        out << r.learner << " " << to_string(cfg.sweep.parameter) << "=" << r.parameter_value
            << " value=" << r.mean_value << " relative=" << r.relative_value << " R=" << r.n_replications << '\n';
      }
      return kExitOk;
    }

    if (learn->parsed()) {
      LearnerConfig cfg = learn_config.empty() ? LearnerConfig{} : learner_config_from_json(load_json(learn_config));
      if (lc.seed_given) cfg.seed = cfg.nuisance.seed = lc.seed;
      require_file(learn_data);
      const HistoricalDataset dh = read_historical_csv(learn_data);
      if (dh.empty()) throw PreconditionError("training called on an empty historical dataset (" + learn_data + ")");
      std::optional<ContextSet> contexts;
      if (!learn_contexts.empty()) {
        require_file(learn_contexts);
        contexts = read_contexts_csv(learn_contexts);
      }
      const TabularPolicy pi0 = load_policy(learn_logging, contexts);
      if (!contexts) contexts = one_hot_contexts(pi0.n_users());
      Run run("learn", args, lc.out_dir, cfg.seed);
      const TrainingResult result = train_policy(dh, *contexts, pi0, cfg);
      write_json_file(run.path("policy.json"), to_json(result.model));
      std::ofstream trace(run.path("trace.csv"));
      trace << "epoch,value\n";
      for (std::size_t e = 0; e < result.value_trace.size(); ++e) {
        trace << e << ',' << format_double(result.value_trace[e]) << '\n';
      }
      run.finish(to_json(cfg));
      out << "final estimated value: "
          << (result.value_trace.empty() ? std::string("n/a") : format_double(result.value_trace.back())) << '\n';
      return kExitOk;
    }

    if (report->parsed()) {
      require_file(report_csv);
      Run run("report", args, rc.out_dir, rc.seed);
      const auto rows = read_sweep_csv(report_csv);
      for (const auto& p : write_sweep_svgs(rc.out_dir, fs::path(report_csv).stem().string(), rows, !report_linear)) {
        run.add(p);
      }
      run.finish({{"csv", report_csv}, {"log_y", !report_linear}});
      return kExitOk;
    }

    if (dump->parsed()) {
      SyntheticEnvConfig cfg = env_config_from_file(dump_config);
      if (dc.seed_given) cfg.seed = dc.seed;
      Run run("envs dump", args, dc.out_dir, cfg.seed);
      const SyntheticEnv env = SyntheticEnv::build(cfg);
      env.write_parameters_csv(run.path("env_parameters.csv"));
      write_json_file(run.path("env_config.json"), to_json(cfg));
      run.finish(to_json(cfg));
      return kExitOk;
    }
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "runtime failure: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitValidation;
}

}  // namespace lope::cli
