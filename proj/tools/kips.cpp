// Command-line harness: simulate the synthetic market, evaluate policies on
// logged data, dump kernels, fit pricing policies and run the seeded
// experiment studies.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "kips/kips.hpp"

namespace {

using namespace kips;
namespace fs = std::filesystem;

harness::EnvConfig load_env(const std::string& path) {
  return path.empty() ? harness::EnvConfig{} : harness::EnvConfig::load(path);
}

harness::Config env_as_config(const harness::EnvConfig& env, std::uint64_t seed) {
  harness::Config cfg;
  cfg.set("version", std::to_string(harness::kEnvConfigVersion));
  auto join = [](const auto& vec) {
    std::string s;
    for (Index i = 0; i < static_cast<Index>(vec.size()); ++i) {
      if (i) s += ",";
      s += harness::format_double(vec[i]);
    }
    return s;
  };
  cfg.set("alpha1", join(env.params.alpha1));
  cfg.set("alpha2", join(env.params.alpha2));
  cfg.set("alpha3", join(env.params.alpha3));
  cfg.set("lambda_loading", harness::format_double(env.params.lambda_loading));
  cfg.set("fair_rate", harness::format_double(env.params.fair_rate));
  cfg.set("elasticity_cap", harness::format_double(env.params.elasticity_cap));
  cfg.set("higher_order_enabled", env.params.higher_order_enabled ? "true" : "false");
  cfg.set("seed", std::to_string(seed));
  cfg.set("historical_actions", join(env.historical.levels()));
  cfg.set("evaluation_actions", join(env.evaluation.levels()));
  return cfg;
}

// "constant:<action>" or a fitted policy artifact path.
DeterministicPolicy parse_policy(const std::string& spec, const ActionSpace& evaluation,
                                 const simenv::EnvironmentParams& params) {
  if (spec.rfind("constant:", 0) == 0) {
    const double level = std::stod(spec.substr(9));
    return DeterministicPolicy::constant(evaluation.index_of(level));
  }
  if (!fs::exists(spec)) throw std::runtime_error("policy spec is neither constant:<action> nor a file: " + spec);
  const auto probe = harness::detail::ArtifactReader::load(spec);
  const std::string type = probe.meta_at("type");
  if (type == "dsl") return opt::dsl_policy(harness::load_dsl_artifact(spec).model);
  if (type == "mlp") return harness::load_mlp_artifact(spec).policy.as_deterministic();
  if (type == "pto") {
    auto art = harness::load_pto_artifact(spec);
    return opt::pto_policy(art.model, evaluation, opt::make_margin(params));
  }
  throw std::runtime_error("unknown artifact type: " + type);
}

int cmd_simulate(const std::string& env_path, std::size_t n, std::uint64_t seed,
                 const std::string& out_dir, bool no_hx, unsigned threads) {
  harness::EnvConfig env = load_env(env_path);
  env.params.seed = seed;
  if (no_hx) env.params.higher_order_enabled = false;
  const auto logging = StochasticPolicy::uniform(env.historical.size());
  const auto sim = simenv::simulate(env.params, n, logging, env.historical, env.evaluation,
                                    threads);
  const auto sample = sim.to_learning_sample(logging);

  fs::create_directories(out_dir);
  const std::string data_path = (fs::path(out_dir) / "dataset.csv").string();
  harness::write_dataset_csv(sim, sample, data_path);
  harness::Config cfg = env_as_config(env, seed);
  cfg.set("n", std::to_string(n));
  harness::write_manifest((fs::path(out_dir) / "manifest.txt").string(), cfg, seed);
  std::cout << "wrote " << data_path << " (" << n << " records)\n";
  return 0;
}

int cmd_evaluate(const std::string& data_path, const std::string& estimator,
                 const std::string& policy_spec, const std::string& env_path,
                 const std::string& moments, std::size_t basis_degree,
                 const std::string& out_path) {
  const auto loaded = harness::read_dataset_csv(data_path);
  const auto& sim = loaded.sim;
  const auto& sample = loaded.sample;
  harness::EnvConfig env = load_env(env_path);
  const BasisSpec basis = BasisSpec::polynomial(basis_degree);

  const DeterministicPolicy policy = parse_policy(policy_spec, sim.evaluation, env.params);

  std::optional<ValueEstimate> estimate;
  std::optional<DiagnosticsReport> diagnostics;
  if (estimator == "ips") {
    estimate = ips_value(sample, policy, sim.evaluation);
    diagnostics = estimator_diagnostics(sample, policy);
  } else if (estimator == "kips-naive" || estimator == "kips-optimal") {
    KernelSet kernels = [&] {
      if (estimator == "kips-naive")
        return make_naive_kernels(sample, basis, sim.evaluation);
      MomentProvider provider;
      if (moments == "oracle") {
        if (env_path.empty())
          throw std::runtime_error("kips-optimal with oracle moments needs --env");
        provider = simenv::oracle_moment_provider(sim.records, sim.historical, env.params);
      } else {
        std::vector<double> scalar(sim.records.size());
        for (std::size_t i = 0; i < sim.records.size(); ++i)
          scalar[i] = sim.records[i].raw.ticket_price;
        auto est = std::make_shared<BinnedMomentEstimator>(sample, scalar);
        provider = [est](std::size_t i) { return est->moments_for(i); };
      }
      return make_optimal_kernels(sample, basis, sim.evaluation, provider);
    }();
    estimate = kips_value(sample, policy, kernels);
    diagnostics = estimator_diagnostics(sample, policy, &kernels);
  } else if (estimator == "dm") {
    const auto pto = opt::fit_pto(sim.records, sim.historical);
    const opt::PtoRewardModel model(pto.model, opt::make_margin(env.params));
    estimate = dm_value(sample, model, policy, sim.evaluation);
    diagnostics = estimator_diagnostics(sample, policy);
  } else {
    throw std::runtime_error("unknown estimator: " + estimator);
  }

  std::cout << "estimator = " << estimator << "\n";
  std::cout << "value = " << harness::format_double(estimate->value) << "\n";
  std::cout << "std_error = " << harness::format_double(estimate->std_error()) << "\n";
  std::cout << "n = " << sample.size() << "\n";
  std::cout << "effective_sample_size = "
            << harness::format_double(diagnostics->effective_sample_size) << "\n";
  std::cout << "max_abs_weight = " << harness::format_double(diagnostics->max_abs_weight)
            << "\n";
  if (diagnostics->max_gram_condition > 0.0) {
    std::cout << "max_abs_kernel_entry = "
              << harness::format_double(diagnostics->max_abs_kernel_entry) << "\n";
    std::cout << "max_gram_condition = "
              << harness::format_double(diagnostics->max_gram_condition) << "\n";
    if (diagnostics->gram_condition_warning)
      std::cout << "warning = gram condition number above " << kGramConditionWarn << "\n";
  }
  if (!out_path.empty()) {
    harness::CsvWriter csv({"estimator", "policy", "value", "std_error", "n",
                            "effective_sample_size", "max_abs_weight"});
    csv.add_row({estimator, policy_spec, harness::format_double(estimate->value),
                 harness::format_double(estimate->std_error()), std::to_string(sample.size()),
                 harness::format_double(diagnostics->effective_sample_size),
                 harness::format_double(diagnostics->max_abs_weight)});
    csv.save(out_path);
  }
  return 0;
}

int cmd_kernel(const std::string& env_path, const std::string& propensities_csv,
               std::size_t basis_degree, const std::string& out_path) {
  harness::EnvConfig env = load_env(env_path);
  Vector propensities;
  if (propensities_csv.empty()) {
    propensities = Vector::Constant(env.historical.size(),
                                    1.0 / static_cast<double>(env.historical.size()));
  } else {
    harness::Config tmp;
    tmp.set("p", propensities_csv);
    const auto xs = tmp.get_list("p");
    propensities = Eigen::Map<const Vector>(xs.data(), static_cast<Index>(xs.size()));
  }
  const BasisSpec basis = BasisSpec::polynomial(basis_degree);
  const auto designs = build_design(basis, env.historical, env.evaluation);
  const auto kernel = kernel_matrix(designs, naive_weights(propensities));

  std::vector<std::string> header;
  for (Index c = 0; c < kernel.m(); ++c)
    header.push_back("a=" + harness::format_double(env.evaluation.level(c)));
  harness::CsvWriter csv(header);
  for (Index r = 0; r < kernel.d(); ++r) {
    std::vector<std::string> row;
    for (Index c = 0; c < kernel.m(); ++c) row.push_back(harness::format_double(kernel.K(r, c)));
    csv.add_row(row);
  }
  if (out_path.empty())
    std::cout << csv.to_string();
  else
    csv.save(out_path);
  std::cerr << "gram_condition = " << harness::format_double(kernel.gram_condition) << "\n";
  return 0;
}

int cmd_optimize(const std::string& method, const std::string& data_path,
                 const std::string& env_path, const std::string& config_path,
                 std::uint64_t seed, const std::string& out_dir) {
  const auto loaded = harness::read_dataset_csv(data_path);
  const auto& sim = loaded.sim;
  const auto& sample = loaded.sample;
  harness::EnvConfig env = load_env(env_path);
  harness::Config hyper;
  if (!config_path.empty()) hyper = harness::Config::load(config_path);

  fs::create_directories(out_dir);
  const fs::path dir(out_dir);
  const BasisSpec basis =
      BasisSpec::polynomial(static_cast<std::size_t>(hyper.get_int("basis_degree", 2)));

  if (method == "dsl") {
    const auto kernels = make_naive_kernels(sample, basis, sim.evaluation);
    const Matrix targets = opt::dsl_targets(sample, kernels);
    std::vector<Vector> xs(sample.records().size());
    for (std::size_t i = 0; i < xs.size(); ++i) xs[i] = sample.record(i).features;
    const double tau = hyper.get_double("dsl_tau", 50.0);
    const auto fit = opt::fit_dsl(targets, xs, tau);
    harness::save_dsl_artifact(fit.model, sim.evaluation, (dir / "policy_dsl.txt").string());
    harness::CsvWriter log({"sweep", "objective"});
    for (std::size_t s = 0; s < fit.objective_trace.size(); ++s)
      log.add_row({std::to_string(s + 1), harness::format_double(fit.objective_trace[s])});
    log.save((dir / "training_log.csv").string());
    std::cout << "dsl: " << fit.sweeps << " sweeps, objective "
              << harness::format_double(fit.objective) << "\n";
  } else if (method == "nn") {
    const auto kernels = make_naive_kernels(sample, basis, sim.evaluation);
    opt::MlpArchitecture arch;
    if (hyper.has("nn_hidden")) {
      arch.hidden.clear();
      for (double h : hyper.get_list("nn_hidden")) arch.hidden.push_back(static_cast<Index>(h));
    }
    opt::MlpTrainParams train;
    train.learning_rate = hyper.get_double("nn_learning_rate", train.learning_rate);
    train.batch_size = static_cast<Index>(hyper.get_int("nn_batch", train.batch_size));
    train.epochs = static_cast<std::size_t>(hyper.get_int("nn_epochs", 50));
    train.seed = seed;
    const double held_out = hyper.get_double("held_out_fraction", 0.2);
    const auto restarts = static_cast<std::size_t>(hyper.get_int("nn_restarts", 5));
    const auto result =
        opt::train_mlp_policy_restarts(sample, kernels, arch, train, held_out, restarts);
    harness::save_mlp_artifact(result.policy, sim.evaluation, (dir / "policy_nn.txt").string());
    harness::CsvWriter log({"epoch", "train_objective", "held_out_objective"});
    for (const auto& row : result.log)
      log.add_row({std::to_string(row.epoch), harness::format_double(row.train_objective),
                   harness::format_double(row.held_out_objective)});
    log.save((dir / "training_log.csv").string());
    std::cout << "nn: best epoch " << result.best_epoch << ", held-out objective "
              << harness::format_double(result.best_held_out) << "\n";
  } else if (method == "pto") {
    opt::PtoFitOptions options;
    options.l2_jitter = hyper.get_double("pto_l2_jitter", 0.0);
    const auto fit = opt::fit_pto(sim.records, sim.historical, options);
    harness::save_pto_artifact(fit.model, sim.evaluation, (dir / "policy_pto.txt").string());
    harness::CsvWriter log({"iterations", "log_likelihood"});
    log.add_row({std::to_string(fit.iterations), harness::format_double(fit.log_likelihood)});
    log.save((dir / "training_log.csv").string());
    std::cout << "pto: " << fit.iterations << " iterations, log-likelihood "
              << harness::format_double(fit.log_likelihood) << "\n";
  } else {
    throw std::runtime_error("unknown method: " + method);
  }
  return 0;
}

int cmd_experiment(const std::string& kind_name, const std::string& env_path,
                   const std::string& config_path, std::uint64_t seed, const std::string& out,
                   bool desk, bool paper, bool no_hx, unsigned threads, bool plots) {
  const auto kind = harness::experiment_from_name(kind_name);
  harness::EnvConfig env = load_env(env_path);
  if (no_hx) env.params.higher_order_enabled = false;
  harness::ExperimentConfig cfg = paper ? harness::ExperimentConfig::paper(kind, env)
                                        : harness::ExperimentConfig::desk(kind, env);
  (void)desk;  // desk scale is the default
  if (!config_path.empty()) {
    const auto file = harness::Config::load(config_path);
    if (file.get_int("version", 1) != 1)
      throw std::runtime_error("experiment config: unsupported version");
    if (file.has("n_list")) {
      cfg.sample_sizes.clear();
      for (double v : file.get_list("n_list"))
        cfg.sample_sizes.push_back(static_cast<std::size_t>(v));
    }
    cfg.replications =
        static_cast<std::size_t>(file.get_int("replications", static_cast<std::int64_t>(cfg.replications)));
    cfg.learning_samples = static_cast<std::size_t>(
        file.get_int("learning_samples", static_cast<std::int64_t>(cfg.learning_samples)));
    cfg.reference_size = static_cast<std::size_t>(
        file.get_int("reference_size", static_cast<std::int64_t>(cfg.reference_size)));
    cfg.bias_eval_size = static_cast<std::size_t>(
        file.get_int("bias_eval_size", static_cast<std::int64_t>(cfg.bias_eval_size)));
    cfg.dsl_tau = file.get_double("dsl_tau", cfg.dsl_tau);
    cfg.nn_train.learning_rate = file.get_double("nn_learning_rate", cfg.nn_train.learning_rate);
    cfg.nn_train.epochs = static_cast<std::size_t>(
        file.get_int("nn_epochs", static_cast<std::int64_t>(cfg.nn_train.epochs)));
    cfg.nn_restarts = static_cast<std::size_t>(
        file.get_int("nn_restarts", static_cast<std::int64_t>(cfg.nn_restarts)));
    cfg.held_out_fraction = file.get_double("held_out_fraction", cfg.held_out_fraction);
    if (file.has("basis_degree"))
      cfg.basis = BasisSpec::polynomial(static_cast<std::size_t>(file.get_int("basis_degree")));
  }
  cfg.master_seed = seed;
  cfg.threads = threads;

  const auto result = harness::run_experiment(cfg);

  harness::Config manifest_cfg = env_as_config(env, seed);
  manifest_cfg.set("experiment", kind_name);
  manifest_cfg.set("scale", paper ? "paper" : "desk");
  {
    std::string ns;
    for (std::size_t i = 0; i < cfg.sample_sizes.size(); ++i) {
      if (i) ns += ",";
      ns += std::to_string(cfg.sample_sizes[i]);
    }
    manifest_cfg.set("n_list", ns);
  }
  manifest_cfg.set("replications", std::to_string(cfg.replications));
  manifest_cfg.set("learning_samples", std::to_string(cfg.learning_samples));
  harness::emit_outputs(result, out, manifest_cfg, seed, plots);
  std::cout << "experiment " << kind_name << ": " << result.rows.size() << " rows -> " << out
            << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Off-policy evaluation and optimization of discrete-action pricing policies"};
  app.require_subcommand(1);

  std::string env_path, config_path, data_path, out = "out", out_path, policy_spec,
              estimator = "kips-naive", method, moments = "plugin", propensities, kind;
  std::size_t n = 10000, basis_degree = 2;
  std::uint64_t seed = 1;
  unsigned threads = 1;
  bool desk = false, paper = false, no_hx = false, plots = false;

  auto* sim = app.add_subcommand("simulate", "simulate a synthetic learning sample");
  sim->add_option("--config", env_path, "environment config file");
  sim->add_option("--n", n, "number of records")->required();
  sim->add_option("--seed", seed, "master seed");
  sim->add_option("--out", out, "output directory");
  sim->add_option("--threads", threads, "worker threads");
  sim->add_flag("--no-hx", no_hx, "disable the higher-order elasticity term");

  auto* eval = app.add_subcommand("evaluate", "estimate a policy value from a dataset");
  eval->add_option("--data", data_path, "dataset CSV")->required();
  eval->add_option("--estimator", estimator, "dm | ips | kips-naive | kips-optimal");
  eval->add_option("--policy", policy_spec, "constant:<action> or artifact path")->required();
  eval->add_option("--env", env_path, "environment config (oracle moments, margins)");
  eval->add_option("--moments", moments, "plugin | oracle (kips-optimal)");
  eval->add_option("--basis-degree", basis_degree, "polynomial basis degree");
  eval->add_option("--out", out_path, "also write a one-row CSV");

  auto* kern = app.add_subcommand("kernel", "dump a kernel matrix as CSV");
  kern->add_option("--config", env_path, "environment config file");
  kern->add_option("--propensities", propensities, "comma list, default uniform");
  kern->add_option("--basis-degree", basis_degree, "polynomial basis degree");
  kern->add_option("--out", out_path, "output CSV (default stdout)");

  auto* optimize = app.add_subcommand("optimize", "fit a pricing policy from a dataset");
  optimize->add_option("--method", method, "dsl | nn | pto")->required();
  optimize->add_option("--data", data_path, "dataset CSV")->required();
  optimize->add_option("--env", env_path, "environment config file");
  optimize->add_option("--config", config_path, "hyperparameter config file");
  optimize->add_option("--seed", seed, "training seed");
  optimize->add_option("--out", out, "output directory");

  auto* exp = app.add_subcommand("experiment", "run a seeded study and emit CSV outputs");
  exp->add_option("kind", kind,
                  "rmse-vs-n | kernel-scatter | extrapolation | policy-gap | estimator-bias")
      ->required();
  exp->add_option("--env", env_path, "environment config file");
  exp->add_option("--config", config_path, "experiment config file");
  exp->add_option("--seed", seed, "master seed");
  exp->add_option("--out", out, "output directory");
  exp->add_flag("--desk-scale", desk, "desk-scale preset (default)");
  exp->add_flag("--paper-scale", paper, "full-scale preset");
  exp->add_flag("--no-hx", no_hx, "disable the higher-order elasticity term");
  exp->add_option("--threads", threads, "worker threads");
  exp->add_flag("--plots", plots, "emit SVG plots next to the CSVs");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) return cmd_simulate(env_path, n, seed, out, no_hx, threads);
    if (eval->parsed())
      return cmd_evaluate(data_path, estimator, policy_spec, env_path, moments, basis_degree,
                          out_path);
    if (kern->parsed()) return cmd_kernel(env_path, propensities, basis_degree, out_path);
    if (optimize->parsed())
      return cmd_optimize(method, data_path, env_path, config_path, seed, out);
    if (exp->parsed())
      return cmd_experiment(kind, env_path, config_path, seed, out, desk, paper, no_hx, threads,
                            plots);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
