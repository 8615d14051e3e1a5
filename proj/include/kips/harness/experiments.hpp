#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "kips/estimators.hpp"
#include "kips/harness/config.hpp"
#include "kips/harness/csv.hpp"
#include "kips/math.hpp"
#include "kips/moments.hpp"
#include "kips/optimize/dsl.hpp"
#include "kips/optimize/mlp.hpp"
#include "kips/optimize/oracle.hpp"
#include "kips/optimize/pto.hpp"
#include "kips/parallel.hpp"
#include "kips/rng.hpp"
#include "kips/simenv/simulate.hpp"
#include "kips/value.hpp"

namespace kips::harness {

enum class ExperimentKind { RmseVsN, KernelScatter, Extrapolation, PolicyGap, EstimatorBias };

inline const char* experiment_name(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::RmseVsN: return "rmse-vs-n";
    case ExperimentKind::KernelScatter: return "kernel-scatter";
    case ExperimentKind::Extrapolation: return "extrapolation";
    case ExperimentKind::PolicyGap: return "policy-gap";
    case ExperimentKind::EstimatorBias: return "estimator-bias";
  }
  return "?";
}

inline ExperimentKind experiment_from_name(const std::string& name) {
  for (ExperimentKind k : {ExperimentKind::RmseVsN, ExperimentKind::KernelScatter,
                           ExperimentKind::Extrapolation, ExperimentKind::PolicyGap,
                           ExperimentKind::EstimatorBias}) {
    if (name == experiment_name(k)) return k;
  }
  throw std::invalid_argument("unknown experiment kind: " + name);
}

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::RmseVsN;
  EnvConfig env;
  std::vector<std::size_t> sample_sizes{20000};
  std::size_t replications = 100;
  std::uint64_t master_seed = 1;
  unsigned threads = 1;

  // policy optimization studies
  std::size_t learning_samples = 10;
  std::size_t reference_size = 100000;
  std::size_t bias_eval_size = 50000;
  double dsl_tau = 50.0;
  opt::MlpArchitecture nn_architecture;
  opt::MlpTrainParams nn_train;
  std::size_t nn_restarts = 3;
  double held_out_fraction = 0.2;

  BasisSpec basis = BasisSpec::quadratic();
  std::vector<EstimatorTag> rmse_estimators{EstimatorTag::DM, EstimatorTag::IPS,
                                            EstimatorTag::KipsNaive, EstimatorTag::KipsOptimal};

  void validate() const {
    if (replications < 1) throw std::invalid_argument("experiment: replications must be >= 1");
    for (std::size_t n : sample_sizes)
      if (n < 10) throw std::invalid_argument("experiment: sample sizes must be >= 10");
    if (learning_samples < 1)
      throw std::invalid_argument("experiment: learning samples must be >= 1");
  }

  // Sized to finish in minutes while keeping the qualitative orderings of the
  // full-scale studies.
  static ExperimentConfig desk(ExperimentKind kind, EnvConfig env = EnvConfig{}) {
    ExperimentConfig cfg;
    cfg.kind = kind;
    cfg.env = std::move(env);
    switch (kind) {
      case ExperimentKind::RmseVsN:
        cfg.sample_sizes = {2000, 5000, 10000, 20000, 50000};
        cfg.replications = 200;
        break;
      case ExperimentKind::KernelScatter:
        cfg.sample_sizes = {50000};
        cfg.replications = 100;
        break;
      case ExperimentKind::Extrapolation:
        cfg.sample_sizes = {20000};
        cfg.replications = 100;
        cfg.env.evaluation = simenv::extended_grid();
        break;
      case ExperimentKind::PolicyGap:
      case ExperimentKind::EstimatorBias:
        cfg.sample_sizes = {100000};
        cfg.learning_samples = 10;
        cfg.reference_size = 100000;
        cfg.bias_eval_size = 50000;
        cfg.nn_restarts = 3;
        cfg.nn_train.epochs = 30;
        break;
    }
    return cfg;
  }

  static ExperimentConfig paper(ExperimentKind kind, EnvConfig env = EnvConfig{}) {
    ExperimentConfig cfg = desk(kind, std::move(env));
    switch (kind) {
      case ExperimentKind::RmseVsN:
        cfg.sample_sizes = {10000, 50000, 100000, 500000, 1000000};
        cfg.replications = 20;
        break;
      case ExperimentKind::KernelScatter:
        cfg.sample_sizes = {500000};
        cfg.replications = 100;
        break;
      case ExperimentKind::Extrapolation:
        cfg.sample_sizes = {100000};
        cfg.replications = 50;
        break;
      case ExperimentKind::PolicyGap:
      case ExperimentKind::EstimatorBias:
        cfg.sample_sizes = {1000000};
        cfg.learning_samples = 20;
        cfg.reference_size = 1000000;
        cfg.bias_eval_size = 200000;
        cfg.nn_restarts = 5;
        cfg.nn_train.epochs = 50;
        break;
    }
    return cfg;
  }
};

// Long-format result row; every estimate is paired with its oracle truth.
// `error` is estimate - truth except in the policy-gap study, where it holds
// the relative gap (estimate - truth) / truth.
struct ResultRow {
  std::string experiment;
  std::size_t replication = 0;
  std::size_t n = 0;
  std::string method;
  std::string item;
  double estimate = 0.0;
  double truth = 0.0;
  double error = 0.0;
};

struct ExperimentResult {
  std::string experiment;
  std::vector<ResultRow> rows;

  void normalize() {
    std::sort(rows.begin(), rows.end(), [](const ResultRow& a, const ResultRow& b) {
      return std::tie(a.experiment, a.method, a.item, a.n, a.replication) <
             std::tie(b.experiment, b.method, b.item, b.n, b.replication);
    });
  }
};

namespace detail {

inline std::uint64_t rep_seed(std::uint64_t master, std::size_t series, std::size_t rep) {
  return Rng::derive(Rng::derive(master, series), rep);
}

struct FittedPolicies {
  DeterministicPolicy dsl{DeterministicPolicy::constant(0)};
  DeterministicPolicy nn{DeterministicPolicy::constant(0)};
  DeterministicPolicy pto{DeterministicPolicy::constant(0)};
  opt::PtoModel pto_model;
};

// One learning sample -> the three fitted policies (shared by the policy-gap
// and estimator-bias studies).
inline FittedPolicies fit_policies(const ExperimentConfig& cfg,
                                   const simenv::SimulationResult& sim,
                                   const LearningSample& sample, std::uint64_t seed) {
  FittedPolicies out;
  const KernelSet kernels = make_naive_kernels(sample, cfg.basis, sim.evaluation);

  const Matrix targets = opt::dsl_targets(sample, kernels);
  std::vector<Vector> xs(sample.records().size());
  for (std::size_t i = 0; i < xs.size(); ++i) xs[i] = sample.record(i).features;
  out.dsl = opt::dsl_policy(opt::fit_dsl(targets, xs, cfg.dsl_tau).model);

  opt::MlpTrainParams train = cfg.nn_train;
  train.seed = Rng::derive(seed, 0x11u);
  out.nn = opt::train_mlp_policy_restarts(sample, kernels, cfg.nn_architecture, train,
                                          cfg.held_out_fraction, cfg.nn_restarts)
               .policy.as_deterministic();

  out.pto_model = opt::fit_pto(sim.records, sim.historical).model;
  out.pto = opt::pto_policy(out.pto_model, sim.evaluation, opt::make_margin(cfg.env.params));
  return out;
}

}  // namespace detail

// RMSE of DM / IPS / naive / optimal kernelized IPS against the known
// empirical value of the constant policy a = 0, per sample size.
inline ExperimentResult run_rmse_vs_n(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto& env = cfg.env;
  if (env.evaluation != env.historical)
    throw std::invalid_argument("rmse-vs-n: evaluation grid must equal the historical grid");
  const auto logging = StochasticPolicy::uniform(env.historical.size());
  const auto pi0 = DeterministicPolicy::constant(env.historical.index_of(0.0));
  const std::string item = "a=" + format_double(0.0);

  ExperimentResult result{experiment_name(cfg.kind), {}};
  std::vector<std::vector<ResultRow>> buckets(cfg.sample_sizes.size() * cfg.replications);
  parallel_for(buckets.size(), cfg.threads, [&](std::size_t slot) {
    const std::size_t size_idx = slot / cfg.replications;
    const std::size_t rep = slot % cfg.replications;
    const std::size_t n = cfg.sample_sizes[size_idx];
    simenv::EnvironmentParams params = env.params;
    params.seed = detail::rep_seed(cfg.master_seed, size_idx, rep);

    const auto sim = simenv::simulate(params, n, logging, env.historical, env.evaluation);
    const auto sample = sim.to_learning_sample(logging);
    const double truth =
        empirical_value(sim.true_reward_matrix(), pi0, sim.observed_features());

    auto push = [&](const ValueEstimate& est) {
      buckets[slot].push_back(ResultRow{result.experiment, rep, n, estimator_name(est.tag),
                                        item, est.value, truth, est.value - truth});
    };
    for (EstimatorTag tag : cfg.rmse_estimators) {
      switch (tag) {
        case EstimatorTag::DM: {
          const opt::PtoFit pto = opt::fit_pto(sim.records, sim.historical);
          const opt::PtoRewardModel dm_model(pto.model, opt::make_margin(params));
          push(dm_value(sample, dm_model, pi0, env.evaluation));
          break;
        }
        case EstimatorTag::IPS:
          push(ips_value(sample, pi0, env.evaluation));
          break;
        case EstimatorTag::KipsNaive:
          push(kips_value(sample, pi0, make_naive_kernels(sample, cfg.basis, env.evaluation)));
          break;
        case EstimatorTag::KipsOptimal:
          push(kips_value(
              sample, pi0,
              make_optimal_kernels(
                  sample, cfg.basis, env.evaluation,
                  simenv::oracle_moment_provider(sim.records, env.historical, params))));
          break;
      }
    }
  });
  for (auto& b : buckets)
    result.rows.insert(result.rows.end(), b.begin(), b.end());
  result.normalize();
  return result;
}

// Paired naive / variance-optimal estimates of the same replications.
inline ExperimentResult run_kernel_scatter(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto& env = cfg.env;
  const auto logging = StochasticPolicy::uniform(env.historical.size());
  const auto pi0 = DeterministicPolicy::constant(env.historical.index_of(0.0));
  const std::size_t n = cfg.sample_sizes.front();
  const std::string item = "a=" + format_double(0.0);

  ExperimentResult result{experiment_name(cfg.kind), {}};
  std::vector<std::vector<ResultRow>> buckets(cfg.replications);
  parallel_for(cfg.replications, cfg.threads, [&](std::size_t rep) {
    simenv::EnvironmentParams params = env.params;
    params.seed = detail::rep_seed(cfg.master_seed, 0, rep);
    const auto sim = simenv::simulate(params, n, logging, env.historical, env.evaluation);
    const auto sample = sim.to_learning_sample(logging);
    const double truth =
        empirical_value(sim.true_reward_matrix(), pi0, sim.observed_features());
    const auto naive =
        kips_value(sample, pi0, make_naive_kernels(sample, cfg.basis, env.evaluation));
    const auto optimal = kips_value(
        sample, pi0,
        make_optimal_kernels(sample, cfg.basis, env.evaluation,
                             simenv::oracle_moment_provider(sim.records, env.historical,
                                                            params)));
    for (const auto* est : {&naive, &optimal})
      buckets[rep].push_back(ResultRow{result.experiment, rep, n, estimator_name(est->tag),
                                       item, est->value, truth, est->value - truth});
  });
  for (auto& b : buckets)
    result.rows.insert(result.rows.end(), b.begin(), b.end());
  result.normalize();
  return result;
}

// Kernelized IPS for every constant policy on the dense evaluation grid,
// which extends beyond the historical support.
inline ExperimentResult run_extrapolation(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto& env = cfg.env;
  if (env.evaluation.size() < 2)
    throw std::invalid_argument("extrapolation: evaluation grid must be a dense grid");
  const auto logging = StochasticPolicy::uniform(env.historical.size());
  const std::size_t n = cfg.sample_sizes.front();

  ExperimentResult result{experiment_name(cfg.kind), {}};
  std::vector<std::vector<ResultRow>> buckets(cfg.replications);
  parallel_for(cfg.replications, cfg.threads, [&](std::size_t rep) {
    simenv::EnvironmentParams params = env.params;
    params.seed = detail::rep_seed(cfg.master_seed, 0, rep);
    const auto sim = simenv::simulate(params, n, logging, env.historical, env.evaluation);
    const auto sample = sim.to_learning_sample(logging);
    const auto kernels = make_naive_kernels(sample, cfg.basis, env.evaluation);
    const Matrix truths = sim.true_reward_matrix();
    const auto xs = sim.observed_features();
    for (Index k = 0; k < env.evaluation.size(); ++k) {
      const auto policy = DeterministicPolicy::constant(k);
      const auto est = kips_value(sample, policy, kernels);
      const double truth = empirical_value(truths, policy, xs);
      buckets[rep].push_back(ResultRow{result.experiment, rep, n, estimator_name(est.tag),
                                       "a=" + format_double(env.evaluation.level(k)),
                                       est.value, truth, est.value - truth});
    }
  });
  for (auto& b : buckets)
    result.rows.insert(result.rows.end(), b.begin(), b.end());
  result.normalize();
  return result;
}

namespace detail {

// Shared engine of the policy-gap and estimator-bias studies: fits DSL, NN
// and PTO policies on each learning sample and scores them against a fixed
// reference set (gaps) and an independent evaluation sample (estimator bias).
// Both h(x) settings are emitted, tagged in the item column.
inline void run_policy_study(const ExperimentConfig& cfg, bool want_gap, bool want_bias,
                             ExperimentResult& result) {
  cfg.validate();
  const auto logging = StochasticPolicy::uniform(cfg.env.historical.size());
  const std::size_t n = cfg.sample_sizes.front();

  for (const bool with_hx : {true, false}) {
    simenv::EnvironmentParams params = cfg.env.params;
    params.higher_order_enabled = with_hx;
    const std::string setting = with_hx ? "hx" : "no-hx";

    params.seed = detail::rep_seed(cfg.master_seed, with_hx ? 1 : 2, 0xFACEu);
    const auto reference = simenv::simulate(params, cfg.reference_size, logging,
                                            cfg.env.historical, cfg.env.evaluation,
                                            cfg.threads);
    const Matrix ref_truth = reference.true_reward_matrix();
    const auto ref_xs = reference.observed_features();
    const auto oracle = opt::oracle_policy(reference.records);

    std::vector<std::vector<ResultRow>> buckets(cfg.learning_samples);
    parallel_for(cfg.learning_samples, cfg.threads, [&](std::size_t ls) {
      simenv::EnvironmentParams sample_params = params;
      sample_params.seed = detail::rep_seed(cfg.master_seed, with_hx ? 3 : 4, ls);
      const auto sim = simenv::simulate(sample_params, n, logging, cfg.env.historical,
                                        cfg.env.evaluation);
      const auto sample = sim.to_learning_sample(logging);
      const auto fits = fit_policies(cfg, sim, sample, sample_params.seed);

      if (want_gap) {
        auto gap_row = [&](const std::string& method, const DeterministicPolicy& policy) {
          const double value = empirical_value(ref_truth, policy, ref_xs);
          buckets[ls].push_back(ResultRow{std::string(experiment_name(ExperimentKind::PolicyGap)),
                                          ls, n, method, setting, value, oracle.value,
                                          (value - oracle.value) / oracle.value});
        };
        gap_row("dsl", fits.dsl);
        gap_row("nn", fits.nn);
        gap_row("pto", fits.pto);
      }

      if (want_bias) {
        const std::string bias_exp = experiment_name(ExperimentKind::EstimatorBias);
        // DM self-evaluation of the PTO policy on its own learning sample
        const opt::PtoRewardModel dm_model(fits.pto_model, opt::make_margin(sample_params));
        const double dm_est = dm_value(sample, dm_model, fits.pto, sim.evaluation).value;
        const double dm_truth =
            empirical_value(sim.true_reward_matrix(), fits.pto, sim.observed_features());
        buckets[ls].push_back(ResultRow{bias_exp, ls, n, "dm-pto", setting, dm_est, dm_truth,
                                        dm_est - dm_truth});

        // kernelized IPS of each learned policy on an independent sample
        simenv::EnvironmentParams eval_params = params;
        eval_params.seed = detail::rep_seed(cfg.master_seed, with_hx ? 5 : 6, ls);
        const auto eval_sim = simenv::simulate(eval_params, cfg.bias_eval_size, logging,
                                               cfg.env.historical, cfg.env.evaluation);
        const auto eval_sample = eval_sim.to_learning_sample(logging);
        const auto eval_kernels = make_naive_kernels(eval_sample, cfg.basis, cfg.env.evaluation);
        const Matrix eval_truth = eval_sim.true_reward_matrix();
        const auto eval_xs = eval_sim.observed_features();
        auto bias_row = [&](const std::string& method, const DeterministicPolicy& policy) {
          const double est = kips_value(eval_sample, policy, eval_kernels).value;
          const double truth = empirical_value(eval_truth, policy, eval_xs);
          buckets[ls].push_back(
              ResultRow{bias_exp, ls, n, method, setting, est, truth, est - truth});
        };
        bias_row("kips-dsl", fits.dsl);
        bias_row("kips-nn", fits.nn);
        bias_row("kips-pto", fits.pto);
      }
    });
    for (auto& b : buckets)
      result.rows.insert(result.rows.end(), b.begin(), b.end());
  }
  result.normalize();
}

}  // namespace detail

inline ExperimentResult run_policy_gap(const ExperimentConfig& cfg) {
  ExperimentResult result{experiment_name(ExperimentKind::PolicyGap), {}};
  detail::run_policy_study(cfg, true, false, result);
  return result;
}

inline ExperimentResult run_estimator_bias(const ExperimentConfig& cfg) {
  ExperimentResult result{experiment_name(ExperimentKind::EstimatorBias), {}};
  detail::run_policy_study(cfg, false, true, result);
  return result;
}

// Both studies from one set of fitted policies.
inline ExperimentResult run_policy_suite(const ExperimentConfig& cfg) {
  ExperimentResult result{"policy-suite", {}};
  detail::run_policy_study(cfg, true, true, result);
  return result;
}

inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  switch (cfg.kind) {
    case ExperimentKind::RmseVsN: return run_rmse_vs_n(cfg);
    case ExperimentKind::KernelScatter: return run_kernel_scatter(cfg);
    case ExperimentKind::Extrapolation: return run_extrapolation(cfg);
    case ExperimentKind::PolicyGap: return run_policy_gap(cfg);
    case ExperimentKind::EstimatorBias: return run_estimator_bias(cfg);
  }
  throw std::logic_error("run_experiment: unreachable");
}

// Aggregated view of the long rows, grouped by (method, item, n).
struct SummaryRow {
  std::string experiment;
  std::string method;
  std::string item;
  std::size_t n = 0;
  std::size_t count = 0;
  double mean_estimate = 0.0;
  double mean_truth = 0.0;
  double bias = 0.0;
  double rmse = 0.0;
  double sd_estimate = 0.0;
};

inline std::vector<SummaryRow> summarize(const ExperimentResult& result) {
  std::map<std::tuple<std::string, std::string, std::string, std::size_t>,
           std::vector<const ResultRow*>>
      groups;
  for (const auto& row : result.rows)
    groups[{row.experiment, row.method, row.item, row.n}].push_back(&row);

  std::vector<SummaryRow> out;
  for (const auto& [key, rows] : groups) {
    SummaryRow s;
    std::tie(s.experiment, s.method, s.item, s.n) = key;
    s.count = rows.size();
    std::vector<double> est, truth, err;
    est.reserve(rows.size());
    for (const auto* r : rows) {
      est.push_back(r->estimate);
      truth.push_back(r->truth);
      err.push_back(r->error);
    }
    s.mean_estimate = pairwise_mean(est);
    s.mean_truth = pairwise_mean(truth);
    s.bias = pairwise_mean(err);
    s.rmse = rmse(err);
    s.sd_estimate = std::sqrt(sample_variance(est));
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace kips::harness
