#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "kips/harness/artifacts.hpp"
#include "kips/harness/config.hpp"
#include "kips/harness/dataset.hpp"
#include "kips/harness/experiments.hpp"
#include "kips/harness/manifest.hpp"
#include "kips/harness/outputs.hpp"
#include "kips/optimize/dsl.hpp"
#include "kips/optimize/mlp.hpp"
#include "kips/optimize/pto.hpp"

using namespace kips;
using namespace kips::harness;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

struct TempDir {
  fs::path path;
  TempDir(const std::string& tag) : path(fs::temp_directory_path() / ("kips_test_" + tag)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("config parsing") {
  const auto cfg = Config::parse("version = 1\n# comment\nn_list = 10, 20,30\nflag=true\n");
  CHECK(cfg.get_int("version") == 1);
  CHECK(cfg.get_list("n_list") == std::vector<double>{10, 20, 30});
  CHECK(cfg.get_bool("flag"));
  CHECK(cfg.get_double("missing", 2.5) == 2.5);
  CHECK_THROWS(cfg.get_string("missing"));
  CHECK_THROWS(Config::parse("not a key value line\n"));
  CHECK_THROWS(cfg.get_int("flag"));
}

TEST_CASE("env config round trip with defaults") {
  const auto cfg = Config::parse("version = 1\nseed = 9\nhistorical_actions = -0.1,0,0.1\n");
  const auto env = EnvConfig::from_config(cfg);
  CHECK(env.params.seed == 9);
  CHECK(env.historical.size() == 3);
  CHECK(env.params.alpha1.size() == simenv::kFullDim);
  CHECK_THROWS(EnvConfig::from_config(Config::parse("version = 99\n")));
}

TEST_CASE("config hash reacts to every field") {
  Config a;
  a.set("version", "1");
  a.set("x", "1");
  Config b = a;
  b.set("x", "2");
  Config c = a;
  c.set("y", "1");
  CHECK(config_hash(a) != config_hash(b));
  CHECK(config_hash(a) != config_hash(c));
  Config a2;
  a2.set("x", "1");
  a2.set("version", "1");
  CHECK(config_hash(a) == config_hash(a2));  // order independent
}

TEST_CASE("dataset csv round trip") {
  TempDir dir("dataset");
  simenv::EnvironmentParams env = simenv::EnvironmentParams::defaults();
  env.seed = 404;
  const ActionSpace hist = simenv::default_historical_actions();
  const ActionSpace eval = ActionSpace({-0.25, 0.0, 0.25});
  const auto logging = StochasticPolicy::uniform(hist.size());
  const auto sim = simenv::simulate(env, 200, logging, hist, eval);
  const auto sample = sim.to_learning_sample(logging);

  const std::string path = (dir.path / "data.csv").string();
  write_dataset_csv(sim, sample, path);
  const auto loaded = read_dataset_csv(path);

  REQUIRE(loaded.sim.records.size() == sim.records.size());
  CHECK(loaded.sim.historical == hist);
  CHECK(loaded.sim.evaluation == eval);
  for (std::size_t i = 0; i < sim.records.size(); ++i) {
    CHECK(loaded.sim.records[i].raw.ticket_price == sim.records[i].raw.ticket_price);
    CHECK(loaded.sim.records[i].reward == sim.records[i].reward);
    CHECK(loaded.sim.records[i].action_index == sim.records[i].action_index);
    CHECK((loaded.sim.records[i].true_expected_rewards - sim.records[i].true_expected_rewards)
              .cwiseAbs()
              .maxCoeff() == 0.0);
    CHECK((loaded.sample.record(i).propensities - sample.record(i).propensities)
              .cwiseAbs()
              .maxCoeff() == 0.0);
  }
}

TEST_CASE("artifact round trips") {
  TempDir dir("artifacts");
  const ActionSpace eval({-0.1, 0.0, 0.1});

  SECTION("dsl") {
    opt::DslModel model;
    Rng rng(3);
    model.w0 = Vector::NullaryExpr(4, [&](Index) { return rng.normal(); });
    model.w_action.assign(3, Vector::Zero(4));
    for (auto& w : model.w_action)
      w = Vector::NullaryExpr(4, [&](Index) { return rng.normal(); });
    model.tau = 0.7;
    model.gamma = opt::default_dsl_gamma(3);
    model.feature_mean = Vector::NullaryExpr(3, [&](Index) { return rng.normal(); });
    model.feature_scale = Vector::Ones(3);
    const std::string path = (dir.path / "dsl.txt").string();
    save_dsl_artifact(model, eval, path);
    const auto loaded = load_dsl_artifact(path);
    CHECK(loaded.evaluation == eval);
    CHECK((loaded.model.w0 - model.w0).cwiseAbs().maxCoeff() == 0.0);
    for (std::size_t a = 0; a < 3; ++a)
      CHECK((loaded.model.w_action[a] - model.w_action[a]).cwiseAbs().maxCoeff() == 0.0);
    CHECK(loaded.model.tau == model.tau);
  }

  SECTION("mlp") {
    const opt::MlpPolicy policy(5, {7, 4}, 3, 111);
    const std::string path = (dir.path / "mlp.txt").string();
    save_mlp_artifact(policy, eval, path);
    const auto loaded = load_mlp_artifact(path);
    CHECK((loaded.policy.parameters() - policy.parameters()).cwiseAbs().maxCoeff() == 0.0);
    Rng rng(5);
    const Vector x = Vector::NullaryExpr(5, [&](Index) { return rng.normal(); });
    CHECK((loaded.policy.probabilities(x) - policy.probabilities(x)).cwiseAbs().maxCoeff() ==
          0.0);
  }

  SECTION("pto") {
    opt::PtoModel model;
    Rng rng(7);
    model.phi1 = Vector::NullaryExpr(3, [&](Index) { return rng.normal(); });
    model.phi2 = Vector::NullaryExpr(11, [&](Index) { return rng.normal(); });
    model.phi3 = Vector::NullaryExpr(11, [&](Index) { return rng.normal(); });
    const std::string path = (dir.path / "pto.txt").string();
    save_pto_artifact(model, eval, path);
    const auto loaded = load_pto_artifact(path);
    CHECK((loaded.model.phi1 - model.phi1).cwiseAbs().maxCoeff() == 0.0);
    CHECK((loaded.model.phi2 - model.phi2).cwiseAbs().maxCoeff() == 0.0);
    CHECK((loaded.model.phi3 - model.phi3).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("experiment smoke: rows carry truths and reruns are byte identical", "[slow]") {
  TempDir dir1("exp_a");
  TempDir dir2("exp_b");
  ExperimentConfig cfg = ExperimentConfig::desk(ExperimentKind::RmseVsN);
  cfg.sample_sizes = {400, 800};
  cfg.replications = 3;
  cfg.master_seed = 99;

  const auto result = run_rmse_vs_n(cfg);
  CHECK(result.rows.size() == 2 * 3 * 4);  // sizes x reps x estimators
  for (const auto& row : result.rows) {
    CHECK(row.truth > 0.0);
    CHECK(row.error == row.estimate - row.truth);
  }

  Config manifest_cfg;
  manifest_cfg.set("version", "1");
  emit_outputs(result, dir1.path.string(), manifest_cfg, cfg.master_seed, true);
  const auto rerun = run_rmse_vs_n(cfg);
  emit_outputs(rerun, dir2.path.string(), manifest_cfg, cfg.master_seed, true);

  for (const auto& name : {"rmse-vs-n_long.csv", "rmse-vs-n_summary.csv", "manifest.txt"}) {
    CHECK(slurp(dir1.path / name) == slurp(dir2.path / name));
  }
  CHECK(fs::exists(dir1.path / "rmse-vs-n.svg"));
}

TEST_CASE("summary rmse equals the root mean square of the long errors") {
  ExperimentConfig cfg = ExperimentConfig::desk(ExperimentKind::KernelScatter);
  cfg.sample_sizes = {500};
  cfg.replications = 4;
  cfg.master_seed = 5;
  const auto result = run_kernel_scatter(cfg);
  const auto summary = summarize(result);
  for (const auto& s : summary) {
    double acc = 0.0;
    std::size_t count = 0;
    for (const auto& row : result.rows) {
      if (row.method == s.method && row.item == s.item && row.n == s.n) {
        acc += row.error * row.error;
        ++count;
      }
    }
    REQUIRE(count == s.count);
    CHECK(s.rmse == Catch::Approx(std::sqrt(acc / double(count))).margin(1e-12));
  }
}

TEST_CASE("extrapolation covers the dense grid and IPS refuses it", "[slow]") {
  ExperimentConfig cfg = ExperimentConfig::desk(ExperimentKind::Extrapolation);
  cfg.sample_sizes = {500};
  cfg.replications = 2;
  cfg.master_seed = 12;
  const auto result = run_extrapolation(cfg);
  CHECK(result.rows.size() == 2u * 61u);

  // interior unobserved action evaluable
  bool found_interior = false;
  for (const auto& row : result.rows) {
    if (row.item == "a=" + format_double(0.05)) {
      found_interior = true;
      CHECK(std::isfinite(row.estimate));
    }
  }
  CHECK(found_interior);

  // classical IPS cannot act on the extended grid
  simenv::EnvironmentParams env = simenv::EnvironmentParams::defaults();
  const ActionSpace hist = simenv::default_historical_actions();
  const auto logging = StochasticPolicy::uniform(hist.size());
  const auto sim = simenv::simulate(env, 100, logging, hist, simenv::extended_grid());
  const auto sample = sim.to_learning_sample(logging);
  CHECK_THROWS(ips_value(sample, DeterministicPolicy::constant(0), simenv::extended_grid()));
}

// Misspecification floor of the direct method: its error stops shrinking with
// the sample size while the IPS family keeps improving.
TEST_CASE("DM error plateaus under misspecification", "[slow]") {
  ExperimentConfig cfg = ExperimentConfig::desk(ExperimentKind::RmseVsN);
  cfg.sample_sizes = {50000, 200000};
  cfg.replications = 10;
  cfg.master_seed = 4711;
  cfg.rmse_estimators = {EstimatorTag::DM};
  const auto result = run_rmse_vs_n(cfg);
  auto rmse_at = [&](std::size_t n) {
    std::vector<double> errors;
    for (const auto& row : result.rows)
      if (row.n == n) errors.push_back(row.error);
    return rmse(errors);
  };
  CHECK(rmse_at(50000) / rmse_at(200000) < 2.0);
}

TEST_CASE("policy study emits both settings with non-positive gaps", "[slow]") {
  ExperimentConfig cfg = ExperimentConfig::desk(ExperimentKind::PolicyGap);
  cfg.sample_sizes = {3000};
  cfg.learning_samples = 2;
  cfg.reference_size = 3000;
  cfg.bias_eval_size = 2000;
  cfg.nn_train.epochs = 3;
  cfg.nn_restarts = 1;
  cfg.master_seed = 21;
  const auto result = run_policy_suite(cfg);

  std::size_t gap_rows = 0, bias_rows = 0;
  bool saw_hx = false, saw_nohx = false;
  for (const auto& row : result.rows) {
    saw_hx = saw_hx || row.item == "hx";
    saw_nohx = saw_nohx || row.item == "no-hx";
    if (row.experiment == "policy-gap") {
      ++gap_rows;
      CHECK(row.error <= 1e-12);  // gaps are non-positive by construction
      CHECK(row.truth > 0.0);
    } else {
      REQUIRE(row.experiment == "estimator-bias");
      ++bias_rows;
    }
  }
  CHECK(saw_hx);
  CHECK(saw_nohx);
  CHECK(gap_rows == 2u * 2u * 3u);   // settings x samples x methods
  CHECK(bias_rows == 2u * 2u * 4u);  // settings x samples x (dm + 3 kips)
}
