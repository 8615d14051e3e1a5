#include <catch_amalgamated.hpp>

#include <vector>

#include "kips/kernel.hpp"
#include "kips/optimize/mlp.hpp"
#include "kips/rng.hpp"
#include "kips/sample.hpp"

using namespace kips;
using namespace kips::opt;

namespace {

// Small synthetic logged sample with controllable reward signal.
LearningSample toy_sample(Index n, Index p, Index d, std::uint64_t seed,
                          double reward_scale = 1.0) {
  Rng rng(seed);
  std::vector<LoggedSample> records(static_cast<std::size_t>(n));
  const Vector props = Vector::Constant(d, 1.0 / static_cast<double>(d));
  for (auto& rec : records) {
    rec.features = Vector::NullaryExpr(p, [&](Index) { return rng.normal(); });
    rec.action_index = rng.categorical(props);
    rec.reward = reward_scale * rng.uniform(0.0, 2.0);
    rec.propensities = props;
  }
  std::vector<double> levels(static_cast<std::size_t>(d));
  for (Index k = 0; k < d; ++k) levels[static_cast<std::size_t>(k)] = 0.1 * double(k);
  return LearningSample(std::move(records), ActionSpace(levels));
}

}  // namespace

TEST_CASE("softmax probabilities sum to one") {
  const MlpPolicy policy(4, {8, 8}, 5, 99);
  Rng rng(1);
  for (int i = 0; i < 200; ++i) {
    const Vector x = Vector::NullaryExpr(4, [&](Index) { return rng.normal() * 5.0; });
    const Vector p = policy.probabilities(x);
    REQUIRE(p.size() == 5);
    CHECK(std::abs(p.sum() - 1.0) < 1e-7);
    for (Index k = 0; k < p.size(); ++k) CHECK(p[k] >= 0.0);
  }
}

TEST_CASE("parameter round trip") {
  MlpPolicy policy(3, {6}, 2, 5);
  const Vector theta = policy.parameters();
  MlpPolicy other(3, {6}, 2, 77);
  other.set_parameters(theta);
  Rng rng(2);
  for (int i = 0; i < 20; ++i) {
    const Vector x = Vector::NullaryExpr(3, [&](Index) { return rng.normal(); });
    CHECK((policy.probabilities(x) - other.probabilities(x)).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("analytic gradient matches central finite differences") {
  const auto sample = toy_sample(5, 2, 2, 1234);
  const auto kernels =
      make_naive_kernels(sample, BasisSpec::linear(), sample.actions());
  const Matrix C = kips_objective_coefficients(sample, kernels);
  Matrix X(2, 5);
  for (Index i = 0; i < 5; ++i) X.col(i) = sample.record(static_cast<std::size_t>(i)).features;

  MlpPolicy policy(2, {3}, 2, 4321);
  const Vector analytic = mlp_gradient(policy, X, C);
  const Vector theta = policy.parameters();
  Vector numeric(theta.size());
  const double h = 1e-6;
  for (Index j = 0; j < theta.size(); ++j) {
    Vector tp = theta, tm = theta;
    tp[j] += h;
    tm[j] -= h;
    MlpPolicy probe = policy;
    probe.set_parameters(tp);
    const double up = mlp_objective(probe, X, C);
    probe.set_parameters(tm);
    const double down = mlp_objective(probe, X, C);
    numeric[j] = (up - down) / (2.0 * h);
  }
  const double rel = (analytic - numeric).norm() / std::max(1e-12, numeric.norm());
  CHECK(rel < 1e-4);
}

TEST_CASE("zero rewards leave the parameters untouched") {
  const auto sample = toy_sample(64, 3, 3, 5, 0.0);
  const auto kernels = make_naive_kernels(sample, BasisSpec::linear(), sample.actions());
  MlpTrainParams params;
  params.epochs = 3;
  params.batch_size = 16;
  params.seed = 7;
  const auto result = train_mlp_policy(sample, kernels, MlpArchitecture{{4}}, params, 0.25);
  const MlpPolicy fresh(3, {4}, 3, Rng::derive(7, 0x1717u));
  CHECK((result.policy.parameters() - fresh.parameters()).cwiseAbs().maxCoeff() == 0.0);
  for (const auto& row : result.log) {
    CHECK(row.train_objective == 0.0);
    CHECK(row.held_out_objective == 0.0);
  }
}

TEST_CASE("training finds a strictly dominant action", "[slow]") {
  // action 2 dominates for every record: its kernelized reward coefficient is
  // the largest everywhere
  Rng rng(808);
  const Index n = 4000, p = 3, d = 4;
  std::vector<LoggedSample> records(static_cast<std::size_t>(n));
  const Vector props = Vector::Constant(d, 0.25);
  for (auto& rec : records) {
    rec.features = Vector::NullaryExpr(p, [&](Index) { return rng.normal(); });
    rec.action_index = rng.categorical(props);
    rec.reward = rec.action_index == 2 ? 5.0 : 0.5;
    rec.propensities = props;
  }
  std::vector<double> levels{0.0, 0.1, 0.2, 0.3};
  const LearningSample sample(std::move(records), ActionSpace(levels));
  // identity kernel keeps the per-action attribution sharp
  const auto kernels = shared_kernel_set(KernelVariant::Naive, Matrix::Identity(d, d),
                                         static_cast<std::size_t>(n));
  MlpTrainParams params;
  params.epochs = 40;
  params.batch_size = 256;
  params.learning_rate = 5e-3;
  params.seed = 99;
  const auto result =
      train_mlp_policy(sample, kernels, MlpArchitecture{{16}}, params, 0.2);
  const auto policy = result.policy.as_deterministic();
  int hits = 0;
  Rng probe(909);
  const int trials = 500;
  for (int i = 0; i < trials; ++i) {
    const Vector x = Vector::NullaryExpr(p, [&](Index) { return probe.normal(); });
    hits += policy.action(x) == 2;
  }
  CHECK(hits >= static_cast<int>(0.99 * trials));
}

TEST_CASE("restart selection keeps the best held-out score") {
  const auto sample = toy_sample(256, 3, 3, 42);
  const auto kernels = make_naive_kernels(sample, BasisSpec::linear(), sample.actions());
  MlpTrainParams params;
  params.epochs = 4;
  params.batch_size = 64;
  params.seed = 31;
  const auto best =
      train_mlp_policy_restarts(sample, kernels, MlpArchitecture{{4}}, params, 0.25, 3);
  for (std::size_t r = 0; r < 3; ++r) {
    MlpTrainParams pr = params;
    pr.seed = Rng::derive(params.seed, 0x5EED0000u + r);
    const auto one = train_mlp_policy(sample, kernels, MlpArchitecture{{4}}, pr, 0.25);
    CHECK(best.best_held_out >= one.best_held_out - 1e-12);
  }
}

TEST_CASE("held-out fraction is validated") {
  const auto sample = toy_sample(32, 2, 2, 3);
  const auto kernels = make_naive_kernels(sample, BasisSpec::linear(), sample.actions());
  MlpTrainParams params;
  CHECK_THROWS(train_mlp_policy(sample, kernels, MlpArchitecture{{4}}, params, 0.0));
  CHECK_THROWS(train_mlp_policy(sample, kernels, MlpArchitecture{{4}}, params, 1.0));
}
