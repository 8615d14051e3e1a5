#include <catch_amalgamated.hpp>

#include "kips/action_space.hpp"
#include "kips/math.hpp"
#include "kips/policy.hpp"
#include "kips/rng.hpp"
#include "kips/sample.hpp"
#include "kips/simenv/simulate.hpp"
#include "kips/value.hpp"

using namespace kips;

TEST_CASE("action space invariants") {
  CHECK_THROWS(ActionSpace{std::vector<double>{}});
  CHECK_THROWS(ActionSpace({0.1, 0.1}));
  CHECK_THROWS(ActionSpace({0.2, 0.1}));
  const ActionSpace a({-0.2, 0.0, 0.2});
  CHECK(a.size() == 3);
  CHECK(a.index_of(0.0) == 1);
  CHECK_THROWS(a.index_of(0.05));
  const ActionSpace grid = ActionSpace::grid(-0.3, 0.3, 61);
  CHECK(grid.size() == 61);
  CHECK(grid.level(0) == Catch::Approx(-0.3));
  CHECK(grid.level(60) == Catch::Approx(0.3));
}

TEST_CASE("logged sample validation") {
  LoggedSample rec;
  rec.features = Vector::Zero(2);
  rec.action_index = 0;
  rec.reward = 1.0;
  rec.propensities = Vector::Constant(3, 1.0 / 3.0);
  REQUIRE_NOTHROW(rec.validate(3));

  SECTION("propensities must sum to one") {
    rec.propensities[0] = 0.5;
    CHECK_THROWS(rec.validate(3));
  }
  SECTION("realized action needs positive propensity") {
    rec.propensities << 0.0, 0.5, 0.5;
    CHECK_THROWS(rec.validate(3));
  }
  SECTION("finite reward") {
    rec.reward = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS(rec.validate(3));
  }
}

TEST_CASE("empirical value picks the policy's entry") {
  Matrix rewards(1, 3);
  rewards << 90.0, 0.0, 70.0;
  const std::vector<Vector> xs{Vector::Zero(1)};
  CHECK(empirical_value(rewards, DeterministicPolicy::constant(0), xs) == 90.0);

  Matrix rows(3, 2);
  rows << 1, 2, 3, 4, 5, 6;
  const std::vector<Vector> xs3(3, Vector::Zero(1));
  CHECK(empirical_value(rows, StochasticPolicy::uniform(2), xs3) == Catch::Approx(3.5));
}

TEST_CASE("empirical value dimension checks") {
  Matrix rewards(2, 3);
  rewards.setOnes();
  const std::vector<Vector> xs{Vector::Zero(1)};
  CHECK_THROWS(empirical_value(rewards, DeterministicPolicy::constant(0), xs));
  const std::vector<Vector> xs2(2, Vector::Zero(1));
  CHECK_THROWS(empirical_value(rewards, DeterministicPolicy::constant(5), xs2));
  CHECK_THROWS(empirical_value(rewards, StochasticPolicy::uniform(2), xs2));
}

TEST_CASE("one-hot stochastic policy matches the deterministic policy exactly") {
  Rng rng(7);
  Matrix rewards(20, 4);
  for (Index i = 0; i < rewards.size(); ++i) rewards(i / 4, i % 4) = rng.normal();
  const std::vector<Vector> xs(20, Vector::Zero(1));
  for (Index k = 0; k < 4; ++k) {
    CHECK(empirical_value(rewards, DeterministicPolicy::constant(k), xs) ==
          empirical_value(rewards, StochasticPolicy::one_hot(k, 4), xs));
  }
}

TEST_CASE("empirical value is linear in the reward matrix") {
  Rng rng(11);
  Matrix m1(15, 3), m2(15, 3);
  for (Index i = 0; i < 15; ++i)
    for (Index j = 0; j < 3; ++j) {
      m1(i, j) = rng.normal();
      m2(i, j) = rng.normal();
    }
  const std::vector<Vector> xs(15, Vector::Zero(1));
  const auto policy = StochasticPolicy([](const Vector&) {
    Vector p(3);
    p << 0.2, 0.5, 0.3;
    return p;
  });
  const double alpha = 1.7, beta = -0.4;
  const double combined = empirical_value(alpha * m1 + beta * m2, policy, xs);
  const double split = alpha * empirical_value(m1, policy, xs) +
                       beta * empirical_value(m2, policy, xs);
  CHECK(combined == Catch::Approx(split).epsilon(1e-9));
}

// Monte-Carlo oracle: the empirical value of a constant policy agrees with
// the mean of rewards simulated under that action.
TEST_CASE("empirical value matches forced-action simulation", "[slow]") {
  using namespace kips::simenv;
  EnvironmentParams env = EnvironmentParams::defaults();
  env.seed = 2024;
  const ActionSpace hist = default_historical_actions();
  const std::size_t n = 10000;
  const double action = 0.0;

  const auto raws = sample_covariates(env, n);
  std::vector<double> sim_rewards(n);
  Matrix true_rewards(static_cast<Index>(n), 1);
  std::vector<Vector> xs(n);
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng(Rng::derive(env.seed ^ 0xF00Du, i));
    const double p = conversion_probability(raws[i], action, env);
    sim_rewards[i] =
        rng.bernoulli(p) ? fair_premium(raws[i], env) * (1.0 + action) * env.lambda_loading
                         : 0.0;
    true_rewards(static_cast<Index>(i), 0) = true_expected_reward(raws[i], action, env);
    xs[i] = encode_observed(raws[i]);
  }
  const double value = empirical_value(true_rewards, DeterministicPolicy::constant(0), xs);
  const double mc_mean = pairwise_mean(sim_rewards);
  const double mc_se = std::sqrt(sample_variance(sim_rewards) / static_cast<double>(n));
  CHECK(std::abs(value - mc_mean) < 3.0 * mc_se);
  (void)hist;
}
