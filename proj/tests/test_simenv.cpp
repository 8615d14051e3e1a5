#include <catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "kips/math.hpp"
#include "kips/simenv/covariates.hpp"
#include "kips/simenv/market.hpp"
#include "kips/simenv/params.hpp"
#include "kips/simenv/simulate.hpp"

using namespace kips;
using namespace kips::simenv;

namespace {

EnvironmentParams test_env(std::uint64_t seed) {
  EnvironmentParams env = EnvironmentParams::defaults();
  env.seed = seed;
  return env;
}

}  // namespace

TEST_CASE("sampling rejects n = 0") {
  CHECK_THROWS(sample_covariates(test_env(1), 0));
  CHECK_THROWS(simulate(test_env(1), 0, StochasticPolicy::uniform(5),
                        default_historical_actions(), default_historical_actions()));
}

TEST_CASE("covariate marginals match their uniform supports", "[slow]") {
  const std::size_t n = 100000;
  const auto raws = sample_covariates(test_env(71), n);
  std::vector<double> tickets(n);
  std::vector<int> lead_counts(365, 0);
  for (std::size_t i = 0; i < n; ++i) {
    raws[i].validate();
    tickets[i] = raws[i].ticket_price;
    lead_counts[static_cast<std::size_t>(raws[i].lead_time) - 1]++;
  }
  // ticket mean 1050 +/- 20 at this sample size
  CHECK(pairwise_mean(tickets) == Catch::Approx(1050.0).margin(20.0));

  // every lead-time cell within 5 standard errors of n/365
  const double expected = static_cast<double>(n) / 365.0;
  const double se = std::sqrt(expected * (1.0 - 1.0 / 365.0));
  for (int c : lead_counts) CHECK(std::abs(c - expected) < 5.0 * se);
}

TEST_CASE("premium formulas") {
  EnvironmentParams env = test_env(1);
  RawCovariates raw;
  raw.ticket_price = 1000.0;
  CHECK(fair_premium(raw, env) == Catch::Approx(100.0));
  raw.ticket_price = 100.0;
  CHECK(fair_premium(raw, env) == Catch::Approx(10.0));
  raw.ticket_price = 2000.0;
  CHECK(fair_premium(raw, env) == Catch::Approx(200.0));

  raw.ticket_price = 1000.0;
  CHECK(charged_premium(raw, 0.0, env) == Catch::Approx(105.0));
  CHECK(charged_premium(raw, 0.20, env) == Catch::Approx(106.0));
  CHECK(charged_premium(raw, -1.0, env) == Catch::Approx(100.0));
}

TEST_CASE("elasticity value and cap") {
  EnvironmentParams env = test_env(1);
  env.alpha1.setZero();
  env.alpha2.setZero();
  env.alpha3.setZero();
  RawCovariates raw;
  raw.ticket_price = 1050.0;

  SECTION("zero weights give -1") { CHECK(elasticity(raw, env) == Catch::Approx(-1.0)); }

  SECTION("large score activates the cap") {
    env.alpha2[0] = 100.0;  // ticket above its mean pushes the score high
    raw.ticket_price = 1500.0;
    CHECK(elasticity(raw, env) == Catch::Approx(-4.0));
  }

  SECTION("disabling the higher-order term equals zero alpha3, bit for bit") {
    EnvironmentParams with = test_env(9);
    EnvironmentParams zeroed = with;
    zeroed.alpha3.setZero();
    EnvironmentParams disabled = with;
    disabled.higher_order_enabled = false;
    const auto raws = sample_covariates(with, 500);
    for (const auto& r : raws) {
      CHECK(elasticity(r, zeroed) == elasticity(r, disabled));
      CHECK(conversion_probability(r, 0.1, zeroed) == conversion_probability(r, 0.1, disabled));
    }
  }
}

TEST_CASE("conversion probability formula and clamps") {
  EnvironmentParams env = test_env(1);
  env.alpha1.setZero();  // sigmoid(0) = 0.5 baseline
  env.alpha3.setZero();
  RawCovariates raw;
  raw.ticket_price = 1050.0 + 548.4827557301445;  // one sd above the mean

  SECTION("a = 0 returns the baseline exactly") {
    env.alpha2.setZero();
    CHECK(conversion_probability(raw, 0.0, env) == Catch::Approx(0.5));
  }

  SECTION("plug-in evaluation") {
    // elasticity -2: exp(score2) = 2 via the standardized ticket coordinate
    env.alpha2.setZero();
    env.alpha2[0] = std::log(2.0);
    CHECK(elasticity(raw, env) == Catch::Approx(-2.0));
    CHECK(conversion_probability(raw, 0.20, env) == Catch::Approx(0.5 * (1.0 - 0.4)));
  }

  SECTION("upper truncation at one") {
    env.alpha1.setConstant(0.0);
    env.alpha1[0] = 10.0;  // sigmoid ~ 1 for this record
    env.alpha2.setZero();
    env.alpha2[0] = std::log(4.0);
    CHECK(conversion_probability(raw, -0.30, env) == Catch::Approx(1.0));
  }

  SECTION("lower clamp at zero") {
    env.alpha2.setZero();
    env.alpha2[0] = std::log(4.0);  // elasticity -4
    CHECK(conversion_probability(raw, 0.30, env) == Catch::Approx(0.0));
  }
}

TEST_CASE("simulate is deterministic and self-consistent") {
  EnvironmentParams env = test_env(2025);
  const ActionSpace hist = default_historical_actions();
  const auto logging = StochasticPolicy::uniform(hist.size());
  const auto a = simulate(env, 2000, logging, hist, hist);
  const auto b = simulate(env, 2000, logging, hist, hist);
  REQUIRE(a.records.size() == b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    CHECK(a.records[i].raw.ticket_price == b.records[i].raw.ticket_price);
    CHECK(a.records[i].action_index == b.records[i].action_index);
    CHECK(a.records[i].reward == b.records[i].reward);
    CHECK((a.records[i].true_expected_rewards - b.records[i].true_expected_rewards)
              .cwiseAbs()
              .maxCoeff() == 0.0);
  }

  // threading must not change the draw of any record
  const auto c = simulate(env, 2000, logging, hist, hist, 4);
  for (std::size_t i = 0; i < a.records.size(); ++i)
    CHECK(a.records[i].reward == c.records[i].reward);
}

TEST_CASE("rewards take exactly the two support points") {
  EnvironmentParams env = test_env(7);
  const ActionSpace hist = default_historical_actions();
  const auto logging = StochasticPolicy::uniform(hist.size());
  const auto sim = simulate(env, 5000, logging, hist, hist);
  for (const auto& rec : sim.records) {
    const double paid =
        fair_premium(rec.raw, env) * (1.0 + hist.level(rec.action_index)) * env.lambda_loading;
    if (rec.conversion)
      CHECK(rec.reward == Catch::Approx(paid));
    else
      CHECK(rec.reward == 0.0);
    // oracle identity rho = p * fair * (1+a) * lambda
    for (Index k = 0; k < hist.size(); ++k) {
      const double expected = conversion_probability(rec.raw, hist.level(k), env) *
                              fair_premium(rec.raw, env) * (1.0 + hist.level(k)) *
                              env.lambda_loading;
      CHECK(rec.true_expected_rewards[k] == Catch::Approx(expected).margin(1e-12));
    }
  }
}

TEST_CASE("uniform logging yields uniform action frequencies", "[slow]") {
  EnvironmentParams env = test_env(99);
  const ActionSpace hist = default_historical_actions();
  const std::size_t n = 100000;
  const auto sim = simulate(env, n, StochasticPolicy::uniform(hist.size()), hist, hist);
  std::vector<int> counts(static_cast<std::size_t>(hist.size()), 0);
  for (const auto& rec : sim.records) counts[static_cast<std::size_t>(rec.action_index)]++;
  const double expected = static_cast<double>(n) / 5.0;
  const double se = std::sqrt(expected * (1.0 - 0.2));
  for (int c : counts) CHECK(std::abs(c - expected) < 5.0 * se);
}

// Law of total expectation: within each realized action, the mean observed
// reward agrees with the mean oracle reward of that action.
TEST_CASE("observed rewards agree with the oracle per action", "[slow]") {
  EnvironmentParams env = test_env(123);
  const ActionSpace hist = default_historical_actions();
  const std::size_t n = 200000;
  const auto sim = simulate(env, n, StochasticPolicy::uniform(hist.size()), hist, hist);
  for (Index k = 0; k < hist.size(); ++k) {
    std::vector<double> diffs;
    for (const auto& rec : sim.records) {
      if (rec.action_index == k) diffs.push_back(rec.reward - rec.true_expected_rewards[k]);
    }
    const double se = std::sqrt(sample_variance(diffs) / static_cast<double>(diffs.size()));
    CHECK(std::abs(pairwise_mean(diffs)) < 3.0 * se);
  }
}

// Realized conversions are Bernoulli draws of the stated probability.
TEST_CASE("conversion frequency matches the conversion probability", "[slow]") {
  EnvironmentParams env = test_env(321);
  const ActionSpace hist = default_historical_actions();
  const std::size_t n = 200000;
  const auto sim = simulate(env, n, StochasticPolicy::uniform(hist.size()), hist, hist);
  for (Index k = 0; k < hist.size(); ++k) {
    std::vector<double> diffs;
    for (const auto& rec : sim.records) {
      if (rec.action_index != k) continue;
      const double p = conversion_probability(rec.raw, hist.level(k), env);
      diffs.push_back((rec.conversion ? 1.0 : 0.0) - p);
    }
    const double se = std::sqrt(sample_variance(diffs) / static_cast<double>(diffs.size()));
    CHECK(std::abs(pairwise_mean(diffs)) < 3.0 * se);
  }
}

TEST_CASE("elasticity stays within its range across the population") {
  EnvironmentParams env = test_env(4);
  const auto raws = sample_covariates(env, 20000);
  for (const auto& raw : raws) {
    const double e = elasticity(raw, env);
    CHECK(e >= -4.0);
    CHECK(e < 0.0);
  }
}

TEST_CASE("overlap violations are rejected") {
  EnvironmentParams env = test_env(5);
  const ActionSpace hist = default_historical_actions();
  const auto degenerate = StochasticPolicy([&](const Vector&) {
    Vector p = Vector::Zero(hist.size());
    p[0] = 1.0;
    return p;
  });
  CHECK_THROWS_WITH(simulate(env, 100, degenerate, hist, hist),
                    Catch::Matchers::ContainsSubstring("overlap"));
}

TEST_CASE("observed encoding drops the destination block") {
  RawCovariates raw;
  raw.ticket_price = 500;
  raw.lead_time = 100;
  raw.passengers = 2;
  raw.origin = 3;
  raw.destination = 5;
  raw.return_trip = true;
  raw.trip_duration = 10;
  const Vector full = encode_full(raw);
  const Vector obs = encode_observed(raw);
  CHECK(full.size() == kFullDim);
  CHECK(obs.size() == kObservedDim);
  CHECK((full.head(kObservedDim) - obs).cwiseAbs().maxCoeff() == 0.0);
  // destination level 5 -> one-hot position 3 of the trailing block
  CHECK(full[kObservedDim + 3] == 1.0);
  RawCovariates other = raw;
  other.destination = 2;
  CHECK((encode_observed(other) - obs).cwiseAbs().maxCoeff() == 0.0);
}
