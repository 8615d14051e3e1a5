#pragma once

#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "kips/action_space.hpp"
#include "kips/covariance.hpp"
#include "kips/kernel.hpp"
#include "kips/math.hpp"
#include "kips/parallel.hpp"
#include "kips/policy.hpp"
#include "kips/rng.hpp"
#include "kips/sample.hpp"
#include "kips/simenv/covariates.hpp"
#include "kips/simenv/market.hpp"
#include "kips/simenv/params.hpp"

namespace kips::simenv {

// One simulated policyholder: raw covariates, both encodings, the realized
// action/conversion/reward, and the ground-truth expected reward of every
// evaluation action (kernel of all counterfactual validation).
struct SimulatedRecord {
  RawCovariates raw;
  Vector encoded_observed;
  Vector encoded_full;
  Index action_index = 0;
  bool conversion = false;
  double reward = 0.0;
  Vector true_expected_rewards;  // one entry per evaluation action
};

struct SimulationResult {
  std::vector<SimulatedRecord> records;
  ActionSpace historical;
  ActionSpace evaluation;

  LearningSample to_learning_sample(const StochasticPolicy& logging) const {
    std::vector<LoggedSample> logged(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
      logged[i].features = records[i].encoded_observed;
      logged[i].action_index = records[i].action_index;
      logged[i].reward = records[i].reward;
      logged[i].propensities = logging.probabilities(records[i].encoded_observed);
    }
    return LearningSample(std::move(logged), historical);
  }

  // n x m table of true expected rewards (row per record).
  Matrix true_reward_matrix() const {
    Matrix M(static_cast<Index>(records.size()), evaluation.size());
    for (std::size_t i = 0; i < records.size(); ++i)
      M.row(static_cast<Index>(i)) = records[i].true_expected_rewards.transpose();
    return M;
  }

  std::vector<Vector> observed_features() const {
    std::vector<Vector> xs(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) xs[i] = records[i].encoded_observed;
    return xs;
  }
};

// Draws n policyholders, actions from the logging policy, Bernoulli
// conversions and rewards, plus the oracle reward for every evaluation
// action. Record i consumes only its own derived RNG stream, so the result is
// identical however the loop is partitioned.
inline SimulationResult simulate(const EnvironmentParams& params, std::size_t n,
                                 const StochasticPolicy& logging,
                                 const ActionSpace& historical,
                                 const ActionSpace& evaluation,
                                 unsigned n_threads = 1) {
  params.validate();
  if (n == 0) throw std::invalid_argument("simulate: n must be >= 1");
  SimulationResult result{std::vector<SimulatedRecord>(n), historical, evaluation};
  parallel_for(n, n_threads, [&](std::size_t i) {
    Rng rng(Rng::derive(params.seed, i));
    SimulatedRecord rec;
    rec.raw = sample_one(rng);
    rec.encoded_full = encode_full(rec.raw);
    rec.encoded_observed = rec.encoded_full.head(kObservedDim);

    const Vector propensities = logging.probabilities(rec.encoded_observed);
    if (propensities.size() != historical.size())
      throw std::invalid_argument("simulate: logging policy length must match historical actions");
    for (Index k = 0; k < propensities.size(); ++k) {
      if (!(propensities[k] > 0.0))
        throw std::invalid_argument(
            "simulate: logging policy has zero propensity on a historical action "
            "(overlap assumption violated)");
    }

    rec.action_index = rng.categorical(propensities);
    const double action = historical.level(rec.action_index);

    // base conversion and elasticity do not depend on the action; evaluate
    // them once per record (the closed-form market functions, inlined)
    const double base = sigmoid(rec.encoded_full.dot(params.alpha1));
    double score2 = rec.encoded_full.dot(params.alpha2);
    if (params.higher_order_enabled) score2 += higher_order_term(rec.raw, params);
    const double elastic = -std::min(std::exp(score2), params.elasticity_cap);
    const double fair = params.fair_rate * rec.raw.ticket_price;
    auto conv_prob = [&](double a) {
      return std::clamp(base * (1.0 + elastic * a), 0.0, 1.0);
    };

    const double p = conv_prob(action);
    rec.conversion = rng.bernoulli(p);
    rec.reward = rec.conversion ? fair * (1.0 + action) * params.lambda_loading : 0.0;

    rec.true_expected_rewards.resize(evaluation.size());
    for (Index k = 0; k < evaluation.size(); ++k) {
      const double a = evaluation.level(k);
      rec.true_expected_rewards[k] = conv_prob(a) * fair * (1.0 + a) * params.lambda_loading;
    }
    result.records[i] = std::move(rec);
  });
  return result;
}

// Paper-default historical grid and uniform logging policy.
inline ActionSpace default_historical_actions() {
  return ActionSpace({-0.20, -0.10, 0.0, 0.10, 0.20});
}

// Dense percent grid -30% ... +30%; integer-derived levels so each equals the
// corresponding decimal literal exactly.
inline ActionSpace extended_grid() {
  std::vector<double> levels(61);
  for (int k = 0; k <= 60; ++k) levels[static_cast<std::size_t>(k)] = (k - 30) / 100.0;
  return ActionSpace(std::move(levels));
}

// Exact conditional reward moments per record from the simulator truth:
// R | x, a is c(x,a) Bernoulli(p(x,a)) with c = P_fair (1+a) lambda, hence
// mu = c p and sigma^2 = c^2 p (1-p). Moments are taken on the historical
// actions (the rows of the covariance matrix).
inline MomentProvider oracle_moment_provider(const std::vector<SimulatedRecord>& records,
                                             const ActionSpace& historical,
                                             const EnvironmentParams& params) {
  return [&records, historical, params](std::size_t i) {
    const auto& raw = records.at(i).raw;
    ConditionalMoments mom;
    mom.mu.resize(historical.size());
    mom.sigma2.resize(historical.size());
    for (Index j = 0; j < historical.size(); ++j) {
      const double a = historical.level(j);
      const double c = fair_premium(raw, params) * (1.0 + a) * params.lambda_loading;
      const double p = conversion_probability(raw, a, params);
      mom.mu[j] = c * p;
      mom.sigma2[j] = c * c * p * (1.0 - p);
    }
    return mom;
  };
}

}  // namespace kips::simenv
