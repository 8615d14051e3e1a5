#pragma once

#include <stdexcept>
#include <vector>

#include "kips/math.hpp"
#include "kips/policy.hpp"

namespace kips {

// Empirical policy value from a table of expected rewards: row i holds the
// expected reward of every evaluation action for features[i]. Returns
// (1/n) sum_i sum_a rewards(i,a) * pi(a|x_i).
inline double empirical_value(const Matrix& expected_rewards,
                              const DeterministicPolicy& policy,
                              const std::vector<Vector>& features) {
  const Index n = expected_rewards.rows();
  if (static_cast<Index>(features.size()) != n)
    throw std::invalid_argument("empirical_value: rows must match feature count");
  std::vector<double> vals(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    const Index a = policy.action(features[static_cast<std::size_t>(i)]);
    if (a < 0 || a >= expected_rewards.cols())
      throw std::out_of_range("empirical_value: policy index outside reward columns");
    vals[static_cast<std::size_t>(i)] = expected_rewards(i, a);
  }
  return pairwise_mean(vals);
}

inline double empirical_value(const Matrix& expected_rewards,
                              const StochasticPolicy& policy,
                              const std::vector<Vector>& features) {
  const Index n = expected_rewards.rows();
  if (static_cast<Index>(features.size()) != n)
    throw std::invalid_argument("empirical_value: rows must match feature count");
  std::vector<double> vals(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    const Vector p = policy.probabilities(features[static_cast<std::size_t>(i)]);
    if (p.size() != expected_rewards.cols())
      throw std::invalid_argument("empirical_value: probability length must match reward columns");
    vals[static_cast<std::size_t>(i)] = expected_rewards.row(i).dot(p);
  }
  return pairwise_mean(vals);
}

}  // namespace kips
