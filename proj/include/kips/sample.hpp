#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "kips/action_space.hpp"
#include "kips/math.hpp"
#include "kips/policy.hpp"

namespace kips {

// One logged observation: (features, realized action, reward) plus the full
// propensity vector of the logging policy at those features. The whole vector
// is kept (not just the realized action's entry) because the kernel weight
// matrices need every propensity.
struct LoggedSample {
  Vector features;
  Index action_index = 0;
  double reward = 0.0;
  Vector propensities;

  void validate(Index d) const {
    if (propensities.size() != d)
      throw std::invalid_argument("LoggedSample: propensity vector length mismatch");
    StochasticPolicy::validate_probabilities(propensities);
    if (action_index < 0 || action_index >= d)
      throw std::invalid_argument("LoggedSample: action index out of range");
    if (!(propensities[action_index] > 0.0))
      throw std::invalid_argument("LoggedSample: realized action has zero propensity (no overlap)");
    if (!std::isfinite(reward)) throw std::invalid_argument("LoggedSample: reward must be finite");
    for (Index j = 0; j < features.size(); ++j) {
      if (!std::isfinite(features[j]))
        throw std::invalid_argument("LoggedSample: features must be finite");
    }
  }
};

// The observed learning sample: records collected under logging policies on a
// common historical action space.
class LearningSample {
 public:
  LearningSample(std::vector<LoggedSample> records, ActionSpace historical)
      : records_(std::move(records)), historical_(std::move(historical)) {
    if (records_.empty()) throw std::invalid_argument("LearningSample: needs at least one record");
    const Index p = records_.front().features.size();
    for (const auto& r : records_) {
      r.validate(historical_.size());
      if (r.features.size() != p)
        throw std::invalid_argument("LearningSample: inconsistent feature length");
    }
  }

  Index size() const { return static_cast<Index>(records_.size()); }
  Index feature_dim() const { return records_.front().features.size(); }
  const ActionSpace& actions() const { return historical_; }
  const std::vector<LoggedSample>& records() const { return records_; }
  const LoggedSample& record(std::size_t i) const { return records_[i]; }

  // Subset by record indices (used for train/held-out splits).
  LearningSample subset(const std::vector<std::size_t>& idx) const {
    std::vector<LoggedSample> rs;
    rs.reserve(idx.size());
    for (std::size_t i : idx) rs.push_back(records_.at(i));
    return LearningSample(std::move(rs), historical_);
  }

 private:
  std::vector<LoggedSample> records_;
  ActionSpace historical_;
};

}  // namespace kips
