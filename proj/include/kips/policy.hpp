#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <utility>

#include "kips/math.hpp"

namespace kips {

inline constexpr double kProbabilityTol = 1e-9;

// Deterministic control: features -> action index. Policies return indices
// rather than action values so the same rule can be bound to any action space
// of matching cardinality.
class DeterministicPolicy {
 public:
  using Rule = std::function<Index(const Vector&)>;

  explicit DeterministicPolicy(Rule rule) : rule_(std::move(rule)) {
    if (!rule_) throw std::invalid_argument("DeterministicPolicy: empty rule");
  }

  Index action(const Vector& x) const { return rule_(x); }

  static DeterministicPolicy constant(Index k) {
    if (k < 0) throw std::invalid_argument("DeterministicPolicy::constant: negative index");
    return DeterministicPolicy([k](const Vector&) { return k; });
  }

 private:
  Rule rule_;
};

// Stochastic control: features -> probability vector over the action space.
class StochasticPolicy {
 public:
  using Rule = std::function<Vector(const Vector&)>;

  explicit StochasticPolicy(Rule rule) : rule_(std::move(rule)) {
    if (!rule_) throw std::invalid_argument("StochasticPolicy: empty rule");
  }

  Vector probabilities(const Vector& x) const {
    Vector p = rule_(x);
    validate_probabilities(p);
    return p;
  }

  static StochasticPolicy uniform(Index m) {
    if (m < 1) throw std::invalid_argument("StochasticPolicy::uniform: m must be >= 1");
    return StochasticPolicy([m](const Vector&) {
      return Vector::Constant(m, 1.0 / static_cast<double>(m));
    });
  }

  static StochasticPolicy one_hot(Index k, Index m) {
    if (k < 0 || k >= m) throw std::invalid_argument("StochasticPolicy::one_hot: index out of range");
    return StochasticPolicy([k, m](const Vector&) {
      Vector p = Vector::Zero(m);
      p[k] = 1.0;
      return p;
    });
  }

  static void validate_probabilities(const Vector& p) {
    double sum = 0.0;
    for (Index k = 0; k < p.size(); ++k) {
      if (!(p[k] >= 0.0) || !std::isfinite(p[k]))
        throw std::invalid_argument("StochasticPolicy: probabilities must be non-negative");
      sum += p[k];
    }
    if (std::abs(sum - 1.0) > kProbabilityTol)
      throw std::invalid_argument("StochasticPolicy: probabilities must sum to one");
  }

 private:
  Rule rule_;
};

inline Vector one_hot_vector(Index k, Index m) {
  Vector e = Vector::Zero(m);
  e[k] = 1.0;
  return e;
}

}  // namespace kips
