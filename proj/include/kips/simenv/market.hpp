#pragma once

#include <algorithm>
#include <cmath>

#include "kips/math.hpp"
#include "kips/simenv/covariates.hpp"
#include "kips/simenv/params.hpp"

namespace kips::simenv {

// Actuarially fair premium: a fixed share of the displayed ticket price.
inline double fair_premium(const RawCovariates& raw, const EnvironmentParams& params) {
  return params.fair_rate * raw.ticket_price;
}

// Charged premium P(x, a) = P_fair (1 + (1 + a) lambda); the action scales
// the profit loading up or down.
inline double charged_premium(const RawCovariates& raw, double action,
                              const EnvironmentParams& params) {
  return fair_premium(raw, params) * (1.0 + (1.0 + action) * params.lambda_loading);
}

// Higher-order covariate term h(x) = alpha3^T (x1^3, x1 x2, x1 x3, x3 x6)
// with x1 = ticket, x2 = lead time, x3 = passengers (standardized) and
// x6 the return-trip indicator.
inline double higher_order_term(const RawCovariates& raw, const EnvironmentParams& params) {
  const auto& s = standardizer();
  const double x1 = s.ticket(raw.ticket_price);
  const double x2 = s.lead(raw.lead_time);
  const double x3 = s.pax(raw.passengers);
  const double x6 = raw.return_trip ? 1.0 : 0.0;
  Eigen::Vector4d terms(x1 * x1 * x1, x1 * x2, x1 * x3, x3 * x6);
  return params.alpha3.dot(terms);
}

// Local price elasticity E(x) = -min(exp(x^T alpha2 + h(x)), cap), always in
// [-cap, 0). Uses the full encoding: the latent destination affects the world.
inline double elasticity(const RawCovariates& raw, const EnvironmentParams& params) {
  double score = encode_full(raw).dot(params.alpha2);
  if (params.higher_order_enabled) score += higher_order_term(raw, params);
  return -std::min(std::exp(score), params.elasticity_cap);
}

// Conversion probability p(x, a) = min(1, sigmoid(x^T alpha1)(1 + E(x) a)).
// The paper truncates at 1 only; we clamp at 0 as well since E can reach -4
// and positive actions can push the factor below zero.
inline double conversion_probability(const RawCovariates& raw, double action,
                                     const EnvironmentParams& params) {
  const double base = sigmoid(encode_full(raw).dot(params.alpha1));
  const double p = base * (1.0 + elasticity(raw, params) * action);
  return std::clamp(p, 0.0, 1.0);
}

// Ground-truth expected reward rho(x, a) = p(x, a) P_fair (1 + a) lambda.
inline double true_expected_reward(const RawCovariates& raw, double action,
                                   const EnvironmentParams& params) {
  return conversion_probability(raw, action, params) * fair_premium(raw, params) *
         (1.0 + action) * params.lambda_loading;
}

}  // namespace kips::simenv
