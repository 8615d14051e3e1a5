#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "kips/action_space.hpp"
#include "kips/estimators.hpp"
#include "kips/math.hpp"
#include "kips/policy.hpp"
#include "kips/simenv/simulate.hpp"

namespace kips::opt {

// Logistic conversion model with quadratic action effect and action-covariate
// interactions: logit p = phi1^T (1, a, a^2) + phi2^T x + a phi3^T x.
struct PtoModel {
  Vector phi1;  // length 3
  Vector phi2;  // length p
  Vector phi3;  // length p

  Index p() const { return phi2.size(); }

  double score(const Vector& x, double action) const {
    return phi1[0] + phi1[1] * action + phi1[2] * action * action + phi2.dot(x) +
           action * phi3.dot(x);
  }

  double conversion_probability(const Vector& x, double action) const {
    return sigmoid(score(x, action));
  }
};

struct PtoFitOptions {
  double gradient_tol = 1e-6;   // on the mean log-likelihood gradient
  std::size_t max_iterations = 100;
  double l2_jitter = 0.0;       // optional ridge on the Hessian for separation
  double divergence_norm = 30.0;
};

struct PtoFit {
  PtoModel model;
  Vector std_errors;        // asymptotic, same layout as the stacked coefficients
  double log_likelihood = 0.0;
  std::size_t iterations = 0;
};

namespace detail {

inline Vector pto_row(const Vector& x, double action) {
  Vector z(3 + 2 * x.size());
  z[0] = 1.0;
  z[1] = action;
  z[2] = action * action;
  z.segment(3, x.size()) = x;
  z.segment(3 + x.size(), x.size()) = action * x;
  return z;
}

}  // namespace detail

// Maximum likelihood by damped Newton; every accepted step increases the
// log-likelihood. Throws when the labels are degenerate or the coefficients
// run away (separation), suggesting the l2_jitter option.
inline PtoFit fit_pto(const std::vector<simenv::SimulatedRecord>& records,
                      const ActionSpace& historical, const PtoFitOptions& options = {}) {
  if (records.empty()) throw std::invalid_argument("fit_pto: empty sample");
  const Index n = static_cast<Index>(records.size());
  const Index p = records.front().encoded_observed.size();
  const Index dim = 3 + 2 * p;

  bool any_true = false, any_false = false;
  for (const auto& r : records) (r.conversion ? any_true : any_false) = true;
  if (!any_true || !any_false)
    throw std::runtime_error(
        "fit_pto: all conversion outcomes identical; likelihood is separated "
        "(consider l2_jitter)");

  Matrix Z(n, dim);
  Vector y(n);
  for (Index i = 0; i < n; ++i) {
    const auto& rec = records[static_cast<std::size_t>(i)];
    Z.row(i) = detail::pto_row(rec.encoded_observed,
                               historical.level(rec.action_index))
                   .transpose();
    y[i] = rec.conversion ? 1.0 : 0.0;
  }

  Vector phi = Vector::Zero(dim);
  auto log_lik = [&](const Vector& coef) {
    const Vector eta = Z * coef;
    double ll = 0.0;
    for (Index i = 0; i < n; ++i) {
      // log sigma(eta) = -log(1+exp(-eta)), stable in both tails
      const double e = eta[i];
      ll += y[i] * e - (e > 0.0 ? e + std::log1p(std::exp(-e)) : std::log1p(std::exp(e)));
    }
    return ll - 0.5 * options.l2_jitter * coef.squaredNorm();
  };

  double ll = log_lik(phi);
  PtoFit fit;
  Matrix hessian(dim, dim);
  bool converged = false;
  for (std::size_t it = 1; it <= options.max_iterations; ++it) {
    const Vector eta = Z * phi;
    Vector mu(n), lam(n);
    for (Index i = 0; i < n; ++i) {
      mu[i] = sigmoid(eta[i]);
      lam[i] = mu[i] * (1.0 - mu[i]);
    }
    Vector grad = Z.transpose() * (y - mu) - options.l2_jitter * phi;
    const double grad_norm = grad.cwiseAbs().maxCoeff() / static_cast<double>(n);
    fit.iterations = it;
    if (grad_norm < options.gradient_tol) {
      converged = true;
      break;
    }

    hessian = Z.transpose() * lam.asDiagonal() * Z;
    hessian.diagonal().array() += options.l2_jitter;
    Eigen::LDLT<Matrix> ldlt(hessian);
    if (ldlt.info() != Eigen::Success)
      throw std::runtime_error("fit_pto: singular Hessian (consider l2_jitter)");
    const Vector direction = ldlt.solve(grad);

    // step halving until the likelihood does not decrease
    double step = 1.0;
    double new_ll = ll;
    Vector candidate;
    for (int halvings = 0; halvings < 40; ++halvings) {
      candidate = phi + step * direction;
      new_ll = log_lik(candidate);
      if (new_ll >= ll) break;
      step *= 0.5;
    }
    if (new_ll < ll)
      throw std::runtime_error("fit_pto: line search failed to improve the likelihood");
    phi = candidate;
    ll = new_ll;

    if (phi.cwiseAbs().maxCoeff() > options.divergence_norm)
      throw std::runtime_error(
          "fit_pto: coefficients diverging (" +
          std::to_string(phi.cwiseAbs().maxCoeff()) +
          "); data look separated, consider l2_jitter");
  }
  if (!converged)
    throw std::runtime_error("fit_pto: no convergence after " +
                             std::to_string(options.max_iterations) + " iterations");

  fit.log_likelihood = ll;
  fit.model.phi1 = phi.head(3);
  fit.model.phi2 = phi.segment(3, p);
  fit.model.phi3 = phi.tail(p);

  // asymptotic covariance from the observed information at the optimum
  {
    const Vector eta = Z * phi;
    Vector lam(n);
    for (Index i = 0; i < n; ++i) {
      const double mu = sigmoid(eta[i]);
      lam[i] = mu * (1.0 - mu);
    }
    hessian = Z.transpose() * lam.asDiagonal() * Z;
    hessian.diagonal().array() += options.l2_jitter;
    Eigen::LDLT<Matrix> ldlt(hessian);
    const Matrix cov = ldlt.solve(Matrix::Identity(dim, dim));
    fit.std_errors = cov.diagonal().cwiseMax(0.0).cwiseSqrt();
  }
  return fit;
}

// Profit margin P(x, a) - P_fair(x) as a function of the observed features.
// The ticket price is recovered from its standardized coordinate.
using MarginFn = std::function<double(const Vector&, double)>;

inline MarginFn make_margin(const simenv::EnvironmentParams& params) {
  const auto& s = simenv::standardizer();
  const double fair_rate = params.fair_rate;
  const double lambda = params.lambda_loading;
  return [&s, fair_rate, lambda](const Vector& x, double action) {
    const double ticket = x[0] * s.ticket_sd + s.ticket_mean;
    return fair_rate * ticket * (1.0 + action) * lambda;
  };
}

// Expected-reward model implied by a fitted conversion model:
// rho(x, a) = p_hat(x, a) (P(x, a) - P_fair(x)). This is the model the DM
// estimator reuses when self-evaluating the PTO policy.
class PtoRewardModel final : public RewardModel {
 public:
  PtoRewardModel(PtoModel model, MarginFn margin)
      : model_(std::move(model)), margin_(std::move(margin)) {}

  double predict(const Vector& features, double action) const override {
    return model_.conversion_probability(features, action) * margin_(features, action);
  }

 private:
  PtoModel model_;
  MarginFn margin_;
};

// argmax_a p_hat(x, a) (P(x, a) - P_fair(x)) over the evaluation grid, ties
// toward the lowest index.
inline DeterministicPolicy pto_policy(const PtoModel& model, const ActionSpace& evaluation,
                                      const MarginFn& margin) {
  std::vector<double> levels = evaluation.levels();
  return DeterministicPolicy([model, margin, levels](const Vector& x) {
    Index best = 0;
    double best_value = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < levels.size(); ++k) {
      const double value =
          model.conversion_probability(x, levels[k]) * margin(x, levels[k]);
      if (value > best_value) {
        best_value = value;
        best = static_cast<Index>(k);
      }
    }
    return best;
  });
}

}  // namespace kips::opt
