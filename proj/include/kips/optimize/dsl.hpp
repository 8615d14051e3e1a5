#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "kips/action_space.hpp"
#include "kips/kernel.hpp"
#include "kips/math.hpp"
#include "kips/policy.hpp"
#include "kips/sample.hpp"

namespace kips::opt {

// Per-record, per-evaluation-action value contributions
// V(i, a) = R_i <e_{A_i}, K_i e_a> / propensity_i(A_i). Column means equal the
// kernelized IPS values of the constant policies.
inline Matrix dsl_targets(const LearningSample& sample, const KernelSet& kernels) {
  if (kernels.size() != static_cast<std::size_t>(sample.size()))
    throw std::invalid_argument("dsl_targets: kernel count mismatch");
  const Index n = sample.size();
  const Index m = kernels.m();
  Matrix V(n, m);
  for (Index i = 0; i < n; ++i) {
    const auto& rec = sample.record(static_cast<std::size_t>(i));
    const Matrix& K = kernels.at(static_cast<std::size_t>(i)).K;
    V.row(i) = (rec.reward / rec.propensities[rec.action_index]) * K.row(rec.action_index);
  }
  return V;
}

// Data-shared Lasso fit. Coefficients live on the original feature scale;
// index 0 of each vector is an intercept column appended internally (global
// intercept unpenalized, action-specific intercept deviations penalized like
// any other deviation).
struct DslModel {
  Vector w0;                  // length p+1, shared
  std::vector<Vector> w_action;  // m vectors, length p+1
  double tau = 0.0;
  Vector gamma;               // per-action penalty multipliers
  Vector feature_mean;        // training standardization, persisted
  Vector feature_scale;

  Index p() const { return w0.size() - 1; }
  Index m() const { return static_cast<Index>(w_action.size()); }

  double predict(const Vector& x, Index action) const {
    const Vector& wa = w_action.at(static_cast<std::size_t>(action));
    double acc = w0[0] + wa[0];
    for (Index j = 0; j < x.size(); ++j) acc += x[j] * (w0[j + 1] + wa[j + 1]);
    return acc;
  }

  // Score whose argmax defines the policy; the shared part is omitted since
  // it cancels in the argmax.
  double action_score(const Vector& x, Index action) const {
    const Vector& wa = w_action.at(static_cast<std::size_t>(action));
    double acc = wa[0];
    for (Index j = 0; j < x.size(); ++j) acc += x[j] * wa[j + 1];
    return acc;
  }
};

struct DslOptions {
  double convergence_tol = 1e-6;  // max coefficient change per sweep
  std::size_t max_sweeps = 10000;
};

struct DslFit {
  DslModel model;
  double objective = 0.0;
  std::size_t sweeps = 0;
  std::vector<double> objective_trace;  // one entry per sweep
};

inline Vector default_dsl_gamma(Index m) {
  return Vector::Constant(m, 1.0 / std::sqrt(static_cast<double>(m)));
}

namespace detail {

inline double soft_threshold(double z, double t) {
  if (z > t) return z - t;
  if (z < -t) return z + t;
  return 0.0;
}

}  // namespace detail

// Minimizes sum_{i,a} (V_ia - z_i^T (u0 + u_a))^2
//           + tau (|u0|_1 + sum_a gamma_a |u_a|_1)
// by cyclic coordinate descent with soft-thresholding over the stacked n*m
// rows. Features are standardized internally; the returned coefficients are
// mapped back to the original scale.
inline DslFit fit_dsl(const Matrix& targets, const std::vector<Vector>& features,
                      double tau, const Vector& gamma, const DslOptions& options = {}) {
  const Index n = targets.rows();
  const Index m = targets.cols();
  if (static_cast<Index>(features.size()) != n)
    throw std::invalid_argument("fit_dsl: feature count must match target rows");
  if (gamma.size() != m) throw std::invalid_argument("fit_dsl: gamma length must match actions");
  for (Index a = 0; a < m; ++a)
    if (!(gamma[a] > 0.0)) throw std::invalid_argument("fit_dsl: gamma must be positive");
  if (!(tau > 0.0)) throw std::invalid_argument("fit_dsl: tau must be positive");
  if (options.max_sweeps == 0) throw std::invalid_argument("fit_dsl: max_sweeps must be >= 1");
  const Index p = features.front().size();

  // standardized design with intercept column
  Vector mean = Vector::Zero(p), scale = Vector::Ones(p);
  {
    Vector sq = Vector::Zero(p);
    for (const auto& x : features) {
      mean += x;
      sq += x.cwiseProduct(x);
    }
    mean /= static_cast<double>(n);
    sq /= static_cast<double>(n);
    for (Index j = 0; j < p; ++j) {
      const double var = std::max(0.0, sq[j] - mean[j] * mean[j]);
      scale[j] = var > 1e-12 ? std::sqrt(var) : 1.0;
    }
  }
  Matrix Z(n, p + 1);
  Z.col(0).setOnes();
  for (Index i = 0; i < n; ++i)
    Z.row(i).tail(p) =
        ((features[static_cast<std::size_t>(i)] - mean).array() / scale.array()).transpose();
  const Vector col_sq = Z.colwise().squaredNorm().transpose();  // sum_i z_ij^2

  Vector u0 = Vector::Zero(p + 1);
  Matrix U = Matrix::Zero(p + 1, m);  // u_a in columns
  Matrix resid = targets;             // r_ia = V_ia - z_i^T(u0 + u_a)

  const double md = static_cast<double>(m);
  DslFit fit;
  auto objective = [&] {
    double pen = tau * u0.tail(p).cwiseAbs().sum();
    for (Index a = 0; a < m; ++a) pen += tau * gamma[a] * U.col(a).cwiseAbs().sum();
    return resid.squaredNorm() + pen;
  };

  for (std::size_t sweep = 0; sweep < options.max_sweeps; ++sweep) {
    double max_change = 0.0;

    // shared coefficients: every column of the residual matrix participates
    for (Index j = 0; j <= p; ++j) {
      const double denom = md * col_sq[j];
      if (denom <= 0.0) continue;
      const double partial = Z.col(j).dot(resid.rowwise().sum()) + denom * u0[j];
      const double pen = j == 0 ? 0.0 : tau;  // global intercept unpenalized
      const double updated = detail::soft_threshold(partial, pen / 2.0) / denom;
      const double delta = updated - u0[j];
      if (delta != 0.0) {
        resid.colwise() -= delta * Z.col(j);
        u0[j] = updated;
        max_change = std::max(max_change, std::abs(delta));
      }
    }

    // action-specific deviations
    for (Index a = 0; a < m; ++a) {
      for (Index j = 0; j <= p; ++j) {
        const double denom = col_sq[j];
        if (denom <= 0.0) continue;
        const double partial = Z.col(j).dot(resid.col(a)) + denom * U(j, a);
        const double updated =
            detail::soft_threshold(partial, tau * gamma[a] / 2.0) / denom;
        const double delta = updated - U(j, a);
        if (delta != 0.0) {
          resid.col(a) -= delta * Z.col(j);
          U(j, a) = updated;
          max_change = std::max(max_change, std::abs(delta));
        }
      }
    }

    fit.objective_trace.push_back(objective());
    fit.sweeps = sweep + 1;
    if (max_change < options.convergence_tol) break;
    if (sweep + 1 == options.max_sweeps)
      throw std::runtime_error("fit_dsl: no convergence after " +
                               std::to_string(options.max_sweeps) +
                               " sweeps (objective " +
                               std::to_string(fit.objective_trace.back()) + ")");
  }
  fit.objective = fit.objective_trace.back();

  // back to original scale: w_j = u_j / s_j, intercept absorbs the means
  auto unscale = [&](const Vector& u) {
    Vector w(p + 1);
    w[0] = u[0];
    for (Index j = 0; j < p; ++j) {
      w[j + 1] = u[j + 1] / scale[j];
      w[0] -= u[j + 1] * mean[j] / scale[j];
    }
    return w;
  };
  fit.model.w0 = unscale(u0);
  fit.model.w_action.resize(static_cast<std::size_t>(m));
  for (Index a = 0; a < m; ++a)
    fit.model.w_action[static_cast<std::size_t>(a)] = unscale(U.col(a));
  fit.model.tau = tau;
  fit.model.gamma = gamma;
  fit.model.feature_mean = mean;
  fit.model.feature_scale = scale;
  return fit;
}

inline DslFit fit_dsl(const Matrix& targets, const std::vector<Vector>& features, double tau,
                      const DslOptions& options = {}) {
  return fit_dsl(targets, features, tau, default_dsl_gamma(targets.cols()), options);
}

// argmax_a x^T w_a with ties broken toward the lowest action index.
inline DeterministicPolicy dsl_policy(const DslModel& model) {
  return DeterministicPolicy([model](const Vector& x) {
    Index best = 0;
    double best_score = model.action_score(x, 0);
    for (Index a = 1; a < model.m(); ++a) {
      const double s = model.action_score(x, a);
      if (s > best_score) {
        best_score = s;
        best = a;
      }
    }
    return best;
  });
}

}  // namespace kips::opt
