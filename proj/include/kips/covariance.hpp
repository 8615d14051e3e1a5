#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

#include "kips/math.hpp"

namespace kips {

// Symmetric positive-definite weight matrix of the weighted least squares
// problem behind a kernel matrix (one per record).
struct WeightMatrix {
  Matrix W;

  Index d() const { return W.rows(); }
};

// Conditional covariance matrix of the per-action IPS weights
// Y_j = R 1{A=a_j} / propensity_j for one record.
struct CovarianceMatrix {
  Matrix Sigma;

  Index d() const { return Sigma.rows(); }
};

// Conditional reward moments per historical action:
// mu_j = E[R | x, a_j], sigma2_j = Var(R | x, a_j).
struct ConditionalMoments {
  Vector mu;
  Vector sigma2;

  void validate() const {
    if (mu.size() != sigma2.size())
      throw std::invalid_argument("ConditionalMoments: mu/sigma2 length mismatch");
    for (Index j = 0; j < sigma2.size(); ++j) {
      if (!(sigma2[j] >= 0.0))
        throw std::invalid_argument("ConditionalMoments: variances must be non-negative");
    }
  }
};

// diag of the logging propensities; the classical weighted least squares
// choice. Requires full overlap (all propensities strictly positive).
inline WeightMatrix naive_weights(const Vector& propensities) {
  for (Index k = 0; k < propensities.size(); ++k) {
    if (!(propensities[k] > 0.0))
      throw std::invalid_argument(
          "naive_weights: propensity of action " + std::to_string(k) +
          " is not strictly positive (overlap violation)");
  }
  WeightMatrix w;
  w.W = propensities.asDiagonal();
  return w;
}

// Covariance of the per-action IPS weights from the conditional reward
// moments: diagonal sigma2_j/p_j + mu_j^2 (1-p_j)/p_j, off-diagonal
// -mu_j mu_k (at most one action fires per record).
inline CovarianceMatrix covariance_entries(const ConditionalMoments& moments,
                                           const Vector& propensities) {
  moments.validate();
  const Index d = propensities.size();
  if (moments.mu.size() != d)
    throw std::invalid_argument("covariance_entries: moment length must match propensities");
  for (Index j = 0; j < d; ++j) {
    if (!(propensities[j] > 0.0))
      throw std::invalid_argument("covariance_entries: propensities must be strictly positive");
  }
  CovarianceMatrix cov;
  cov.Sigma = -(moments.mu * moments.mu.transpose());
  for (Index j = 0; j < d; ++j) {
    const double pj = propensities[j];
    cov.Sigma(j, j) = moments.sigma2[j] / pj +
                      moments.mu[j] * moments.mu[j] * (1.0 - pj) / pj;
  }
  return cov;
}

}  // namespace kips
