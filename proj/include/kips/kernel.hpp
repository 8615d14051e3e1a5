#pragma once

#include <Eigen/Dense>
#include <cstring>
#include <functional>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "kips/covariance.hpp"
#include "kips/design.hpp"
#include "kips/math.hpp"
#include "kips/sample.hpp"

namespace kips {

inline constexpr double kGramConditionWarn = 1e10;

// d x m kernel matrix translating historical actions to evaluation actions,
// plus the condition number of the Gram matrix it was solved against.
struct KernelMatrix {
  Matrix K;
  double gram_condition = 1.0;

  Index d() const { return K.rows(); }
  Index m() const { return K.cols(); }
};

namespace detail {

// Solves G Z = Dbar^T and returns (B Z, cond(G)) where G = D^T B. Shared by
// the naive and variance-optimal constructions; no explicit inverses.
inline KernelMatrix kernel_from_scaled_design(const Matrix& B, const Matrix& D,
                                              const Matrix& Dbar,
                                              const std::string& who) {
  const Matrix G = D.transpose() * B;
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (G + G.transpose()),
                                           Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  if (!(lo > 0.0)) {
    throw std::runtime_error(who + ": Gram matrix D^T W D is singular (min eigenvalue " +
                             std::to_string(lo) + ", max " + std::to_string(hi) + ")");
  }
  KernelMatrix result;
  result.gram_condition = hi / lo;
  Eigen::LLT<Matrix> llt(0.5 * (G + G.transpose()));
  if (llt.info() != Eigen::Success)
    throw std::runtime_error(who + ": Cholesky factorization of D^T W D failed");
  result.K = B * llt.solve(Dbar.transpose());
  return result;
}

}  // namespace detail

// K(x) = W D (D^T W D)^{-1} Dbar^T for a symmetric positive-definite W.
inline KernelMatrix kernel_matrix(const DesignMatrixPair& designs, const WeightMatrix& weights) {
  if (weights.d() != designs.d())
    throw std::invalid_argument("kernel_matrix: weight matrix dimension mismatch");
  return detail::kernel_from_scaled_design(weights.W * designs.D, designs.D, designs.Dbar,
                                           "kernel_matrix");
}

// Variance-optimal kernel K*(x) = Sigma^{-1} D (D^T Sigma^{-1} D)^{-1} Dbar^T.
// With ridge_jitter, a small multiple of trace(Sigma)/d is added to the
// diagonal before factorizing (for estimated covariances that may be
// rank-deficient under degenerate rewards).
inline KernelMatrix optimal_kernel_matrix(const DesignMatrixPair& designs,
                                          const CovarianceMatrix& covariance,
                                          bool ridge_jitter = false,
                                          double jitter_scale = 1e-8) {
  if (covariance.d() != designs.d())
    throw std::invalid_argument("optimal_kernel_matrix: covariance dimension mismatch");
  Matrix Sigma = covariance.Sigma;
  if (ridge_jitter) {
    const double tau = jitter_scale * Sigma.trace() / static_cast<double>(Sigma.rows());
    Sigma.diagonal().array() += tau;
  }
  Eigen::LLT<Matrix> llt(0.5 * (Sigma + Sigma.transpose()));
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error(
        "optimal_kernel_matrix: covariance matrix is not positive-definite; "
        "retry with ridge_jitter enabled");
  }
  const Matrix SinvD = llt.solve(designs.D);
  return detail::kernel_from_scaled_design(SinvD, designs.D, designs.Dbar,
                                           "optimal_kernel_matrix");
}

// Residuals of the two structural identities every kernel must satisfy:
// K^T D = Dbar and unit column sums.
struct KernelIdentityResiduals {
  double transpose_identity = 0.0;  // max |(K^T D - Dbar)_ij|
  double column_sums = 0.0;         // max_k |sum_j K_jk - 1|
};

inline KernelIdentityResiduals kernel_identity_residuals(const KernelMatrix& kernel,
                                                         const DesignMatrixPair& designs) {
  KernelIdentityResiduals r;
  r.transpose_identity =
      (kernel.K.transpose() * designs.D - designs.Dbar).cwiseAbs().maxCoeff();
  r.column_sums = (kernel.K.colwise().sum().array() - 1.0).abs().maxCoeff();
  return r;
}

enum class KernelVariant { Naive, Optimal };

inline const char* kernel_variant_name(KernelVariant v) {
  return v == KernelVariant::Naive ? "KIPS-naive" : "KIPS-optimal";
}

// Per-record kernel matrices for a learning sample. Records sharing a kernel
// (e.g. uniform logging) point at one shared matrix.
class KernelSet {
 public:
  KernelSet(KernelVariant variant, std::vector<std::shared_ptr<const KernelMatrix>> per_record)
      : variant_(variant), per_record_(std::move(per_record)) {
    if (per_record_.empty()) throw std::invalid_argument("KernelSet: empty");
  }

  KernelVariant variant() const { return variant_; }
  std::size_t size() const { return per_record_.size(); }
  const KernelMatrix& at(std::size_t i) const { return *per_record_.at(i); }

  Index d() const { return per_record_.front()->d(); }
  Index m() const { return per_record_.front()->m(); }

 private:
  KernelVariant variant_;
  std::vector<std::shared_ptr<const KernelMatrix>> per_record_;
};

// Cache of naive kernels keyed by the exact propensity vector bytes. Uniform
// logging collapses the whole sample onto a single entry.
class KernelCache {
 public:
  std::shared_ptr<const KernelMatrix> get_or_build(
      const Vector& propensities,
      const std::function<KernelMatrix()>& build) {
    const std::string key(reinterpret_cast<const char*>(propensities.data()),
                          static_cast<std::size_t>(propensities.size()) * sizeof(double));
    {
      std::lock_guard<std::mutex> lock(mutex_);
      auto it = entries_.find(key);
      if (it != entries_.end()) return it->second;
    }
    auto built = std::make_shared<const KernelMatrix>(build());
    std::lock_guard<std::mutex> lock(mutex_);
    auto [it, inserted] = entries_.emplace(key, built);
    return it->second;
  }

  std::size_t size() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return entries_.size();
  }

 private:
  mutable std::mutex mutex_;
  std::unordered_map<std::string, std::shared_ptr<const KernelMatrix>> entries_;
};

// Conditional reward moments per record index; implementations: the simulator
// oracle and the binned plug-in estimator (moments.hpp).
using MomentProvider = std::function<ConditionalMoments(std::size_t record_index)>;

inline KernelSet make_naive_kernels(const LearningSample& sample, const BasisSpec& basis,
                                    const ActionSpace& evaluation) {
  const DesignMatrixPair designs = build_design(basis, sample.actions(), evaluation);
  KernelCache cache;
  std::vector<std::shared_ptr<const KernelMatrix>> ks;
  ks.reserve(sample.records().size());
  for (const auto& rec : sample.records()) {
    ks.push_back(cache.get_or_build(rec.propensities, [&] {
      return kernel_matrix(designs, naive_weights(rec.propensities));
    }));
  }
  return KernelSet(KernelVariant::Naive, std::move(ks));
}

inline KernelSet make_optimal_kernels(const LearningSample& sample, const BasisSpec& basis,
                                      const ActionSpace& evaluation,
                                      const MomentProvider& moments,
                                      bool ridge_jitter = false) {
  const DesignMatrixPair designs = build_design(basis, sample.actions(), evaluation);
  std::vector<std::shared_ptr<const KernelMatrix>> ks;
  ks.reserve(sample.records().size());
  for (std::size_t i = 0; i < sample.records().size(); ++i) {
    const CovarianceMatrix cov =
        covariance_entries(moments(i), sample.record(i).propensities);
    ks.push_back(std::make_shared<const KernelMatrix>(
        optimal_kernel_matrix(designs, cov, ridge_jitter)));
  }
  return KernelSet(KernelVariant::Optimal, std::move(ks));
}

// Wraps an externally supplied matrix (e.g. a published example) as a shared
// kernel for every record.
inline KernelSet shared_kernel_set(KernelVariant variant, Matrix K, std::size_t n_records) {
  KernelMatrix km;
  km.K = std::move(K);
  auto shared = std::make_shared<const KernelMatrix>(std::move(km));
  return KernelSet(variant,
                   std::vector<std::shared_ptr<const KernelMatrix>>(n_records, shared));
}

}  // namespace kips
