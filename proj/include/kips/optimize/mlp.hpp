#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "kips/kernel.hpp"
#include "kips/math.hpp"
#include "kips/policy.hpp"
#include "kips/rng.hpp"
#include "kips/sample.hpp"

namespace kips::opt {

// Feedforward softmax policy: ReLU hidden layers, softmax output over the
// evaluation actions.
class MlpPolicy {
 public:
  MlpPolicy(Index input_dim, std::vector<Index> hidden, Index output_dim,
            std::uint64_t init_seed) {
    if (input_dim < 1 || output_dim < 1)
      throw std::invalid_argument("MlpPolicy: dimensions must be positive");
    std::vector<Index> dims;
    dims.push_back(input_dim);
    for (Index h : hidden) {
      if (h < 1) throw std::invalid_argument("MlpPolicy: hidden sizes must be positive");
      dims.push_back(h);
    }
    dims.push_back(output_dim);
    Rng rng(init_seed);
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
      // uniform fan-in scaling, biases at zero
      const double limit = std::sqrt(6.0 / static_cast<double>(dims[l]));
      Matrix W(dims[l + 1], dims[l]);
      for (Index r = 0; r < W.rows(); ++r)
        for (Index c = 0; c < W.cols(); ++c) W(r, c) = rng.uniform(-limit, limit);
      weights_.push_back(std::move(W));
      biases_.push_back(Vector::Zero(dims[l + 1]));
    }
  }

  Index input_dim() const { return weights_.front().cols(); }
  Index output_dim() const { return weights_.back().rows(); }
  std::size_t layers() const { return weights_.size(); }

  // Batch forward pass; columns are samples. Returns softmax probabilities.
  Matrix probabilities(const Matrix& inputs) const {
    Matrix z = inputs;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      z = (weights_[l] * z).colwise() + biases_[l];
      if (l + 1 < weights_.size()) z = z.cwiseMax(0.0);
    }
    // column-wise softmax, shifted for stability
    for (Index c = 0; c < z.cols(); ++c) {
      Vector col = z.col(c);
      col.array() -= col.maxCoeff();
      col = col.array().exp();
      z.col(c) = col / col.sum();
    }
    return z;
  }

  Vector probabilities(const Vector& x) const {
    Matrix p = probabilities(Matrix(x));
    return p.col(0);
  }

  StochasticPolicy as_stochastic() const {
    MlpPolicy copy = *this;
    return StochasticPolicy([copy](const Vector& x) { return copy.probabilities(x); });
  }

  DeterministicPolicy as_deterministic() const {
    MlpPolicy copy = *this;
    return DeterministicPolicy([copy](const Vector& x) {
      const Vector p = copy.probabilities(x);
      Index best = 0;
      for (Index k = 1; k < p.size(); ++k)
        if (p[k] > p[best]) best = k;
      return best;
    });
  }

  // Flat parameter access (weights then bias per layer), used by the trainer
  // and by gradient checks.
  Vector parameters() const {
    Index total = 0;
    for (std::size_t l = 0; l < weights_.size(); ++l)
      total += weights_[l].size() + biases_[l].size();
    Vector theta(total);
    Index off = 0;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      theta.segment(off, weights_[l].size()) =
          Eigen::Map<const Vector>(weights_[l].data(), weights_[l].size());
      off += weights_[l].size();
      theta.segment(off, biases_[l].size()) = biases_[l];
      off += biases_[l].size();
    }
    return theta;
  }

  void set_parameters(const Vector& theta) {
    Index off = 0;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      Eigen::Map<Vector>(weights_[l].data(), weights_[l].size()) =
          theta.segment(off, weights_[l].size());
      off += weights_[l].size();
      biases_[l] = theta.segment(off, biases_[l].size());
      off += biases_[l].size();
    }
    if (off != theta.size()) throw std::invalid_argument("MlpPolicy: parameter length mismatch");
  }

  const std::vector<Matrix>& weights() const { return weights_; }
  const std::vector<Vector>& biases() const { return biases_; }
  std::vector<Matrix>& mutable_weights() { return weights_; }
  std::vector<Vector>& mutable_biases() { return biases_; }

 private:
  std::vector<Matrix> weights_;
  std::vector<Vector> biases_;
};

// The training signal per record: c_i = R_i K_i^T e_{A_i} / propensity_i, so
// that the kernelized IPS value of a stochastic policy is mean_i c_i^T p_i.
inline Matrix kips_objective_coefficients(const LearningSample& sample,
                                          const KernelSet& kernels) {
  const Index n = sample.size();
  const Index m = kernels.m();
  Matrix C(m, n);
  for (Index i = 0; i < n; ++i) {
    const auto& rec = sample.record(static_cast<std::size_t>(i));
    const Matrix& K = kernels.at(static_cast<std::size_t>(i)).K;
    C.col(i) = (rec.reward / rec.propensities[rec.action_index]) *
               K.row(rec.action_index).transpose();
  }
  return C;
}

// mean_i c_i^T softmax(f_theta(x_i)) over the given columns.
inline double mlp_objective(const MlpPolicy& policy, const Matrix& inputs,
                            const Matrix& coefficients) {
  const Matrix P = policy.probabilities(inputs);
  return (P.cwiseProduct(coefficients)).sum() / static_cast<double>(inputs.cols());
}

// Analytic gradient of mlp_objective with respect to the flat parameters.
inline Vector mlp_gradient(const MlpPolicy& policy, const Matrix& inputs,
                           const Matrix& coefficients) {
  const std::size_t L = policy.layers();
  std::vector<Matrix> pre(L);   // pre-activations
  std::vector<Matrix> post(L);  // activations
  Matrix z = inputs;
  for (std::size_t l = 0; l < L; ++l) {
    pre[l] = (policy.weights()[l] * z).colwise() + policy.biases()[l];
    post[l] = l + 1 < L ? pre[l].cwiseMax(0.0).eval() : pre[l];
    z = post[l];
  }
  Matrix P = pre[L - 1];
  for (Index c = 0; c < P.cols(); ++c) {
    Vector col = P.col(c);
    col.array() -= col.maxCoeff();
    col = col.array().exp();
    P.col(c) = col / col.sum();
  }

  const double inv_b = 1.0 / static_cast<double>(inputs.cols());
  // d objective / d logits = p .* (c - (c^T p) 1) / B
  Matrix G = P.cwiseProduct(coefficients);
  const Eigen::RowVectorXd dots = G.colwise().sum();
  G -= P * dots.asDiagonal();
  G *= inv_b;

  std::vector<Matrix> dW(L);
  std::vector<Vector> db(L);
  for (std::size_t l = L; l-- > 0;) {
    const Matrix& below = l == 0 ? inputs : post[l - 1];
    dW[l] = G * below.transpose();
    db[l] = G.rowwise().sum();
    if (l > 0) {
      G = policy.weights()[l].transpose() * G;
      G = G.cwiseProduct((pre[l - 1].array() > 0.0).cast<double>().matrix());
    }
  }

  Index total = 0;
  for (std::size_t l = 0; l < L; ++l) total += dW[l].size() + db[l].size();
  Vector grad(total);
  Index off = 0;
  for (std::size_t l = 0; l < L; ++l) {
    grad.segment(off, dW[l].size()) = Eigen::Map<const Vector>(dW[l].data(), dW[l].size());
    off += dW[l].size();
    grad.segment(off, db[l].size()) = db[l];
    off += db[l].size();
  }
  return grad;
}

struct MlpArchitecture {
  std::vector<Index> hidden{32, 32};
};

struct MlpTrainParams {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  Index batch_size = 1024;
  std::size_t epochs = 50;
  std::uint64_t seed = 1;
};

struct MlpEpochStats {
  std::size_t epoch = 0;
  double train_objective = 0.0;
  double held_out_objective = 0.0;
};

struct MlpTrainResult {
  MlpPolicy policy;            // parameters of the best held-out epoch
  std::vector<MlpEpochStats> log;
  double best_held_out = 0.0;
  std::size_t best_epoch = 0;
};

// Gradient ascent (adaptive moments) on the kernelized IPS objective with the
// stochastic-policy form, which is differentiable in the network parameters.
// Returns the parameters of the epoch with the best held-out objective.
inline MlpTrainResult train_mlp_policy(const LearningSample& sample, const KernelSet& kernels,
                                       const MlpArchitecture& architecture,
                                       const MlpTrainParams& params,
                                       double held_out_fraction) {
  if (!(held_out_fraction > 0.0 && held_out_fraction < 1.0))
    throw std::invalid_argument("train_mlp_policy: held-out fraction must be in (0, 1)");
  const Index n = sample.size();
  const Index p = sample.feature_dim();
  const Index m = kernels.m();

  Matrix X(p, n);
  for (Index i = 0; i < n; ++i) X.col(i) = sample.record(static_cast<std::size_t>(i)).features;
  const Matrix C = kips_objective_coefficients(sample, kernels);

  // deterministic shuffled split
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  Rng split_rng(Rng::derive(params.seed, 0xB00Bu));
  for (std::size_t i = order.size(); i > 1; --i)
    std::swap(order[i - 1],
              order[static_cast<std::size_t>(split_rng.uniform_int(0, static_cast<std::int64_t>(i) - 1))]);
  const Index n_held = std::max<Index>(1, static_cast<Index>(std::llround(
                                              held_out_fraction * static_cast<double>(n))));
  const Index n_train = n - n_held;
  if (n_train < 1) throw std::invalid_argument("train_mlp_policy: no training data left");

  auto gather = [&](Index lo, Index hi) {
    Matrix Xs(p, hi - lo), Cs(m, hi - lo);
    for (Index i = lo; i < hi; ++i) {
      Xs.col(i - lo) = X.col(order[static_cast<std::size_t>(i)]);
      Cs.col(i - lo) = C.col(order[static_cast<std::size_t>(i)]);
    }
    return std::make_pair(std::move(Xs), std::move(Cs));
  };
  auto [Xtr, Ctr] = gather(0, n_train);
  auto [Xho, Cho] = gather(n_train, n);

  MlpPolicy policy(p, architecture.hidden, m, Rng::derive(params.seed, 0x1717u));
  Vector theta = policy.parameters();
  Vector m1 = Vector::Zero(theta.size());
  Vector m2 = Vector::Zero(theta.size());

  MlpTrainResult result{policy, {}, -std::numeric_limits<double>::infinity(), 0};
  Rng batch_rng(Rng::derive(params.seed, 0xBA7C4u));
  std::vector<Index> train_order(static_cast<std::size_t>(n_train));
  std::iota(train_order.begin(), train_order.end(), Index{0});

  std::size_t step = 0;
  for (std::size_t epoch = 1; epoch <= params.epochs; ++epoch) {
    for (std::size_t i = train_order.size(); i > 1; --i)
      std::swap(train_order[i - 1],
                train_order[static_cast<std::size_t>(
                    batch_rng.uniform_int(0, static_cast<std::int64_t>(i) - 1))]);

    for (Index lo = 0; lo < n_train; lo += params.batch_size) {
      const Index hi = std::min(n_train, lo + params.batch_size);
      Matrix Xb(p, hi - lo), Cb(m, hi - lo);
      for (Index i = lo; i < hi; ++i) {
        Xb.col(i - lo) = Xtr.col(train_order[static_cast<std::size_t>(i)]);
        Cb.col(i - lo) = Ctr.col(train_order[static_cast<std::size_t>(i)]);
      }
      const Vector grad = mlp_gradient(policy, Xb, Cb);
      ++step;
      const double t = static_cast<double>(step);
      m1 = params.beta1 * m1 + (1.0 - params.beta1) * grad;
      m2 = params.beta2 * m2 + (1.0 - params.beta2) * grad.cwiseProduct(grad);
      const Vector m1hat = m1 / (1.0 - std::pow(params.beta1, t));
      const Vector m2hat = m2 / (1.0 - std::pow(params.beta2, t));
      theta += params.learning_rate *
               (m1hat.array() / (m2hat.array().sqrt() + params.epsilon)).matrix();
      policy.set_parameters(theta);
    }

    MlpEpochStats stats;
    stats.epoch = epoch;
    stats.train_objective = mlp_objective(policy, Xtr, Ctr);
    stats.held_out_objective = mlp_objective(policy, Xho, Cho);
    if (!std::isfinite(stats.train_objective) || !std::isfinite(stats.held_out_objective))
      throw std::runtime_error("train_mlp_policy: non-finite objective at epoch " +
                               std::to_string(epoch) + " (train " +
                               std::to_string(stats.train_objective) + ", held-out " +
                               std::to_string(stats.held_out_objective) + ")");
    result.log.push_back(stats);
    if (stats.held_out_objective > result.best_held_out) {
      result.best_held_out = stats.held_out_objective;
      result.best_epoch = epoch;
      result.policy = policy;
    }
  }
  return result;
}

// Runs several independently initialized fits and keeps the one whose best
// epoch scored highest on its held-out split.
inline MlpTrainResult train_mlp_policy_restarts(const LearningSample& sample,
                                                const KernelSet& kernels,
                                                const MlpArchitecture& architecture,
                                                const MlpTrainParams& params,
                                                double held_out_fraction,
                                                std::size_t restarts) {
  if (restarts == 0) throw std::invalid_argument("train_mlp_policy_restarts: restarts must be >= 1");
  MlpTrainResult best{MlpPolicy(1, {}, 1, 0), {}, -std::numeric_limits<double>::infinity(), 0};
  for (std::size_t r = 0; r < restarts; ++r) {
    MlpTrainParams pr = params;
    pr.seed = Rng::derive(params.seed, 0x5EED0000u + r);
    MlpTrainResult res = train_mlp_policy(sample, kernels, architecture, pr, held_out_fraction);
    if (res.best_held_out > best.best_held_out) best = std::move(res);
  }
  return best;
}

}  // namespace kips::opt
