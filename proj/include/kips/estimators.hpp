#pragma once

#include <cmath>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "kips/action_space.hpp"
#include "kips/kernel.hpp"
#include "kips/math.hpp"
#include "kips/policy.hpp"
#include "kips/sample.hpp"
#include "kips/value.hpp"

namespace kips {

enum class EstimatorTag { DM, IPS, KipsNaive, KipsOptimal };

inline const char* estimator_name(EstimatorTag tag) {
  switch (tag) {
    case EstimatorTag::DM: return "DM";
    case EstimatorTag::IPS: return "IPS";
    case EstimatorTag::KipsNaive: return "KIPS-naive";
    case EstimatorTag::KipsOptimal: return "KIPS-optimal";
  }
  return "?";
}

// Value estimate plus the per-record contributions it averages. Contributions
// are kept so variance estimates, bootstrap intervals and scatter plots need
// no recomputation.
struct ValueEstimate {
  double value = 0.0;
  std::vector<double> contributions;
  EstimatorTag tag = EstimatorTag::IPS;

  double std_error() const {
    const double var = sample_variance(contributions);
    return std::sqrt(var / static_cast<double>(contributions.size()));
  }
};

namespace detail {

inline ValueEstimate finish(std::vector<double> contributions, EstimatorTag tag) {
  ValueEstimate est;
  est.value = pairwise_mean(contributions);
  est.contributions = std::move(contributions);
  est.tag = tag;
  return est;
}

}  // namespace detail

// Regression model of the expected reward, rho(x, a). Implementations in this
// repo: the simulator oracle and the fitted logistic (PTO) model.
class RewardModel {
 public:
  virtual ~RewardModel() = default;
  virtual double predict(const Vector& features, double action) const = 0;
};

class CallableRewardModel final : public RewardModel {
 public:
  using Fn = std::function<double(const Vector&, double)>;
  explicit CallableRewardModel(Fn fn) : fn_(std::move(fn)) {}
  double predict(const Vector& features, double action) const override {
    return fn_(features, action);
  }

 private:
  Fn fn_;
};

// Direct method: plug the fitted reward model into the empirical value.
inline ValueEstimate dm_value(const LearningSample& sample, const RewardModel& model,
                              const DeterministicPolicy& policy,
                              const ActionSpace& evaluation) {
  std::vector<double> contrib(static_cast<std::size_t>(sample.size()));
  for (std::size_t i = 0; i < contrib.size(); ++i) {
    const auto& rec = sample.record(i);
    const Index a = policy.action(rec.features);
    if (a < 0 || a >= evaluation.size())
      throw std::out_of_range("dm_value: policy index outside evaluation space");
    const double rho = model.predict(rec.features, evaluation.level(a));
    if (!std::isfinite(rho)) throw std::runtime_error("dm_value: model returned non-finite value");
    contrib[i] = rho;
  }
  return detail::finish(std::move(contrib), EstimatorTag::DM);
}

inline ValueEstimate dm_value(const LearningSample& sample, const RewardModel& model,
                              const StochasticPolicy& policy,
                              const ActionSpace& evaluation) {
  std::vector<double> contrib(static_cast<std::size_t>(sample.size()));
  for (std::size_t i = 0; i < contrib.size(); ++i) {
    const auto& rec = sample.record(i);
    const Vector p = policy.probabilities(rec.features);
    if (p.size() != evaluation.size())
      throw std::invalid_argument("dm_value: policy distribution length mismatch");
    double acc = 0.0;
    for (Index a = 0; a < evaluation.size(); ++a)
      acc += model.predict(rec.features, evaluation.level(a)) * p[a];
    contrib[i] = acc;
  }
  return detail::finish(std::move(contrib), EstimatorTag::DM);
}

// Classical inverse propensity scoring for a deterministic policy. Only valid
// when the target policy acts on the historical action space: the indicator
// requires exact action matches.
inline ValueEstimate ips_value(const LearningSample& sample, const DeterministicPolicy& policy,
                               const ActionSpace& evaluation) {
  if (evaluation != sample.actions())
    throw std::invalid_argument(
        "ips_value: IPS cannot evaluate policies on an action space different from the "
        "historical one; use the kernelized estimator");
  std::vector<double> contrib(static_cast<std::size_t>(sample.size()));
  for (std::size_t i = 0; i < contrib.size(); ++i) {
    const auto& rec = sample.record(i);
    const Index target = policy.action(rec.features);
    if (target < 0 || target >= evaluation.size())
      throw std::out_of_range("ips_value: policy index outside action space");
    contrib[i] = rec.action_index == target
                     ? rec.reward / rec.propensities[rec.action_index]
                     : 0.0;
  }
  return detail::finish(std::move(contrib), EstimatorTag::IPS);
}

// Kernelized IPS, deterministic target policy:
// (1/n) sum_i R_i <e_{A_i}, K_i e_{policy(x_i)}> / propensity_i(A_i).
inline ValueEstimate kips_value(const LearningSample& sample, const DeterministicPolicy& policy,
                                const KernelSet& kernels) {
  if (kernels.size() != static_cast<std::size_t>(sample.size()))
    throw std::invalid_argument("kips_value: kernel count must match record count");
  if (kernels.d() != sample.actions().size())
    throw std::invalid_argument("kips_value: kernel rows must match historical action count");
  std::vector<double> contrib(static_cast<std::size_t>(sample.size()));
  for (std::size_t i = 0; i < contrib.size(); ++i) {
    const auto& rec = sample.record(i);
    const Matrix& K = kernels.at(i).K;
    const Index target = policy.action(rec.features);
    if (target < 0 || target >= K.cols())
      throw std::out_of_range("kips_value: policy index outside kernel columns");
    contrib[i] = rec.reward * K(rec.action_index, target) / rec.propensities[rec.action_index];
  }
  return detail::finish(std::move(contrib),
                        kernels.variant() == KernelVariant::Naive ? EstimatorTag::KipsNaive
                                                                  : EstimatorTag::KipsOptimal);
}

// Stochastic target policy: the one-hot vector is replaced by the action
// probability vector, which makes the estimate linear in those probabilities.
inline ValueEstimate kips_value(const LearningSample& sample, const StochasticPolicy& policy,
                                const KernelSet& kernels) {
  if (kernels.size() != static_cast<std::size_t>(sample.size()))
    throw std::invalid_argument("kips_value: kernel count must match record count");
  std::vector<double> contrib(static_cast<std::size_t>(sample.size()));
  for (std::size_t i = 0; i < contrib.size(); ++i) {
    const auto& rec = sample.record(i);
    const Matrix& K = kernels.at(i).K;
    const Vector p = policy.probabilities(rec.features);
    if (p.size() != K.cols())
      throw std::invalid_argument("kips_value: policy distribution length mismatch");
    contrib[i] = rec.reward * K.row(rec.action_index).dot(p) /
                 rec.propensities[rec.action_index];
  }
  return detail::finish(std::move(contrib),
                        kernels.variant() == KernelVariant::Naive ? EstimatorTag::KipsNaive
                                                                  : EstimatorTag::KipsOptimal);
}

// Weight distribution and conditioning report for one estimator run.
struct DiagnosticsReport {
  std::vector<double> weights;       // effective multiplier per record
  double effective_sample_size = 0;  // (sum w)^2 / sum w^2
  double max_abs_weight = 0.0;
  double max_abs_kernel_entry = 0.0;     // 0 when no kernel involved
  double max_gram_condition = 0.0;       // 0 when no kernel involved
  bool gram_condition_warning = false;   // any record above kGramConditionWarn
};

namespace detail {

inline void fill_weight_stats(DiagnosticsReport& rep) {
  double sw = 0.0, sw2 = 0.0;
  for (double w : rep.weights) {
    sw += w;
    sw2 += w * w;
    rep.max_abs_weight = std::max(rep.max_abs_weight, std::abs(w));
  }
  rep.effective_sample_size = sw2 > 0.0 ? sw * sw / sw2 : 0.0;
}

}  // namespace detail

inline DiagnosticsReport estimator_diagnostics(const LearningSample& sample,
                                               const DeterministicPolicy& policy,
                                               const KernelSet* kernels = nullptr) {
  DiagnosticsReport rep;
  rep.weights.resize(static_cast<std::size_t>(sample.size()));
  for (std::size_t i = 0; i < rep.weights.size(); ++i) {
    const auto& rec = sample.record(i);
    const Index target = policy.action(rec.features);
    if (kernels != nullptr) {
      const KernelMatrix& km = kernels->at(i);
      rep.weights[i] = km.K(rec.action_index, target) / rec.propensities[rec.action_index];
      rep.max_abs_kernel_entry =
          std::max(rep.max_abs_kernel_entry, km.K.cwiseAbs().maxCoeff());
      rep.max_gram_condition = std::max(rep.max_gram_condition, km.gram_condition);
    } else {
      rep.weights[i] = rec.action_index == target
                           ? 1.0 / rec.propensities[rec.action_index]
                           : 0.0;
    }
  }
  rep.gram_condition_warning = rep.max_gram_condition > kGramConditionWarn;
  detail::fill_weight_stats(rep);
  return rep;
}

}  // namespace kips
