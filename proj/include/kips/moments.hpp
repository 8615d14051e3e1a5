#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "kips/covariance.hpp"
#include "kips/kernel.hpp"
#include "kips/sample.hpp"

namespace kips {

// Plug-in estimate of the conditional reward moments: per-action sample means
// and variances inside covariate-quantile bins. When asked for record i, the
// record's own reward is removed from its cell (leave-one-out) so that the
// resulting kernel weights stay independent of the reward they multiply.
class BinnedMomentEstimator {
 public:
  BinnedMomentEstimator(const LearningSample& sample,
                        std::vector<double> bin_scalar,
                        std::size_t n_bins = 10)
      : d_(static_cast<std::size_t>(sample.actions().size())), n_bins_(n_bins) {
    const std::size_t n = sample.records().size();
    if (bin_scalar.size() != n)
      throw std::invalid_argument("BinnedMomentEstimator: scalar length mismatch");
    if (n_bins_ < 1) throw std::invalid_argument("BinnedMomentEstimator: need >= 1 bin");

    std::vector<double> sorted = bin_scalar;
    std::sort(sorted.begin(), sorted.end());
    edges_.resize(n_bins_ - 1);
    for (std::size_t b = 1; b < n_bins_; ++b) {
      const std::size_t pos = b * n / n_bins_;
      edges_[b - 1] = sorted[std::min(pos, n - 1)];
    }

    cells_.assign(n_bins_ * d_, Cell{});
    global_.assign(d_, Cell{});
    bin_of_.resize(n);
    action_of_.resize(n);
    reward_of_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto& rec = sample.record(i);
      const std::size_t b = bin_index(bin_scalar[i]);
      const std::size_t j = static_cast<std::size_t>(rec.action_index);
      bin_of_[i] = b;
      action_of_[i] = j;
      reward_of_[i] = rec.reward;
      cells_[b * d_ + j].add(rec.reward);
      global_[j].add(rec.reward);
    }
  }

  ConditionalMoments moments_for(std::size_t record) const {
    const std::size_t b = bin_of_.at(record);
    ConditionalMoments mom;
    mom.mu.resize(static_cast<Index>(d_));
    mom.sigma2.resize(static_cast<Index>(d_));
    for (std::size_t j = 0; j < d_; ++j) {
      Cell cell = cells_[b * d_ + j];
      Cell fallback = global_[j];
      if (j == action_of_[record]) {
        cell.remove(reward_of_[record]);
        fallback.remove(reward_of_[record]);
      }
      const Cell& use = cell.count >= 2 ? cell : fallback;
      mom.mu[static_cast<Index>(j)] = use.mean();
      mom.sigma2[static_cast<Index>(j)] = use.variance();
    }
    return mom;
  }

  MomentProvider provider() const {
    return [this](std::size_t i) { return moments_for(i); };
  }

 private:
  struct Cell {
    std::size_t count = 0;
    double sum = 0.0;
    double sumsq = 0.0;

    void add(double r) {
      ++count;
      sum += r;
      sumsq += r * r;
    }
    void remove(double r) {
      if (count == 0) return;
      --count;
      sum -= r;
      sumsq -= r * r;
    }
    double mean() const { return count > 0 ? sum / static_cast<double>(count) : 0.0; }
    double variance() const {
      if (count < 2) return 0.0;
      const double m = mean();
      return std::max(0.0, sumsq / static_cast<double>(count) - m * m);
    }
  };

  std::size_t bin_index(double v) const {
    const auto it = std::upper_bound(edges_.begin(), edges_.end(), v);
    return static_cast<std::size_t>(it - edges_.begin());
  }

  std::size_t d_;
  std::size_t n_bins_;
  std::vector<double> edges_;
  std::vector<Cell> cells_;
  std::vector<Cell> global_;
  std::vector<std::size_t> bin_of_;
  std::vector<std::size_t> action_of_;
  std::vector<double> reward_of_;
};

}  // namespace kips
