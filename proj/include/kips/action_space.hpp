#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <stdexcept>
#include <vector>

#include "kips/math.hpp"

namespace kips {

// Finite grid of price-adjustment actions (dimensionless loading fractions,
// e.g. -0.20 ... +0.20). Levels are strictly increasing.
class ActionSpace {
 public:
  explicit ActionSpace(std::vector<double> levels) : levels_(std::move(levels)) {
    if (levels_.empty()) throw std::invalid_argument("ActionSpace: needs at least one level");
    for (std::size_t k = 1; k < levels_.size(); ++k) {
      if (!(levels_[k] > levels_[k - 1]))
        throw std::invalid_argument("ActionSpace: levels must be strictly increasing");
    }
    for (double a : levels_) {
      if (!std::isfinite(a)) throw std::invalid_argument("ActionSpace: levels must be finite");
    }
  }

  ActionSpace(std::initializer_list<double> levels)
      : ActionSpace(std::vector<double>(levels)) {}

  Index size() const { return static_cast<Index>(levels_.size()); }
  double level(Index k) const { return levels_.at(static_cast<std::size_t>(k)); }
  const std::vector<double>& levels() const { return levels_; }

  // Index of an exact level; throws if the value is not on the grid.
  Index index_of(double a) const {
    for (std::size_t k = 0; k < levels_.size(); ++k) {
      if (levels_[k] == a) return static_cast<Index>(k);
    }
    throw std::invalid_argument("ActionSpace: level not on grid");
  }

  bool operator==(const ActionSpace& other) const { return levels_ == other.levels_; }
  bool operator!=(const ActionSpace& other) const { return !(*this == other); }

  // Evenly spaced grid endpoints inclusive.
  static ActionSpace grid(double lo, double hi, Index count) {
    if (count < 1) throw std::invalid_argument("ActionSpace::grid: count must be >= 1");
    std::vector<double> ls(static_cast<std::size_t>(count));
    if (count == 1) {
      ls[0] = lo;
    } else {
      for (Index k = 0; k < count; ++k)
        ls[static_cast<std::size_t>(k)] =
            lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(count - 1);
    }
    return ActionSpace(std::move(ls));
  }

 private:
  std::vector<double> levels_;
};

}  // namespace kips
