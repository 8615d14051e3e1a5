#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

#include "kips/action_space.hpp"
#include "kips/basis.hpp"
#include "kips/math.hpp"

namespace kips {

// Design matrices of the action-basis regression: D on the historical action
// space (d x (q+1)) and Dbar on the evaluation space (m x (q+1)).
struct DesignMatrixPair {
  Matrix D;
  Matrix Dbar;

  Index d() const { return D.rows(); }
  Index m() const { return Dbar.rows(); }
  Index columns() const { return D.cols(); }
};

namespace detail {

inline Matrix evaluate_basis(const BasisSpec& basis, const ActionSpace& actions) {
  const Index rows = actions.size();
  const Index cols = static_cast<Index>(basis.columns());
  Matrix M(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    M(i, 0) = 1.0;
    for (std::size_t j = 0; j < basis.degree(); ++j) {
      const double v = basis.terms()[j].fn(actions.level(i));
      if (!std::isfinite(v))
        throw std::invalid_argument("build_design: basis '" + basis.terms()[j].name +
                                    "' is not finite at action " +
                                    std::to_string(actions.level(i)));
      M(i, static_cast<Index>(j) + 1) = v;
    }
  }
  return M;
}

}  // namespace detail

// Evaluates the basis on both action spaces and checks that D has full column
// rank q+1 (otherwise the weighted least squares problem is ill-posed).
inline DesignMatrixPair build_design(const BasisSpec& basis,
                                     const ActionSpace& historical,
                                     const ActionSpace& evaluation) {
  const Index q1 = static_cast<Index>(basis.columns());
  if (q1 > historical.size())
    throw std::invalid_argument(
        "build_design: basis has " + std::to_string(q1) +
        " columns but only " + std::to_string(historical.size()) +
        " historical actions; regression is underdetermined");

  DesignMatrixPair pair{detail::evaluate_basis(basis, historical),
                        detail::evaluate_basis(basis, evaluation)};

  Eigen::ColPivHouseholderQR<Matrix> qr(pair.D);
  qr.setThreshold(1e-10);
  if (qr.rank() < q1) {
    std::string offending = "constant";
    // column flagged by the pivoting as redundant
    const Index bad = qr.colsPermutation().indices()[qr.rank()];
    if (bad > 0) offending = basis.terms()[static_cast<std::size_t>(bad - 1)].name;
    throw std::invalid_argument("build_design: design matrix is rank deficient; basis term '" +
                                offending + "' is linearly dependent on the others");
  }
  return pair;
}

}  // namespace kips
