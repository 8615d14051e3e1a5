#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace kips {

// Smooth basis functions of the action value. The constant term is implicit:
// the evaluated design row for action a is (1, f_1(a), ..., f_q(a)).
class BasisSpec {
 public:
  struct Term {
    std::string name;
    std::function<double(double)> fn;
  };

  BasisSpec() = default;
  explicit BasisSpec(std::vector<Term> terms) : terms_(std::move(terms)) {}

  std::size_t degree() const { return terms_.size(); }  // q
  std::size_t columns() const { return terms_.size() + 1; }  // q + 1
  const std::vector<Term>& terms() const { return terms_; }

  // Monomials a, a^2, ..., a^q. q = 0 gives the intercept-only basis.
  static BasisSpec polynomial(std::size_t q) {
    std::vector<Term> ts;
    ts.reserve(q);
    for (std::size_t j = 1; j <= q; ++j) {
      ts.push_back({"a^" + std::to_string(j),
                    [j](double a) { return std::pow(a, static_cast<double>(j)); }});
    }
    return BasisSpec(std::move(ts));
  }

  static BasisSpec linear() { return polynomial(1); }
  static BasisSpec quadratic() { return polynomial(2); }

 private:
  std::vector<Term> terms_;
};

}  // namespace kips
