#pragma once

#include <cstring>
#include <memory>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "kips/math.hpp"
#include "kips/policy.hpp"
#include "kips/simenv/simulate.hpp"

namespace kips::opt {

struct OracleResult {
  DeterministicPolicy policy;   // lookup rule bound to the records it came from
  std::vector<Index> actions;   // argmax action per record
  double value = 0.0;           // empirical value of the argmax rule
};

// Record-wise argmax of the true expected rewards; its empirical value is the
// maximal achievable benchmark on these records. The returned policy keys on
// the observed feature bytes (unique a.s. thanks to the continuous ticket
// price), since the latent destination makes the oracle rule unrepresentable
// as a function of the observed features alone.
inline OracleResult oracle_policy(const std::vector<simenv::SimulatedRecord>& records) {
  if (records.empty()) throw std::invalid_argument("oracle_policy: empty record set");
  OracleResult result{DeterministicPolicy::constant(0), {}, 0.0};
  result.actions.resize(records.size());

  auto key_of = [](const Vector& x) {
    return std::string(reinterpret_cast<const char*>(x.data()),
                       static_cast<std::size_t>(x.size()) * sizeof(double));
  };

  auto lookup = std::make_shared<std::unordered_map<std::string, Index>>();
  std::vector<double> best(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    const Vector& rho = records[i].true_expected_rewards;
    Index arg = 0;
    for (Index k = 1; k < rho.size(); ++k)
      if (rho[k] > rho[arg]) arg = k;
    result.actions[i] = arg;
    best[i] = rho[arg];
    (*lookup)[key_of(records[i].encoded_observed)] = arg;
  }
  result.value = pairwise_mean(best);
  result.policy = DeterministicPolicy([lookup, key_of](const Vector& x) {
    const auto it = lookup->find(key_of(x));
    if (it == lookup->end())
      throw std::out_of_range("oracle policy: features not among the records it was built on");
    return it->second;
  });
  return result;
}

}  // namespace kips::opt
