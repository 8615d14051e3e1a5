#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>

namespace kips {

// Counter-based generator (SplitMix64 core). Each stream is a pure function
// of (key, counter), so independent streams can be derived for record
// indices, replications, or restarts and consumed in any order without
// changing the output.
class Rng {
 public:
  explicit Rng(std::uint64_t key) : key_(key), counter_(0) {}

  std::uint64_t next_u64() { return mix(key_ + (++counter_) * kGolden); }

  // Uniform on [0, 1) with 53-bit resolution.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  // Uniform integer on {lo, ..., hi} inclusive.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    if (hi < lo) throw std::invalid_argument("uniform_int: empty range");
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    // rejection sampling to remove modulo bias
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
    std::uint64_t u;
    do {
      u = next_u64();
    } while (u >= limit);
    return lo + static_cast<std::int64_t>(u % span);
  }

  bool bernoulli(double p) { return next_double() < p; }

  // Standard normal via Box-Muller.
  double normal() {
    const double u1 = 1.0 - next_double();  // (0, 1]
    const double u2 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  // Draw an index from a probability vector (assumed to sum to one).
  Eigen::Index categorical(const Eigen::VectorXd& probs) {
    const double u = next_double();
    double acc = 0.0;
    for (Eigen::Index k = 0; k < probs.size(); ++k) {
      acc += probs[k];
      if (u < acc) return k;
    }
    return probs.size() - 1;
  }

  // Derive an independent stream key, e.g. per record or per replication.
  static std::uint64_t derive(std::uint64_t key, std::uint64_t index) {
    return mix(mix(key) ^ (index * kGolden + 0x9e3779b97f4a7c15ULL));
  }

 private:
  static constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

  static std::uint64_t mix(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ULL;
    z ^= z >> 27;
    z *= 0x94d049bb133111ebULL;
    z ^= z >> 31;
    return z;
  }

  std::uint64_t key_;
  std::uint64_t counter_;
};

}  // namespace kips
