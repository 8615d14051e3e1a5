#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "kips/math.hpp"
#include "kips/rng.hpp"
#include "kips/simenv/params.hpp"

namespace kips::simenv {

// One policyholder as sampled from the market (supports of Table-1 style
// uniform draws).
struct RawCovariates {
  double ticket_price = 0.0;  // [100, 2000] continuous
  int lead_time = 1;          // {1..365}
  int passengers = 1;         // {1..5}
  int origin = 1;             // {1..7}
  int destination = 1;        // {1..7}
  bool return_trip = false;
  int trip_duration = 1;      // {1..30}

  void validate() const {
    if (!(ticket_price >= 100.0 && ticket_price <= 2000.0))
      throw std::invalid_argument("RawCovariates: ticket price outside [100, 2000]");
    if (lead_time < 1 || lead_time > 365) throw std::invalid_argument("RawCovariates: lead time outside {1..365}");
    if (passengers < 1 || passengers > 5) throw std::invalid_argument("RawCovariates: passengers outside {1..5}");
    if (origin < 1 || origin > 7) throw std::invalid_argument("RawCovariates: origin outside {1..7}");
    if (destination < 1 || destination > 7) throw std::invalid_argument("RawCovariates: destination outside {1..7}");
    if (trip_duration < 1 || trip_duration > 30) throw std::invalid_argument("RawCovariates: duration outside {1..30}");
  }
};

// Population standardization constants of the numeric covariates (exact
// moments of the uniform supports). The environment standardizes against the
// population, not any particular sample, so the ground truth is a fixed
// function of the raw covariates.
struct Standardizer {
  double ticket_mean = 1050.0;
  double ticket_sd = 1900.0 / 3.4641016151377544;  // (b-a)/sqrt(12)
  double lead_mean = 183.0;
  double lead_sd = 105.36603626554037;             // sqrt((365^2-1)/12)
  double pax_mean = 3.0;
  double pax_sd = 1.4142135623730951;              // sqrt((5^2-1)/12)
  double duration_mean = 15.5;
  double duration_sd = 8.655441728973092;          // sqrt((30^2-1)/12)

  double ticket(double t) const { return (t - ticket_mean) / ticket_sd; }
  double lead(int l) const { return (static_cast<double>(l) - lead_mean) / lead_sd; }
  double pax(int k) const { return (static_cast<double>(k) - pax_mean) / pax_sd; }
  double duration(int d) const { return (static_cast<double>(d) - duration_mean) / duration_sd; }
};

inline const Standardizer& standardizer() {
  static const Standardizer s;
  return s;
}

// Full encoding, length kFullDim:
//   [ticket_s, lead_s, pax_s, duration_s,
//    origin one-hot (levels 2..7), return indicator,
//    destination one-hot (levels 2..7)]
inline Vector encode_full(const RawCovariates& raw) {
  const auto& s = standardizer();
  Vector x = Vector::Zero(kFullDim);
  x[0] = s.ticket(raw.ticket_price);
  x[1] = s.lead(raw.lead_time);
  x[2] = s.pax(raw.passengers);
  x[3] = s.duration(raw.trip_duration);
  if (raw.origin > 1) x[kNumNumeric + (raw.origin - 2)] = 1.0;
  x[kNumNumeric + (kOriginLevels - 1)] = raw.return_trip ? 1.0 : 0.0;
  if (raw.destination > 1) x[kObservedDim + (raw.destination - 2)] = 1.0;
  return x;
}

// Observed encoding: the full encoding with the latent destination dropped.
inline Vector encode_observed(const RawCovariates& raw) {
  return encode_full(raw).head(kObservedDim);
}

inline RawCovariates sample_one(Rng& rng) {
  RawCovariates raw;
  raw.ticket_price = rng.uniform(100.0, 2000.0);
  raw.lead_time = static_cast<int>(rng.uniform_int(1, 365));
  raw.passengers = static_cast<int>(rng.uniform_int(1, 5));
  raw.origin = static_cast<int>(rng.uniform_int(1, 7));
  raw.destination = static_cast<int>(rng.uniform_int(1, 7));
  raw.return_trip = rng.bernoulli(0.5);
  raw.trip_duration = static_cast<int>(rng.uniform_int(1, 30));
  return raw;
}

// i.i.d. uniform draws on the Table-1 supports; record i comes from its own
// derived stream so the output is independent of evaluation order.
inline std::vector<RawCovariates> sample_covariates(const EnvironmentParams& params,
                                                    std::size_t n) {
  if (n == 0) throw std::invalid_argument("sample_covariates: n must be >= 1");
  std::vector<RawCovariates> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng(Rng::derive(params.seed, i));
    out[i] = sample_one(rng);
  }
  return out;
}

}  // namespace kips::simenv
