#pragma once

#include <string>
#include <vector>

#include "kips/harness/csv.hpp"
#include "kips/sample.hpp"
#include "kips/simenv/simulate.hpp"

namespace kips::harness {

// Dataset CSV schema (documented in the README): raw covariates, realized
// action, logging propensities per historical action, conversion, reward,
// true expected reward per evaluation action. Action levels are embedded in
// the column names with full precision so the file is self-describing.
inline void write_dataset_csv(const simenv::SimulationResult& sim,
                              const LearningSample& sample, const std::string& path) {
  std::vector<std::string> header{"ticket_price", "lead_time",    "passengers",
                                  "origin",       "destination",  "return_trip",
                                  "trip_duration", "action_index", "action"};
  for (Index k = 0; k < sim.historical.size(); ++k)
    header.push_back("propensity_" + format_double(sim.historical.level(k)));
  header.push_back("conversion");
  header.push_back("reward");
  for (Index k = 0; k < sim.evaluation.size(); ++k)
    header.push_back("true_reward_" + format_double(sim.evaluation.level(k)));

  CsvWriter writer(std::move(header));
  for (std::size_t i = 0; i < sim.records.size(); ++i) {
    const auto& rec = sim.records[i];
    const auto& logged = sample.record(i);
    std::vector<std::string> row;
    row.reserve(9 + static_cast<std::size_t>(sim.historical.size() + sim.evaluation.size()) + 2);
    row.push_back(format_double(rec.raw.ticket_price));
    row.push_back(std::to_string(rec.raw.lead_time));
    row.push_back(std::to_string(rec.raw.passengers));
    row.push_back(std::to_string(rec.raw.origin));
    row.push_back(std::to_string(rec.raw.destination));
    row.push_back(rec.raw.return_trip ? "1" : "0");
    row.push_back(std::to_string(rec.raw.trip_duration));
    row.push_back(std::to_string(rec.action_index));
    row.push_back(format_double(sim.historical.level(rec.action_index)));
    for (Index k = 0; k < sim.historical.size(); ++k)
      row.push_back(format_double(logged.propensities[k]));
    row.push_back(rec.conversion ? "1" : "0");
    row.push_back(format_double(rec.reward));
    for (Index k = 0; k < sim.evaluation.size(); ++k)
      row.push_back(format_double(rec.true_expected_rewards[k]));
    writer.add_row(row);
  }
  writer.save(path);
}

struct LoadedDataset {
  simenv::SimulationResult sim;
  LearningSample sample;
};

inline LoadedDataset read_dataset_csv(const std::string& path) {
  const CsvTable table = read_csv(path);

  std::vector<double> hist_levels, eval_levels;
  for (const auto& col : table.columns) {
    if (col.rfind("propensity_", 0) == 0) hist_levels.push_back(std::stod(col.substr(11)));
    if (col.rfind("true_reward_", 0) == 0) eval_levels.push_back(std::stod(col.substr(12)));
  }
  if (hist_levels.empty()) throw std::runtime_error("dataset: no propensity columns in " + path);
  if (eval_levels.empty()) throw std::runtime_error("dataset: no true_reward columns in " + path);
  ActionSpace historical{hist_levels};
  ActionSpace evaluation{eval_levels};

  const std::size_t c_ticket = table.column_index("ticket_price");
  const std::size_t c_lead = table.column_index("lead_time");
  const std::size_t c_pax = table.column_index("passengers");
  const std::size_t c_origin = table.column_index("origin");
  const std::size_t c_dest = table.column_index("destination");
  const std::size_t c_return = table.column_index("return_trip");
  const std::size_t c_duration = table.column_index("trip_duration");
  const std::size_t c_action = table.column_index("action_index");
  const std::size_t c_prop0 = table.column_index("propensity_" + format_double(hist_levels[0]));
  const std::size_t c_conversion = table.column_index("conversion");
  const std::size_t c_reward = table.column_index("reward");
  const std::size_t c_rho0 = table.column_index("true_reward_" + format_double(eval_levels[0]));

  simenv::SimulationResult sim{{}, historical, evaluation};
  std::vector<LoggedSample> logged;
  sim.records.resize(table.rows.size());
  logged.resize(table.rows.size());
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    simenv::SimulatedRecord rec;
    rec.raw.ticket_price = table.number(i, c_ticket);
    rec.raw.lead_time = static_cast<int>(table.number(i, c_lead));
    rec.raw.passengers = static_cast<int>(table.number(i, c_pax));
    rec.raw.origin = static_cast<int>(table.number(i, c_origin));
    rec.raw.destination = static_cast<int>(table.number(i, c_dest));
    rec.raw.return_trip = table.number(i, c_return) != 0.0;
    rec.raw.trip_duration = static_cast<int>(table.number(i, c_duration));
    rec.raw.validate();
    rec.encoded_full = simenv::encode_full(rec.raw);
    rec.encoded_observed = rec.encoded_full.head(simenv::kObservedDim);
    rec.action_index = static_cast<Index>(table.number(i, c_action));
    rec.conversion = table.number(i, c_conversion) != 0.0;
    rec.reward = table.number(i, c_reward);
    rec.true_expected_rewards.resize(evaluation.size());
    for (Index k = 0; k < evaluation.size(); ++k)
      rec.true_expected_rewards[k] = table.number(i, c_rho0 + static_cast<std::size_t>(k));

    LoggedSample& ls = logged[i];
    ls.features = rec.encoded_observed;
    ls.action_index = rec.action_index;
    ls.reward = rec.reward;
    ls.propensities.resize(historical.size());
    for (Index k = 0; k < historical.size(); ++k)
      ls.propensities[k] = table.number(i, c_prop0 + static_cast<std::size_t>(k));

    sim.records[i] = std::move(rec);
  }
  return LoadedDataset{std::move(sim), LearningSample(std::move(logged), historical)};
}

}  // namespace kips::harness
