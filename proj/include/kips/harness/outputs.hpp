#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "kips/harness/config.hpp"
#include "kips/harness/csv.hpp"
#include "kips/harness/experiments.hpp"
#include "kips/harness/manifest.hpp"
#include "kips/harness/svg.hpp"

namespace kips::harness {

namespace detail {

inline std::string series_color(std::size_t i) {
  static const char* palette[] = {"#3366cc", "#dc3912", "#109618", "#ff9900",
                                  "#990099", "#0099c6", "#dd4477", "#66aa00"};
  return palette[i % (sizeof(palette) / sizeof(palette[0]))];
}

inline void write_plots(const ExperimentResult& result, const std::vector<SummaryRow>& summary,
                        const std::filesystem::path& dir) {
  const std::string exp = result.experiment;
  const std::string path = (dir / (exp + ".svg")).string();

  if (exp == "rmse-vs-n") {
    std::map<std::string, PlotSeries> by_method;
    std::size_t color = 0;
    for (const auto& s : summary) {
      auto& series = by_method[s.method];
      if (series.points.empty()) {
        series.label = s.method;
        series.color = series_color(color++);
      }
      series.points.emplace_back(static_cast<double>(s.n), s.rmse);
    }
    std::vector<PlotSeries> series;
    for (auto& [_, s] : by_method) series.push_back(std::move(s));
    write_xy_plot(path, series, "sample size", "RMSE", true, true);
  } else if (exp == "kernel-scatter") {
    std::map<std::size_t, std::pair<double, double>> pairs;  // rep -> (naive, optimal)
    for (const auto& row : result.rows) {
      if (row.method == "KIPS-naive") pairs[row.replication].first = row.estimate;
      if (row.method == "KIPS-optimal") pairs[row.replication].second = row.estimate;
    }
    PlotSeries s{"(naive, optimal)", detail::series_color(0), {}};
    for (const auto& [_, p] : pairs) s.points.push_back(p);
    write_xy_plot(path, {s}, "naive kernelized IPS", "variance-optimal kernelized IPS", false,
                  false, false, true);
  } else if (exp == "extrapolation") {
    PlotSeries s{"KIPS-naive", detail::series_color(0), {}};
    for (const auto& sum : summary)
      s.points.emplace_back(std::stod(sum.item.substr(2)), sum.rmse);
    std::sort(s.points.begin(), s.points.end());
    write_xy_plot(path, {s}, "constant action", "RMSE", false, false);
  } else {
    // policy-gap / estimator-bias / policy-suite: grouped bars per experiment
    std::map<std::string, std::vector<BarGroup>> per_exp;
    for (const auto& s : summary) {
      const double spread = s.count > 1 ? s.rmse : 0.0;  // dispersion of errors
      per_exp[s.experiment].push_back(BarGroup{s.method + " (" + s.item + ")", s.bias, spread});
    }
    for (const auto& [name, bars] : per_exp) {
      const std::string label =
          name == "policy-gap" ? "mean relative gap" : "mean bias";
      write_bar_plot((dir / (name + ".svg")).string(), bars, label);
    }
  }
}

}  // namespace detail

// Long-format CSV, aggregated summary CSV and a manifest; optional SVG
// renorderings of the summaries. Rerunning with the same config and seed
// reproduces the files byte for byte.
inline void emit_outputs(const ExperimentResult& result, const std::string& output_dir,
                         const Config& config, std::uint64_t master_seed,
                         bool with_plots = false) {
  namespace fs = std::filesystem;
  const fs::path dir(output_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("emit_outputs: cannot create " + output_dir);

  CsvWriter long_csv({"experiment", "replication", "n", "method", "item", "estimate", "truth",
                      "error"});
  for (const auto& row : result.rows) {
    long_csv.add_row({row.experiment, std::to_string(row.replication), std::to_string(row.n),
                      row.method, row.item, format_double(row.estimate),
                      format_double(row.truth), format_double(row.error)});
  }
  long_csv.save((dir / (result.experiment + "_long.csv")).string());

  const auto summary = summarize(result);
  CsvWriter summary_csv({"experiment", "method", "item", "n", "count", "mean_estimate",
                         "mean_truth", "bias", "rmse", "sd_estimate"});
  for (const auto& s : summary) {
    summary_csv.add_row({s.experiment, s.method, s.item, std::to_string(s.n),
                         std::to_string(s.count), format_double(s.mean_estimate),
                         format_double(s.mean_truth), format_double(s.bias),
                         format_double(s.rmse), format_double(s.sd_estimate)});
  }
  summary_csv.save((dir / (result.experiment + "_summary.csv")).string());

  write_manifest((dir / "manifest.txt").string(), config, master_seed);
  if (with_plots) detail::write_plots(result, summary, dir);
}

}  // namespace kips::harness
