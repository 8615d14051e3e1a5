#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "kips/action_space.hpp"
#include "kips/math.hpp"
#include "kips/simenv/params.hpp"

namespace kips::harness {

// Flat `key = value` text config. Lists are comma separated; `#` starts a
// comment. Every file carries a `version` field.
class Config {
 public:
  Config() = default;

  static Config parse(const std::string& text) {
    Config cfg;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      const std::string trimmed = trim(line);
      if (trimmed.empty()) continue;
      const auto eq = trimmed.find('=');
      if (eq == std::string::npos)
        throw std::runtime_error("config: line " + std::to_string(line_no) +
                                 " is not of the form key = value");
      const std::string key = trim(trimmed.substr(0, eq));
      const std::string value = trim(trimmed.substr(eq + 1));
      if (key.empty())
        throw std::runtime_error("config: empty key on line " + std::to_string(line_no));
      cfg.values_[key] = value;
    }
    return cfg;
  }

  static Config load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
  }

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::string get_string(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) throw std::runtime_error("config: missing key '" + key + "'");
    return it->second;
  }

  std::string get_string(const std::string& key, const std::string& fallback) const {
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }

  double get_double(const std::string& key) const { return parse_double(key, get_string(key)); }
  double get_double(const std::string& key, double fallback) const {
    return has(key) ? get_double(key) : fallback;
  }

  std::int64_t get_int(const std::string& key) const {
    const std::string s = get_string(key);
    try {
      std::size_t used = 0;
      const std::int64_t v = std::stoll(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw std::runtime_error("config: key '" + key + "' is not an integer: " + s);
    }
  }
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const {
    return has(key) ? get_int(key) : fallback;
  }

  std::uint64_t get_u64(const std::string& key) const {
    const std::string s = get_string(key);
    try {
      std::size_t used = 0;
      const std::uint64_t v = std::stoull(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw std::runtime_error("config: key '" + key + "' is not an unsigned integer: " + s);
    }
  }
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const {
    return has(key) ? get_u64(key) : fallback;
  }

  bool get_bool(const std::string& key) const {
    const std::string s = get_string(key);
    if (s == "true" || s == "1") return true;
    if (s == "false" || s == "0") return false;
    throw std::runtime_error("config: key '" + key + "' is not a boolean: " + s);
  }
  bool get_bool(const std::string& key, bool fallback) const {
    return has(key) ? get_bool(key) : fallback;
  }

  std::vector<double> get_list(const std::string& key) const {
    const std::string s = get_string(key);
    std::vector<double> out;
    std::istringstream in(s);
    std::string item;
    while (std::getline(in, item, ',')) {
      const std::string t = trim(item);
      if (t.empty()) continue;
      out.push_back(parse_double(key, t));
    }
    if (out.empty()) throw std::runtime_error("config: key '" + key + "' has an empty list");
    return out;
  }

  void set(const std::string& key, const std::string& value) { values_[key] = value; }

  // Canonical serialization (sorted keys); also the input of the config hash.
  std::string canonical_text() const {
    std::ostringstream out;
    for (const auto& [k, v] : values_) out << k << " = " << v << "\n";
    return out.str();
  }

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  static std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
  }

  static double parse_double(const std::string& key, const std::string& s) {
    try {
      std::size_t used = 0;
      const double v = std::stod(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw std::runtime_error("config: key '" + key + "' is not a number: " + s);
    }
  }

  std::map<std::string, std::string> values_;
};

inline constexpr int kEnvConfigVersion = 1;

// Environment config schema (see README): alpha vectors, market constants,
// action grids, the h(x) switch and the seed.
struct EnvConfig {
  simenv::EnvironmentParams params = simenv::EnvironmentParams::defaults();
  ActionSpace historical{{-0.20, -0.10, 0.0, 0.10, 0.20}};
  ActionSpace evaluation{{-0.20, -0.10, 0.0, 0.10, 0.20}};

  static EnvConfig from_config(const Config& cfg) {
    EnvConfig env;
    const auto version = cfg.get_int("version");
    if (version != kEnvConfigVersion)
      throw std::runtime_error("env config: unsupported version " + std::to_string(version));
    env.params = simenv::EnvironmentParams::defaults();
    auto vec = [&](const std::string& key, Index expected) {
      const auto xs = cfg.get_list(key);
      if (static_cast<Index>(xs.size()) != expected)
        throw std::runtime_error("env config: '" + key + "' must have " +
                                 std::to_string(expected) + " entries");
      Vector v(expected);
      for (Index i = 0; i < expected; ++i) v[i] = xs[static_cast<std::size_t>(i)];
      return v;
    };
    if (cfg.has("alpha1")) env.params.alpha1 = vec("alpha1", simenv::kFullDim);
    if (cfg.has("alpha2")) env.params.alpha2 = vec("alpha2", simenv::kFullDim);
    if (cfg.has("alpha3")) env.params.alpha3 = vec("alpha3", 4);
    env.params.lambda_loading = cfg.get_double("lambda_loading", env.params.lambda_loading);
    env.params.fair_rate = cfg.get_double("fair_rate", env.params.fair_rate);
    env.params.elasticity_cap = cfg.get_double("elasticity_cap", env.params.elasticity_cap);
    env.params.higher_order_enabled =
        cfg.get_bool("higher_order_enabled", env.params.higher_order_enabled);
    env.params.seed = cfg.get_u64("seed", env.params.seed);
    if (cfg.has("historical_actions"))
      env.historical = ActionSpace(cfg.get_list("historical_actions"));
    if (cfg.has("evaluation_actions"))
      env.evaluation = ActionSpace(cfg.get_list("evaluation_actions"));
    env.params.validate();
    return env;
  }

  static EnvConfig load(const std::string& path) { return from_config(Config::load(path)); }
};

}  // namespace kips::harness
