#pragma once

#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "kips/harness/csv.hpp"
#include "kips/math.hpp"
#include "kips/optimize/dsl.hpp"
#include "kips/optimize/mlp.hpp"
#include "kips/optimize/pto.hpp"
#include "kips/simenv/covariates.hpp"

namespace kips::harness {

inline constexpr int kArtifactVersion = 1;

// Portable text format for fitted policies: `key = value` metadata followed
// by named matrix blocks, one row per line. The metadata always includes the
// covariate standardization constants the encoder applied, so a consumer can
// reproduce the feature mapping.
namespace detail {

inline void write_matrix(std::ostream& out, const std::string& name, const Matrix& M) {
  out << "[matrix " << name << " " << M.rows() << " " << M.cols() << "]\n";
  for (Index r = 0; r < M.rows(); ++r) {
    for (Index c = 0; c < M.cols(); ++c) {
      if (c) out << ' ';
      out << format_double(M(r, c));
    }
    out << '\n';
  }
}

inline void write_vector(std::ostream& out, const std::string& name, const Vector& v) {
  write_matrix(out, name, Matrix(v));
}

struct ArtifactReader {
  std::map<std::string, std::string> meta;
  std::map<std::string, Matrix> matrices;

  static ArtifactReader load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("artifact: cannot open " + path);
    ArtifactReader reader;
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      if (line.front() == '[') {
        std::istringstream head(line.substr(1, line.size() - 2));
        std::string tag, name;
        Index rows = 0, cols = 0;
        head >> tag >> name >> rows >> cols;
        if (tag != "matrix" || rows < 0 || cols < 0)
          throw std::runtime_error("artifact: malformed block header: " + line);
        Matrix M(rows, cols);
        for (Index r = 0; r < rows; ++r) {
          if (!std::getline(in, line))
            throw std::runtime_error("artifact: truncated matrix " + name);
          std::istringstream row(line);
          for (Index c = 0; c < cols; ++c) {
            if (!(row >> M(r, c)))
              throw std::runtime_error("artifact: malformed matrix row in " + name);
          }
        }
        reader.matrices[name] = std::move(M);
      } else {
        const auto eq = line.find('=');
        if (eq == std::string::npos)
          throw std::runtime_error("artifact: malformed line: " + line);
        auto trim = [](std::string s) {
          const auto b = s.find_first_not_of(" \t");
          const auto e = s.find_last_not_of(" \t\r");
          return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        reader.meta[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
      }
    }
    return reader;
  }

  const std::string& meta_at(const std::string& key) const {
    const auto it = meta.find(key);
    if (it == meta.end()) throw std::runtime_error("artifact: missing metadata '" + key + "'");
    return it->second;
  }

  const Matrix& matrix_at(const std::string& name) const {
    const auto it = matrices.find(name);
    if (it == matrices.end()) throw std::runtime_error("artifact: missing matrix '" + name + "'");
    return it->second;
  }
};

inline void write_common_header(std::ostream& out, const std::string& type,
                                const ActionSpace& evaluation) {
  out << "artifact_version = " << kArtifactVersion << "\n";
  out << "type = " << type << "\n";
  std::ostringstream levels;
  for (Index k = 0; k < evaluation.size(); ++k) {
    if (k) levels << ",";
    levels << format_double(evaluation.level(k));
  }
  out << "evaluation_actions = " << levels.str() << "\n";
  const auto& s = simenv::standardizer();
  out << "encoder_numeric_means = " << format_double(s.ticket_mean) << ","
      << format_double(s.lead_mean) << "," << format_double(s.pax_mean) << ","
      << format_double(s.duration_mean) << "\n";
  out << "encoder_numeric_sds = " << format_double(s.ticket_sd) << ","
      << format_double(s.lead_sd) << "," << format_double(s.pax_sd) << ","
      << format_double(s.duration_sd) << "\n";
}

inline ActionSpace read_actions(const ArtifactReader& reader) {
  std::vector<double> levels;
  std::istringstream in(reader.meta_at("evaluation_actions"));
  std::string item;
  while (std::getline(in, item, ',')) levels.push_back(std::stod(item));
  return ActionSpace(levels);
}

}  // namespace detail

inline void save_dsl_artifact(const opt::DslModel& model, const ActionSpace& evaluation,
                              const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("artifact: cannot write " + path);
  detail::write_common_header(out, "dsl", evaluation);
  out << "tau = " << format_double(model.tau) << "\n";
  detail::write_vector(out, "gamma", model.gamma);
  detail::write_vector(out, "feature_mean", model.feature_mean);
  detail::write_vector(out, "feature_scale", model.feature_scale);
  detail::write_vector(out, "w0", model.w0);
  Matrix W(model.w0.size(), model.m());
  for (Index a = 0; a < model.m(); ++a) W.col(a) = model.w_action[static_cast<std::size_t>(a)];
  detail::write_matrix(out, "w_action", W);
}

struct DslArtifact {
  opt::DslModel model;
  ActionSpace evaluation{{0.0}};
};

inline DslArtifact load_dsl_artifact(const std::string& path) {
  const auto reader = detail::ArtifactReader::load(path);
  if (reader.meta_at("type") != "dsl") throw std::runtime_error("artifact: not a dsl artifact");
  DslArtifact art;
  art.evaluation = detail::read_actions(reader);
  art.model.tau = std::stod(reader.meta_at("tau"));
  art.model.gamma = reader.matrix_at("gamma").col(0);
  art.model.feature_mean = reader.matrix_at("feature_mean").col(0);
  art.model.feature_scale = reader.matrix_at("feature_scale").col(0);
  art.model.w0 = reader.matrix_at("w0").col(0);
  const Matrix& W = reader.matrix_at("w_action");
  art.model.w_action.resize(static_cast<std::size_t>(W.cols()));
  for (Index a = 0; a < W.cols(); ++a) art.model.w_action[static_cast<std::size_t>(a)] = W.col(a);
  return art;
}

inline void save_mlp_artifact(const opt::MlpPolicy& policy, const ActionSpace& evaluation,
                              const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("artifact: cannot write " + path);
  detail::write_common_header(out, "mlp", evaluation);
  out << "layers = " << policy.layers() << "\n";
  for (std::size_t l = 0; l < policy.layers(); ++l) {
    detail::write_matrix(out, "W" + std::to_string(l), policy.weights()[l]);
    detail::write_vector(out, "b" + std::to_string(l), policy.biases()[l]);
  }
}

struct MlpArtifact {
  opt::MlpPolicy policy{1, {}, 1, 0};
  ActionSpace evaluation{{0.0}};
};

inline MlpArtifact load_mlp_artifact(const std::string& path) {
  const auto reader = detail::ArtifactReader::load(path);
  if (reader.meta_at("type") != "mlp") throw std::runtime_error("artifact: not an mlp artifact");
  const std::size_t layers = std::stoul(reader.meta_at("layers"));
  if (layers == 0) throw std::runtime_error("artifact: mlp needs at least one layer");
  std::vector<Index> hidden;
  const Matrix& W0 = reader.matrix_at("W0");
  for (std::size_t l = 0; l + 1 < layers; ++l)
    hidden.push_back(reader.matrix_at("W" + std::to_string(l)).rows());
  const Index out_dim = reader.matrix_at("W" + std::to_string(layers - 1)).rows();

  MlpArtifact art;
  art.evaluation = detail::read_actions(reader);
  art.policy = opt::MlpPolicy(W0.cols(), hidden, out_dim, 0);
  for (std::size_t l = 0; l < layers; ++l) {
    art.policy.mutable_weights()[l] = reader.matrix_at("W" + std::to_string(l));
    art.policy.mutable_biases()[l] = reader.matrix_at("b" + std::to_string(l)).col(0);
  }
  return art;
}

inline void save_pto_artifact(const opt::PtoModel& model, const ActionSpace& evaluation,
                              const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("artifact: cannot write " + path);
  detail::write_common_header(out, "pto", evaluation);
  detail::write_vector(out, "phi1", model.phi1);
  detail::write_vector(out, "phi2", model.phi2);
  detail::write_vector(out, "phi3", model.phi3);
}

struct PtoArtifact {
  opt::PtoModel model;
  ActionSpace evaluation{{0.0}};
};

inline PtoArtifact load_pto_artifact(const std::string& path) {
  const auto reader = detail::ArtifactReader::load(path);
  if (reader.meta_at("type") != "pto") throw std::runtime_error("artifact: not a pto artifact");
  PtoArtifact art;
  art.evaluation = detail::read_actions(reader);
  art.model.phi1 = reader.matrix_at("phi1").col(0);
  art.model.phi2 = reader.matrix_at("phi2").col(0);
  art.model.phi3 = reader.matrix_at("phi3").col(0);
  return art;
}

}  // namespace kips::harness
