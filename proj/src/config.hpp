#pragma once

#include "tiltwork/core.hpp"

#include <optional>
#include <stdexcept>
#include <string>

namespace tiltwork::cli {

/// Config problem that names the offending field.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& message)
      : std::runtime_error("config field '" + field + "': " + message), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

struct ChannelConfig {
  MatrixXd transition;
  VectorXd input_probs;
};

struct ProblemConfig {
  std::optional<VectorXd> source_probs;
  /// Absent means: optimise Q with Blahut-Arimoto at the requested slope.
  std::optional<VectorXd> coding_probs;
  std::optional<MatrixXd> distortion;
  std::optional<MatrixXd> distortion_2;
  std::optional<MatrixXd> observable;
  std::optional<ChannelConfig> channel;
  double beta = 1;
  double k = 1;
  double temperature = 1;
};

/// Parses either a JSON document (first non-blank character '{') or the flat
/// `key = value` form, then checks dimensions and probability vectors.
ProblemConfig parse_config(const std::string& text);
ProblemConfig load_config(const std::string& path);

}  // namespace tiltwork::cli
