#pragma once

// Experiment driver: configuration model, validation and the subcommands
// sample | analyze | quadrature | certify | verdict | report.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace rigidlab::cli {

inline constexpr int kConfigSchema = 1;
inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitModule = 3;

struct FieldError {
  std::string field;
  std::string message;
};

/// Invalid configuration; carries one message per offending field.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<FieldError> fields);
  ConfigError(std::string field, std::string message);
  const std::vector<FieldError>& fields() const noexcept { return fields_; }

 private:
  std::vector<FieldError> fields_;
};

struct ModelBlock {
  std::string name;
  nlohmann::json params = nlohmann::json::object();
};

struct SamplerBlock {
  double box = 32.0;  // side L
  std::uint64_t replicas = 100;
  std::uint64_t seed = 0;
};

struct LinearStatBlock {
  double K = 4.0;
  double R = 4.0;
};

struct EstimatorBlock {
  std::vector<double> radii{2.0, 4.0, 8.0};
  double bin_width = 0.1;
  double r_max = 4.0;
  bool jitter = true;
  std::uint64_t bootstrap = 200;
  std::optional<LinearStatBlock> linear_statistic;
};

struct QuadratureBlock {
  double grid_delta = 0.0;  // 0 selects the default grid
  double truncation = 0.0;  // near-field radius; 0 selects the default
  std::vector<double> K{4.0};
  std::vector<double> R{4.0, 8.0, 16.0};
};

struct CertifyBlock {
  std::vector<double> epsilon{0.1};
};

struct ExperimentConfig {
  ModelBlock model;
  SamplerBlock sampler;
  EstimatorBlock estimator;
  QuadratureBlock quadrature;
  CertifyBlock certify;
  std::string output = "rigidlab_out";

  /// Parses and validates; throws ConfigError listing every bad field.
  static ExperimentConfig from_json(const nlohmann::json& j);
  /// Complete document with every default spelled out.
  nlohmann::json to_json() const;
  int dim() const;
};

/// 64-bit FNV-1a of the canonical JSON text, as 16 hex digits.
std::string config_hash(const nlohmann::json& canonical);

/// Entry point of the rigidlab binary. Never throws.
int main(int argc, const char* const* argv);

}  // namespace rigidlab::cli
