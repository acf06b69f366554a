#ifndef TTSHS_CONFIG_HPP
#define TTSHS_CONFIG_HPP

#include <cstdint>
#include <string>

#include "ttshs/model.hpp"
#include "ttshs/simulator.hpp"

namespace ttshs {

struct RunSettings {
  double t_end = 10.0;
  int grid_points = 101;
  long long paths = 10'000;
  std::uint64_t seed = 1;
  std::string out;  // empty = stdout
  std::string format = "csv";
  std::string sampler = "gaussian";
  int threads = 0;

  ResetSampler sampler_kind() const;
};

struct RunConfig {
  TTSHSModel model;
  RunSettings run;
};

/// Parses and dimension-checks a JSON config. Unknown keys are rejected
/// with the offending name; matrices are row-major nested arrays. Throws
/// ParseError / SchemaError. Does not run model validation.
RunConfig load_config_raw(const std::string& path);

/// load_config_raw plus validate_model; invalid models raise
/// ValidationError with the first violation code.
RunConfig load_config(const std::string& path);

/// Serializes back to the schema accepted by load_config; doubles
/// round-trip exactly.
std::string save_config(const RunConfig& config);

RunConfig parse_config_text(const std::string& text);

}  // namespace ttshs

#endif  // TTSHS_CONFIG_HPP
