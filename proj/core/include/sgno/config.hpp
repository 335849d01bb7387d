#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "sgno/evaluation.hpp"
#include "sgno/model.hpp"
#include "sgno/training.hpp"

namespace sgno {

struct DataConfig {
  std::string scenario = "diffusion1d";
  std::uint64_t seed = 0;
  int num_train = -1;  // -1: scenario default
  int num_test = -1;

  bool operator==(const DataConfig&) const = default;
};

/// Fully resolved run configuration, one INI section per member.
struct RunConfig {
  DataConfig data;
  SgnoConfig model;
  TrainConfig train;
  EvalConfig eval;

  void validate() const;
  bool operator==(const RunConfig&) const = default;
};

/// "section.key" = value pairs applied on top of a configuration.
using Overrides = std::vector<std::pair<std::string, std::string>>;

/// Known "section.key" names, in serialization order.
std::vector<std::string> config_keys();
void apply_override(RunConfig& config, const std::string& key, const std::string& value);
std::string config_value(const RunConfig& config, const std::string& key);

/// Overrides parsed from INI text. Unknown sections or keys throw ConfigError.
Overrides parse_ini(const std::string& text);
std::string to_ini(const RunConfig& config);

/// SGNO_<SECTION>_<KEY> environment variables, e.g. SGNO_TRAIN_TOTAL_STEPS.
Overrides env_overrides();

/// Layers built-in defaults, per-dimension model defaults for the selected
/// scenario (with dt_data set to the scenario step), the user file, the
/// environment, then `flags`.
RunConfig resolve_config(const std::optional<std::filesystem::path>& file, const Overrides& flags,
                         bool use_env = true);

nlohmann::json to_json(const GridSpec& grid);
GridSpec grid_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SgnoConfig& config);
SgnoConfig sgno_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RunConfig& config);

}  // namespace sgno
