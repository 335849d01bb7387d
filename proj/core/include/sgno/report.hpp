#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sgno/evaluation.hpp"

namespace sgno {

inline constexpr const char* kToolVersion = "0.1.0";

nlohmann::json to_json(const RolloutReport& report);
nlohmann::json to_json(const SeedSummary& summary);
/// Per-step nRMSE matrix: one row per trajectory, columns t = 1..frames.
std::string nrmse_csv(const RolloutReport& report);

/// Median curve with a p10-p90 band against rollout step.
std::string error_band_svg(const std::vector<double>& median, const std::vector<double>& p10,
                           const std::vector<double>& p90, const std::string& title, int stride = 1);
/// Step plot of the empirical CDF of stable steps.
std::string stable_cdf_svg(const std::vector<CdfPoint>& cdf, int horizon, const std::string& title);

struct RunManifest {
  std::string command;
  nlohmann::json config;
  nlohmann::json seeds;
  std::vector<std::string> artifacts;
  std::size_t parameter_count = 0;
  bool deterministic = true;
  std::string started;
  std::string finished;
  nlohmann::json extra = nlohmann::json::object();
};

std::string utc_timestamp();
nlohmann::json platform_fingerprint();
nlohmann::json to_json(const RunManifest& manifest);
/// Appends one JSON line to `path` (manifests are append-only).
void append_manifest(const std::filesystem::path& path, const RunManifest& manifest);

}  // namespace sgno
