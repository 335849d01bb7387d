#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "sgno/config.hpp"

namespace sgno::cli {

/// Flags shared by every subcommand; each set flag becomes a config override.
struct CommonOptions {
  std::string config_file;
  std::string out = "runs/default";
  std::vector<std::string> set;  // raw "section.key=value"
  Overrides flags;
};

struct GenDataOptions {
  int num_train = -1;
  int num_test = -1;
};

struct TrainOptions {
  std::string data;
};

struct RolloutOptions {
  std::string checkpoint;
  std::string data;
  std::string hires;  // optional higher-resolution test set for the shift protocol
};

struct VerifyOptions {
  std::string checkpoint;
  std::string data;
  int pairs = 1000;
  int probes = 1000;
  int recursion_trajectories = 3;
  int recursion_steps = 50;
  bool strict = false;
};

struct AblateOptions {
  int seeds = 3;
};

struct BenchOptions {
  int n = 160;
  int batch = 20;
  int calls = 100;
  int warmup = 10;
  int train_steps = 20;
};

RunConfig resolve(const CommonOptions& common);

int cmd_gen_data(const CommonOptions& common, const GenDataOptions& opts);
int cmd_train(const CommonOptions& common, const TrainOptions& opts);
int cmd_rollout(const CommonOptions& common, const RolloutOptions& opts);
int cmd_verify(const CommonOptions& common, const VerifyOptions& opts);
int cmd_ablate(const CommonOptions& common, const AblateOptions& opts);
int cmd_bench(const CommonOptions& common, const BenchOptions& opts);

}  // namespace sgno::cli
