#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "sgno/model.hpp"
#include "sgno/solver.hpp"

namespace sgno {

/// Writes to a sibling temporary file and renames it into place.
void atomic_write(const std::filesystem::path& path, std::string_view bytes);
std::string read_file(const std::filesystem::path& path);

/// Trajectory container: little-endian float32 array [traj, time, channel,
/// space...] in `bin_path`, metadata in the JSON sidecar next to it
/// (same stem, .json extension).
void save_trajectories(const TrajectorySet& set, const std::filesystem::path& bin_path);
TrajectorySet load_trajectories(const std::filesystem::path& bin_path);
std::filesystem::path sidecar_path(const std::filesystem::path& bin_path);

struct Checkpoint {
  SgnoModel model;
  std::uint64_t seed = 0;
  long step = 0;
};

/// Flat container: magic "SGNOCKPT", u64 header length, JSON header
/// {format_version, config, grid, seed, step, arrays}, then every parameter
/// tensor as little-endian float64 in header order.
void save_checkpoint(const std::filesystem::path& path, const SgnoModel& model, std::uint64_t seed,
                     long step);
Checkpoint load_checkpoint(const std::filesystem::path& path);

inline constexpr int kCheckpointFormatVersion = 1;
inline constexpr int kTrajectoryFormatVersion = 1;

}  // namespace sgno
