#include <bit>
#include <cstring>

#include <nlohmann/json.hpp>

#include "sgno/config.hpp"
#include "sgno/errors.hpp"
#include "sgno/io.hpp"

namespace sgno {

namespace {

static_assert(sizeof(float) == 4);

std::uint32_t swap32(std::uint32_t x) {
  return (x >> 24) | ((x >> 8) & 0xff00u) | ((x << 8) & 0xff0000u) | (x << 24);
}

}  // namespace

std::filesystem::path sidecar_path(const std::filesystem::path& bin_path) {
  auto p = bin_path;
  p.replace_extension(".json");
  return p;
}

void save_trajectories(const TrajectorySet& set, const std::filesystem::path& bin_path) {
  const auto& m = set.meta();
  std::string bytes(set.data().size() * sizeof(float), '\0');
  if constexpr (std::endian::native == std::endian::little) {
    std::memcpy(bytes.data(), set.data().data(), bytes.size());
  } else {
    for (std::size_t i = 0; i < set.data().size(); ++i) {
      std::uint32_t w = swap32(std::bit_cast<std::uint32_t>(set.data()[i]));
      std::memcpy(bytes.data() + 4 * i, &w, 4);
    }
  }
  nlohmann::json j;
  j["format_version"] = kTrajectoryFormatVersion;
  j["scenario"] = m.scenario;
  j["dt"] = m.dt;
  j["grid"] = to_json(m.grid);
  j["seed"] = m.seed;
  j["split"] = m.split;
  j["substeps"] = m.substeps;
  j["stepper"] = m.stepper;
  j["dealias"] = m.dealias;
  j["burn_in_steps"] = m.burn_in_steps;
  j["shape"] = set.shape();
  j["layout"] = "trajectory,time,channel,space";
  j["dtype"] = "float32";
  j["byte_order"] = "little";
  j["data_file"] = bin_path.filename().string();
  atomic_write(bin_path, bytes);
  atomic_write(sidecar_path(bin_path), j.dump(2) + "\n");
}

TrajectorySet load_trajectories(const std::filesystem::path& bin_path) {
  const auto meta_path = sidecar_path(bin_path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(meta_path));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("trajectory metadata " + meta_path.string() + ": " + e.what());
  }
  TrajectoryMeta m;
  std::vector<std::size_t> shape;
  try {
    m.format_version = j.at("format_version").get<int>();
    if (m.format_version != kTrajectoryFormatVersion) {
      throw FormatError("unsupported trajectory format version " + std::to_string(m.format_version));
    }
    if (j.at("dtype").get<std::string>() != "float32" || j.at("byte_order").get<std::string>() != "little") {
      throw FormatError("trajectory data must be little-endian float32");
    }
    m.scenario = j.at("scenario").get<std::string>();
    m.dt = j.at("dt").get<double>();
    m.grid = grid_from_json(j.at("grid"));
    m.seed = j.at("seed").get<std::uint64_t>();
    m.split = j.at("split").get<std::string>();
    m.substeps = j.at("substeps").get<int>();
    m.stepper = j.at("stepper").get<std::string>();
    m.dealias = j.at("dealias").get<bool>();
    m.burn_in_steps = j.at("burn_in_steps").get<int>();
    shape = j.at("shape").get<std::vector<std::size_t>>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("trajectory metadata " + meta_path.string() + ": " + e.what());
  }
  if (shape.size() != 3 + m.grid.n.size()) throw FormatError("trajectory shape does not match the grid");
  for (std::size_t a = 0; a < m.grid.n.size(); ++a) {
    if (shape[3 + a] != static_cast<std::size_t>(m.grid.n[a])) {
      throw FormatError("trajectory shape does not match the grid");
    }
  }
  TrajectorySet set(m, static_cast<int>(shape[0]), static_cast<int>(shape[1]), static_cast<int>(shape[2]));
  const std::string bytes = read_file(bin_path);
  if (bytes.size() != set.data().size() * sizeof(float)) {
    throw FormatError(bin_path.string() + ": expected " + std::to_string(set.data().size() * sizeof(float)) +
                      " bytes, found " + std::to_string(bytes.size()));
  }
  if constexpr (std::endian::native == std::endian::little) {
    std::memcpy(set.data().data(), bytes.data(), bytes.size());
  } else {
    for (std::size_t i = 0; i < set.data().size(); ++i) {
      std::uint32_t w;
      std::memcpy(&w, bytes.data() + 4 * i, 4);
      set.data()[i] = std::bit_cast<float>(swap32(w));
    }
  }
  return set;
}

}  // namespace sgno
