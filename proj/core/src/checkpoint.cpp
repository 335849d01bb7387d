#include <bit>
#include <cstring>

#include <nlohmann/json.hpp>

#include "sgno/config.hpp"
#include "sgno/errors.hpp"
#include "sgno/io.hpp"

namespace sgno {

namespace {

constexpr char kMagic[8] = {'S', 'G', 'N', 'O', 'C', 'K', 'P', 'T'};

std::uint64_t swap64(std::uint64_t x) {
  std::uint64_t r = 0;
  for (int i = 0; i < 8; ++i) r |= ((x >> (8 * i)) & 0xffu) << (8 * (7 - i));
  return r;
}

std::uint64_t to_little(std::uint64_t x) {
  if constexpr (std::endian::native == std::endian::little) return x;
  return swap64(x);
}

void append_u64(std::string& out, std::uint64_t x) {
  x = to_little(x);
  out.append(reinterpret_cast<const char*>(&x), 8);
}

std::uint64_t read_u64(const std::string& in, std::size_t at) {
  std::uint64_t x;
  std::memcpy(&x, in.data() + at, 8);
  return to_little(x);
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const SgnoModel& model, std::uint64_t seed, long step) {
  nlohmann::json header;
  header["format_version"] = kCheckpointFormatVersion;
  header["config"] = to_json(model.config());
  header["grid"] = to_json(model.grid());
  header["seed"] = seed;
  header["step"] = step;
  nlohmann::json arrays = nlohmann::json::array();
  std::string payload;
  model.params().visit([&](const std::string& name, const std::vector<std::size_t>& shape,
                           std::span<const double> data) {
    arrays.push_back({{"name", name}, {"shape", shape}, {"offset", payload.size()}, {"count", data.size()}});
    for (double v : data) append_u64(payload, std::bit_cast<std::uint64_t>(v));
  });
  header["arrays"] = arrays;
  const std::string text = header.dump();

  std::string bytes(kMagic, sizeof kMagic);
  append_u64(bytes, text.size());
  bytes += text;
  bytes += payload;
  atomic_write(path, bytes);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) {
    throw FormatError(path.string() + " is not a checkpoint file");
  }
  const std::uint64_t header_len = read_u64(bytes, 8);
  if (header_len > bytes.size() - 16) throw FormatError(path.string() + ": truncated header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(16, header_len));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": bad checkpoint header: " + e.what());
  }
  const std::size_t base = 16 + header_len;
  try {
    const int version = header.at("format_version").get<int>();
    if (version != kCheckpointFormatVersion) {
      throw FormatError(path.string() + ": unsupported checkpoint version " + std::to_string(version));
    }
    Checkpoint ck{SgnoModel(sgno_config_from_json(header.at("config")), grid_from_json(header.at("grid"))),
                  header.at("seed").get<std::uint64_t>(), header.at("step").get<long>()};
    const auto& arrays = header.at("arrays");
    std::size_t index = 0;
    ck.model.params().visit([&](const std::string& name, const std::vector<std::size_t>& shape,
                                std::span<double> data) {
      if (index >= arrays.size()) throw FormatError(path.string() + ": missing array " + name);
      const auto& a = arrays[index++];
      if (a.at("name").get<std::string>() != name || a.at("shape").get<std::vector<std::size_t>>() != shape) {
        throw FormatError(path.string() + ": array table does not match the configuration at " + name);
      }
      const std::size_t offset = a.at("offset").get<std::size_t>();
      if (base + offset + 8 * data.size() > bytes.size()) throw FormatError(path.string() + ": truncated data");
      for (std::size_t i = 0; i < data.size(); ++i) {
        data[i] = std::bit_cast<double>(read_u64(bytes, base + offset + 8 * i));
      }
    });
    if (index != arrays.size()) throw FormatError(path.string() + ": unexpected extra arrays");
    return ck;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": bad checkpoint header: " + e.what());
  }
}

}  // namespace sgno
