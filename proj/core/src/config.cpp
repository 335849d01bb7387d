#include "sgno/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

#include "sgno/errors.hpp"
#include "sgno/scenario.hpp"

extern char** environ;

namespace sgno {

namespace {

std::string fmt(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

std::string trim(std::string s) {
  auto ws = [](unsigned char c) { return std::isspace(c) != 0; };
  s.erase(s.begin(), std::find_if_not(s.begin(), s.end(), ws));
  s.erase(std::find_if_not(s.rbegin(), s.rend(), ws).base(), s.end());
  return s;
}

double to_double(const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  double x = 0.0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), x);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
    throw ConfigError(key + ": expected a number, got '" + raw + "'");
  }
  return x;
}

long to_long(const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  long x = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), x);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
    throw ConfigError(key + ": expected an integer, got '" + raw + "'");
  }
  return x;
}

int to_int(const std::string& key, const std::string& raw) { return static_cast<int>(to_long(key, raw)); }

std::uint64_t to_u64(const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  std::uint64_t x = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), x);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
    throw ConfigError(key + ": expected a nonnegative integer, got '" + raw + "'");
  }
  return x;
}

bool to_bool(const std::string& key, const std::string& raw) {
  std::string v = trim(raw);
  std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::tolower(c); });
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError(key + ": expected a boolean, got '" + raw + "'");
}

std::optional<double> to_opt_double(const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  if (v.empty() || v == "none") return std::nullopt;
  return to_double(key, v);
}

std::string fmt_opt(const std::optional<double>& x) { return x ? fmt(*x) : "none"; }

std::vector<int> to_int_list(const std::string& key, const std::string& raw) {
  std::vector<int> out;
  std::stringstream ss(raw);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(to_int(key, item));
  if (out.empty()) throw ConfigError(key + ": empty list");
  return out;
}

std::string fmt_list(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

std::string fmt_bool(bool b) { return b ? "true" : "false"; }

struct Field {
  std::string key;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

#define SGNO_DOUBLE(name, member)                                                         \
  Field {                                                                                 \
    name, [](const RunConfig& c) { return fmt(c.member); },                               \
        [](RunConfig& c, const std::string& v) { c.member = to_double(name, v); }         \
  }
#define SGNO_INT(name, member)                                                            \
  Field {                                                                                 \
    name, [](const RunConfig& c) { return std::to_string(c.member); },                    \
        [](RunConfig& c, const std::string& v) { c.member = to_int(name, v); }            \
  }
#define SGNO_LONG(name, member)                                                           \
  Field {                                                                                 \
    name, [](const RunConfig& c) { return std::to_string(c.member); },                    \
        [](RunConfig& c, const std::string& v) { c.member = to_long(name, v); }           \
  }
#define SGNO_U64(name, member)                                                            \
  Field {                                                                                 \
    name, [](const RunConfig& c) { return std::to_string(c.member); },                    \
        [](RunConfig& c, const std::string& v) { c.member = to_u64(name, v); }            \
  }
#define SGNO_BOOL(name, member)                                                           \
  Field {                                                                                 \
    name, [](const RunConfig& c) { return fmt_bool(c.member); },                          \
        [](RunConfig& c, const std::string& v) { c.member = to_bool(name, v); }           \
  }
#define SGNO_OPT(name, member)                                                            \
  Field {                                                                                 \
    name, [](const RunConfig& c) { return fmt_opt(c.member); },                           \
        [](RunConfig& c, const std::string& v) { c.member = to_opt_double(name, v); }     \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      Field{"data.scenario", [](const RunConfig& c) { return c.data.scenario; },
            [](RunConfig& c, const std::string& v) { c.data.scenario = trim(v); }},
      SGNO_U64("data.seed", data.seed),
      SGNO_INT("data.num_train", data.num_train),
      SGNO_INT("data.num_test", data.num_test),

      SGNO_INT("model.width", model.width),
      Field{"model.modes", [](const RunConfig& c) { return fmt_list(c.model.modes_per_axis); },
            [](RunConfig& c, const std::string& v) { c.model.modes_per_axis = to_int_list("model.modes", v); }},
      SGNO_INT("model.blocks", model.num_blocks),
      SGNO_DOUBLE("model.dt_data", model.dt_data),
      SGNO_DOUBLE("model.alpha_g", model.alpha_g),
      SGNO_DOUBLE("model.alpha_w", model.alpha_w),
      Field{"model.filter", [](const RunConfig& c) { return to_string(c.model.filter.kind); },
            [](RunConfig& c, const std::string& v) { c.model.filter.kind = filter_kind_from_string(trim(v)); }},
      SGNO_DOUBLE("model.filter_strength", model.filter.strength),
      SGNO_INT("model.filter_order", model.filter.order),
      Field{"model.mask_placement", [](const RunConfig& c) { return to_string(c.model.mask_placement); },
            [](RunConfig& c, const std::string& v) { c.model.mask_placement = mask_placement_from_string(trim(v)); }},
      Field{"model.sigma", [](const RunConfig& c) { return to_string(c.model.sigma); },
            [](RunConfig& c, const std::string& v) { c.model.sigma = activation_from_string(trim(v)); }},
      SGNO_INT("model.history", model.history),
      SGNO_INT("model.padding", model.padding),
      SGNO_INT("model.hidden", model.hidden),
      SGNO_BOOL("model.use_beta", model.use_beta),
      SGNO_DOUBLE("model.lambda_margin", model.lambda_margin),
      SGNO_OPT("model.mixing_norm_cap", model.mixing_norm_cap),
      SGNO_INT("model.state_channels", model.state_channels),
      SGNO_INT("model.initial_step", model.initial_step),
      SGNO_INT("model.inner_steps", model.inner_steps),

      SGNO_DOUBLE("train.base_lr", train.base_lr),
      SGNO_LONG("train.warmup_steps", train.warmup_steps),
      SGNO_LONG("train.total_steps", train.total_steps),
      SGNO_DOUBLE("train.min_lr", train.min_lr),
      SGNO_DOUBLE("train.weight_decay", train.weight_decay),
      SGNO_INT("train.batch_size", train.batch_size),
      SGNO_U64("train.seed", train.seed),
      SGNO_LONG("train.checkpoint_every", train.checkpoint_every),
      SGNO_LONG("train.log_every", train.log_every),
      SGNO_DOUBLE("train.adam_beta1", train.adam_beta1),
      SGNO_DOUBLE("train.adam_beta2", train.adam_beta2),
      SGNO_DOUBLE("train.adam_eps", train.adam_eps),
      SGNO_OPT("train.grad_clip", train.grad_clip),
      SGNO_INT("train.validation_trajectories", train.validation_trajectories),

      SGNO_INT("eval.t_eval", eval.t_eval),
      SGNO_INT("eval.gmean_horizon", eval.gmean_horizon),
      SGNO_DOUBLE("eval.tau", eval.tau),
      SGNO_INT("eval.stride", eval.stride),
      Field{"eval.reduction", [](const RunConfig& c) { return c.eval.reduction; },
            [](RunConfig& c, const std::string& v) { c.eval.reduction = trim(v); }},
  };
  return table;
}

#undef SGNO_DOUBLE
#undef SGNO_INT
#undef SGNO_LONG
#undef SGNO_U64
#undef SGNO_BOOL
#undef SGNO_OPT

const Field& find_field(const std::string& key) {
  for (const auto& f : fields()) {
    if (f.key == key) return f;
  }
  throw ConfigError("unknown configuration key '" + key + "'");
}

}  // namespace

void RunConfig::validate() const {
  model.validate();
  train.validate();
  eval.validate();
  if (data.scenario.empty()) throw ConfigError("data.scenario is empty");
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& f : fields()) keys.push_back(f.key);
  return keys;
}

void apply_override(RunConfig& config, const std::string& key, const std::string& value) {
  find_field(key).set(config, value);
}

std::string config_value(const RunConfig& config, const std::string& key) { return find_field(key).get(config); }

Overrides parse_ini(const std::string& text) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  Overrides out;
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) {
      throw ConfigError("config key '" + section + "' outside of a section");
    }
    for (const auto& [key, value] : body) {
      const std::string full = section + "." + key;
      find_field(full);
      out.emplace_back(full, value.data());
    }
  }
  return out;
}

std::string to_ini(const RunConfig& config) {
  std::ostringstream os;
  std::string section;
  for (const auto& f : fields()) {
    const auto dot = f.key.find('.');
    const std::string s = f.key.substr(0, dot);
    if (s != section) {
      if (!section.empty()) os << '\n';
      os << '[' << s << "]\n";
      section = s;
    }
    os << f.key.substr(dot + 1) << " = " << f.get(config) << '\n';
  }
  return os.str();
}

Overrides env_overrides() {
  Overrides out;
  for (const auto& key : config_keys()) {
    std::string name = "SGNO_" + key;
    std::transform(name.begin(), name.end(), name.begin(), [](unsigned char c) {
      return c == '.' ? '_' : static_cast<char>(std::toupper(c));
    });
    if (const char* v = std::getenv(name.c_str())) out.emplace_back(key, v);
  }
  return out;
}

RunConfig resolve_config(const std::optional<std::filesystem::path>& file, const Overrides& flags, bool use_env) {
  Overrides layers;
  if (file) {
    std::ifstream in(*file);
    if (!in) throw ConfigError("cannot open config file " + file->string());
    std::stringstream ss;
    ss << in.rdbuf();
    layers = parse_ini(ss.str());
  }
  if (use_env) {
    const auto env = env_overrides();
    layers.insert(layers.end(), env.begin(), env.end());
  }
  layers.insert(layers.end(), flags.begin(), flags.end());

  RunConfig config;
  for (const auto& [k, v] : layers) {
    if (k == "data.scenario") config.data.scenario = trim(v);
  }
  const Scenario scenario = make_scenario(config.data.scenario);
  config.model = SgnoConfig::defaults_for_dimension(scenario.grid.dim());
  config.model.dt_data = scenario.dt;
  config.model.state_channels = scenario.state_channels;
  for (const auto& [k, v] : layers) apply_override(config, k, v);
  config.validate();
  return config;
}

nlohmann::json to_json(const GridSpec& grid) { return nlohmann::json(grid.n); }

GridSpec grid_from_json(const nlohmann::json& j) {
  GridSpec g(j.get<std::vector<int>>());
  g.validate();
  return g;
}

nlohmann::json to_json(const SgnoConfig& c) {
  nlohmann::json j;
  j["width"] = c.width;
  j["modes"] = c.modes_per_axis;
  j["blocks"] = c.num_blocks;
  j["dt_data"] = c.dt_data;
  j["alpha_g"] = c.alpha_g;
  j["alpha_w"] = c.alpha_w;
  j["filter"] = to_string(c.filter.kind);
  j["filter_strength"] = c.filter.strength;
  j["filter_order"] = c.filter.order;
  j["mask_placement"] = to_string(c.mask_placement);
  j["sigma"] = to_string(c.sigma);
  j["history"] = c.history;
  j["padding"] = c.padding;
  j["hidden"] = c.hidden;
  j["use_beta"] = c.use_beta;
  j["lambda_margin"] = c.lambda_margin;
  j["mixing_norm_cap"] = c.mixing_norm_cap ? nlohmann::json(*c.mixing_norm_cap) : nlohmann::json(nullptr);
  j["state_channels"] = c.state_channels;
  j["initial_step"] = c.initial_step;
  j["inner_steps"] = c.inner_steps;
  return j;
}

SgnoConfig sgno_config_from_json(const nlohmann::json& j) {
  try {
    SgnoConfig c;
    c.width = j.at("width").get<int>();
    c.modes_per_axis = j.at("modes").get<std::vector<int>>();
    c.num_blocks = j.at("blocks").get<int>();
    c.dt_data = j.at("dt_data").get<double>();
    c.alpha_g = j.at("alpha_g").get<double>();
    c.alpha_w = j.at("alpha_w").get<double>();
    c.filter.kind = filter_kind_from_string(j.at("filter").get<std::string>());
    c.filter.strength = j.at("filter_strength").get<double>();
    c.filter.order = j.at("filter_order").get<int>();
    c.mask_placement = mask_placement_from_string(j.at("mask_placement").get<std::string>());
    c.sigma = activation_from_string(j.at("sigma").get<std::string>());
    c.history = j.at("history").get<int>();
    c.padding = j.at("padding").get<int>();
    c.hidden = j.at("hidden").get<int>();
    c.use_beta = j.at("use_beta").get<bool>();
    c.lambda_margin = j.at("lambda_margin").get<double>();
    if (!j.at("mixing_norm_cap").is_null()) c.mixing_norm_cap = j.at("mixing_norm_cap").get<double>();
    c.state_channels = j.at("state_channels").get<int>();
    c.initial_step = j.at("initial_step").get<int>();
    c.inner_steps = j.at("inner_steps").get<int>();
    c.validate();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("model config: ") + e.what());
  }
}

nlohmann::json to_json(const RunConfig& config) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& f : fields()) {
    const auto dot = f.key.find('.');
    j[f.key.substr(0, dot)][f.key.substr(dot + 1)] = f.get(config);
  }
  return j;
}

}  // namespace sgno
