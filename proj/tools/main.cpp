#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"
#include "commands.hpp"
#include "sgno/errors.hpp"

namespace {

constexpr int kUsageError = 1;
constexpr int kNumericError = 2;

// Raw flag values; empty means "not given".
struct FlagValues {
  std::string seed, scenario, steps, tau, stride, alpha_g, alpha_w, filter, blocks;
  bool use_beta = false;
};

void add_common(CLI::App* sub, sgno::cli::CommonOptions& common, FlagValues& f) {
  sub->add_option("--config", common.config_file, "INI configuration file")->check(CLI::ExistingFile);
  sub->add_option("--out", common.out, "output directory")->capture_default_str();
  sub->add_option("--seed", f.seed, "data and training seed");
  sub->add_option("--scenario", f.scenario, "scenario name");
  sub->add_option("--task", f.scenario, "alias of --scenario");
  sub->add_option("--steps", f.steps, "training steps (train, ablate) or rollout horizon (rollout)");
  sub->add_option("--tau", f.tau, "stable-step threshold (0.2; 1.0 for stress tests)");
  sub->add_option("--stride", f.stride, "model steps per compared frame");
  sub->add_option("--alpha-g", f.alpha_g, "forcing gain");
  sub->add_option("--alpha-w", f.alpha_w, "pointwise correction gain");
  sub->add_flag("--use-beta", f.use_beta, "learn imaginary generator parts");
  sub->add_option("--filter", f.filter, "forcing mask: none or smooth");
  sub->add_option("--blocks", f.blocks, "time-advance blocks per data step");
  sub->add_option("--set", common.set, "override any key, e.g. --set train.batch_size=10");
}

void collect(sgno::cli::CommonOptions& common, const FlagValues& f, const std::string& steps_key) {
  auto put = [&](const std::string& key, const std::string& v) {
    if (!v.empty()) common.flags.emplace_back(key, v);
  };
  put("data.scenario", f.scenario);
  put("data.seed", f.seed);
  put("train.seed", f.seed);
  put(steps_key, f.steps);
  // Keep the default warmup fraction of one fifth when only the length changes.
  if (steps_key == "train.total_steps" && !f.steps.empty()) put("train.warmup_steps", std::to_string(std::stol(f.steps) / 5));
  put("eval.tau", f.tau);
  put("eval.stride", f.stride);
  put("model.alpha_g", f.alpha_g);
  put("model.alpha_w", f.alpha_w);
  if (f.use_beta) put("model.use_beta", "true");
  put("model.filter", f.filter);
  put("model.blocks", f.blocks);
  for (const auto& kv : common.set) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw sgno::ConfigError("--set expects key=value, got '" + kv + "'");
    common.flags.emplace_back(kv.substr(0, eq), kv.substr(eq + 1));
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectral generator neural operator: data, training, rollout evaluation and bound checks"};
  app.require_subcommand(1);

  std::map<std::string, sgno::cli::CommonOptions> common;
  std::map<std::string, FlagValues> flags;
  auto sub = [&](const std::string& name, const std::string& help) {
    CLI::App* s = app.add_subcommand(name, help);
    add_common(s, common[name], flags[name]);
    return s;
  };

  sgno::cli::GenDataOptions gen;
  auto* gen_cmd = sub("gen-data", "generate train/test trajectories for a scenario");
  gen_cmd->add_option("--num-train", gen.num_train, "training trajectories (default from scenario)");
  gen_cmd->add_option("--num-test", gen.num_test, "test trajectories (default from scenario)");

  sgno::cli::TrainOptions train;
  auto* train_cmd = sub("train", "one-step teacher-forced training");
  train_cmd->add_option("--data", train.data, "directory with train.bin (default <out>/data)");

  sgno::cli::RolloutOptions roll;
  auto* roll_cmd = sub("rollout", "autoregressive rollout metrics and plots");
  roll_cmd->add_option("--checkpoint", roll.checkpoint, "checkpoint file (default <out>/model.ckpt)");
  roll_cmd->add_option("--data", roll.data, "directory with test.bin (default <out>/data)");
  roll_cmd->add_option("--hires", roll.hires, "directory with a higher-resolution test.bin, downsampled spectrally");

  sgno::cli::VerifyOptions verify;
  auto* verify_cmd = sub("verify", "estimate stability constants and check the bounds");
  verify_cmd->add_option("--checkpoint", verify.checkpoint, "checkpoint file (default <out>/model.ckpt)");
  verify_cmd->add_option("--data", verify.data, "directory with train.bin and test.bin (default <out>/data)");
  verify_cmd->add_option("--pairs", verify.pairs, "probe pairs for the gain check")->capture_default_str();
  verify_cmd->add_option("--probes", verify.probes, "random spectra for the operator bounds")->capture_default_str();
  verify_cmd->add_option("--recursion-steps", verify.recursion_steps, "rollout steps in the recursion check")
      ->capture_default_str();
  verify_cmd->add_flag("--strict", verify.strict, "exit with status 2 when a verdict fails");

  sgno::cli::AblateOptions ablate;
  auto* ablate_cmd = sub("ablate", "full vs alpha_w = 0 vs alpha_g = 0 comparison");
  ablate_cmd->add_option("--seeds", ablate.seeds, "training seeds per variant")->capture_default_str();

  sgno::cli::BenchOptions bench;
  auto* bench_cmd = sub("bench", "parameter count, inference latency, training throughput");
  bench_cmd->add_option("--n", bench.n, "grid points")->capture_default_str();
  bench_cmd->add_option("--batch", bench.batch, "batch size")->capture_default_str();
  bench_cmd->add_option("--calls", bench.calls, "timed calls")->capture_default_str();
  bench_cmd->add_option("--warmup", bench.warmup, "warmup calls")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsageError;
  }

  try {
    const std::string name = app.get_subcommands().front()->get_name();
    auto& c = common[name];
    collect(c, flags[name], name == "rollout" ? "eval.t_eval" : "train.total_steps");
    if (name == "gen-data") return sgno::cli::cmd_gen_data(c, gen);
    if (name == "train") return sgno::cli::cmd_train(c, train);
    if (name == "rollout") return sgno::cli::cmd_rollout(c, roll);
    if (name == "verify") return sgno::cli::cmd_verify(c, verify);
    if (name == "ablate") return sgno::cli::cmd_ablate(c, ablate);
    if (name == "bench") return sgno::cli::cmd_bench(c, bench);
  } catch (const sgno::NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return kNumericError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsageError;
  }
  return kUsageError;
}
