#include "commands.hpp"

#include <sys/resource.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>

#include "sgno/errors.hpp"
#include "sgno/evaluation.hpp"
#include "sgno/io.hpp"
#include "sgno/report.hpp"
#include "sgno/scenario.hpp"
#include "sgno/theory.hpp"
#include "sgno/training.hpp"

namespace fs = std::filesystem;

namespace sgno::cli {

namespace {

using Clock = std::chrono::steady_clock;

fs::path data_dir(const CommonOptions& common, const std::string& given) {
  return given.empty() ? fs::path(common.out) / "data" : fs::path(given);
}

fs::path checkpoint_path(const CommonOptions& common, const std::string& given) {
  return given.empty() ? fs::path(common.out) / "model.ckpt" : fs::path(given);
}

void require_file(const fs::path& p, const std::string& what, const std::string& hint) {
  if (!fs::exists(p)) throw ConfigError(what + " not found at " + p.string() + " (" + hint + ")");
}

TrajectorySet load_split(const fs::path& dir, const std::string& split) {
  const fs::path bin = dir / (split + ".bin");
  require_file(bin, split + " data", "run `sgno gen-data --out " + dir.string() + "` or pass --data");
  return load_trajectories(bin);
}

Checkpoint load_model(const fs::path& path) {
  require_file(path, "checkpoint", "run `sgno train` first or pass --checkpoint");
  return load_checkpoint(path);
}

void write_text(const fs::path& path, const std::string& text, RunManifest& manifest) {
  atomic_write(path, text);
  manifest.artifacts.push_back(path.string());
}

RunManifest start_manifest(const std::string& command, const RunConfig& config) {
  RunManifest m;
  m.command = command;
  m.config = to_json(config);
  m.seeds = {{"data", config.data.seed}, {"train", config.train.seed}};
  m.started = utc_timestamp();
  m.parameter_count = count_parameters(config.model, make_scenario(config.data.scenario).grid.dim()).total();
  return m;
}

void finish_manifest(const CommonOptions& common, RunManifest& m) {
  m.finished = utc_timestamp();
  append_manifest(fs::path(common.out) / "manifest.jsonl", m);
}

std::string fmt(double x, int precision = 4) {
  if (!std::isfinite(x)) return x > 0 ? "inf" : "nan";
  std::ostringstream os;
  os << std::setprecision(precision) << x;
  return os.str();
}

}  // namespace

RunConfig resolve(const CommonOptions& common) {
  std::optional<fs::path> file;
  if (!common.config_file.empty()) file = common.config_file;
  return resolve_config(file, common.flags);
}

int cmd_gen_data(const CommonOptions& common, const GenDataOptions& opts) {
  RunConfig config = resolve(common);
  if (opts.num_train >= 0) config.data.num_train = opts.num_train;
  if (opts.num_test >= 0) config.data.num_test = opts.num_test;
  const Scenario scenario = make_scenario(config.data.scenario);
  RunManifest manifest = start_manifest("gen-data", config);

  if (config.data.num_train == 0) std::cerr << "warning: --num-train 0 produces an empty training set\n";
  const TrajectorySet train = generate_trajectories(scenario, config.data.seed, Split::train, config.data.num_train);
  const TrajectorySet test = generate_trajectories(scenario, config.data.seed, Split::test, config.data.num_test);

  const fs::path out(common.out);
  save_trajectories(train, out / "train.bin");
  save_trajectories(test, out / "test.bin");
  manifest.artifacts = {(out / "train.bin").string(), sidecar_path(out / "train.bin").string(),
                        (out / "test.bin").string(), sidecar_path(out / "test.bin").string()};
  nlohmann::json meta;
  meta["scenario"] = scenario.name;
  meta["description"] = scenario.description;
  meta["seed"] = config.data.seed;
  meta["train"] = {{"file", "train.bin"}, {"shape", train.shape()}};
  meta["test"] = {{"file", "test.bin"}, {"shape", test.shape()}};
  write_text(out / "meta.json", meta.dump(2) + "\n", manifest);

  auto shape = [](const std::vector<std::size_t>& s) {
    std::string r;
    for (std::size_t i = 0; i < s.size(); ++i) r += (i ? "x" : "") + std::to_string(s[i]);
    return r;
  };
  std::cout << scenario.name << ": " << train.num_trajectories() << " train trajectories [" << shape(train.shape())
            << "], " << test.num_trajectories() << " test trajectories [" << shape(test.shape()) << "] -> "
            << out.string() << '\n';
  finish_manifest(common, manifest);
  return 0;
}

int cmd_train(const CommonOptions& common, const TrainOptions& opts) {
  const RunConfig config = resolve(common);
  const TrajectorySet data = load_split(data_dir(common, opts.data), "train");
  if (data.meta().scenario != config.data.scenario) {
    throw ConfigError("training data was generated for '" + data.meta().scenario + "' but the configuration selects '" +
                      config.data.scenario + "'");
  }
  data.check_finite();
  RunManifest manifest = start_manifest("train", config);
  const fs::path out(common.out);

  SgnoModel model = SgnoModel::initialize(config.model, data.meta().grid, config.train.seed);
  const auto hook = [&](const SgnoModel& m, long step) {
    const fs::path p = step == config.train.total_steps
                           ? out / "model.ckpt"
                           : out / "checkpoints" / ("step_" + std::to_string(step) + ".ckpt");
    save_checkpoint(p, m, config.train.seed, step);
    manifest.artifacts.push_back(p.string());
  };
  const TrainResult result = train(std::move(model), data, config.train, hook);

  write_text(out / "train_log.csv", training_log_csv(result.log), manifest);
  write_text(out / "config.ini", to_ini(config), manifest);
  nlohmann::json summary;
  summary["final_train_loss"] = result.final_train_loss;
  summary["validation_loss"] = std::isfinite(result.validation_loss) ? nlohmann::json(result.validation_loss)
                                                                     : nlohmann::json(nullptr);
  summary["seconds"] = result.seconds;
  summary["steps"] = config.train.total_steps;
  summary["max_re_lambda"] = result.model.max_real_lambda();
  summary["grad_clip"] = config.train.grad_clip ? nlohmann::json(*config.train.grad_clip) : nlohmann::json(nullptr);
  write_text(out / "train_summary.json", summary.dump(2) + "\n", manifest);
  manifest.extra = summary;

  std::cout << "trained " << config.train.total_steps << " steps in " << fmt(result.seconds, 3) << " s, final loss "
            << fmt(result.final_train_loss) << ", validation loss " << fmt(result.validation_loss)
            << ", max Re(lambda) " << fmt(result.model.max_real_lambda()) << ", " << manifest.parameter_count
            << " parameters\n";
  finish_manifest(common, manifest);
  return 0;
}

int cmd_rollout(const CommonOptions& common, const RolloutOptions& opts) {
  const RunConfig config = resolve(common);
  const Checkpoint ck = load_model(checkpoint_path(common, opts.checkpoint));
  TrajectorySet test;
  if (opts.hires.empty()) {
    test = load_split(data_dir(common, opts.data), "test");
  } else {
    test = downsample_set(load_split(fs::path(opts.hires), "test"), ck.model.grid());
  }
  if (!(test.meta().grid == ck.model.grid())) {
    throw DimensionError("test grid " + test.meta().grid.to_string() + " does not match the model grid " +
                         ck.model.grid().to_string() + "; use --hires for a finer test set");
  }
  RunManifest manifest = start_manifest("rollout", config);
  const fs::path out(common.out);

  const RolloutReport model_report = evaluate(as_map(ck.model), test, config.eval, ck.seed);
  const RolloutReport base_report = evaluate(persistence_map(), test, config.eval, ck.seed);
  const SeedSummary summary = aggregate_seeds({model_report});

  nlohmann::json j;
  j["model"] = to_json(model_report);
  j["persistence"] = to_json(base_report);
  j["summary"] = to_json(summary);
  j["resolution_shift"] = !opts.hires.empty();
  write_text(out / "rollout.json", j.dump(2) + "\n", manifest);
  write_text(out / "nrmse.csv", nrmse_csv(model_report), manifest);
  write_text(out / "error_band.svg",
             error_band_svg(summary.band_median, summary.band_p10, summary.band_p90,
                            test.meta().scenario + ": per-step nRMSE", model_report.stride),
             manifest);
  write_text(out / "stable_cdf.svg",
             stable_cdf_svg(summary.stable_cdf, model_report.frames,
                            test.meta().scenario + ": stable step CDF (tau = " + fmt(config.eval.tau) + ")"),
             manifest);

  std::cout << "GMean" << model_report.gmean.horizon << " (" << model_report.reduction << ", stride "
            << model_report.stride << ", " << model_report.frames << " frames): model " << fmt(model_report.gmean.value)
            << (model_report.gmean.diverged ? " [diverged]" : "") << ", persistence " << fmt(base_report.gmean.value)
            << "\nstable step (tau = " << fmt(config.eval.tau) << "): median " << fmt(summary.stable_median) << ", IQR ["
            << fmt(summary.stable_q25) << ", " << fmt(summary.stable_q75) << "]\n";
  finish_manifest(common, manifest);
  return 0;
}

int cmd_verify(const CommonOptions& common, const VerifyOptions& opts) {
  const RunConfig config = resolve(common);
  const Checkpoint ck = load_model(checkpoint_path(common, opts.checkpoint));
  const fs::path dir = data_dir(common, opts.data);
  const TrajectorySet train = load_split(dir, "train");
  const TrajectorySet test = load_split(dir, "test");
  RunManifest manifest = start_manifest("verify", config);
  const SgnoModel& model = ck.model;
  const std::uint64_t seed = config.train.seed;

  BoundReport report;
  const SampleSet samples = build_sample_set(model, train, 100, seed);
  report.estimates = estimate_constants(model, samples, seed);
  report.q_dt = compute_q(report.estimates, model.config().internal_dt());
  report.q_dt_pow_L = std::pow(report.q_dt, model.config().num_blocks);
  report.q_data = compute_q_data(report.estimates, model.config().dt_data, model.config().num_blocks);
  report.gain = check_one_step_bound(model, report.estimates, samples, opts.pairs, seed + 1);
  report.lemma = check_lemma_a1(model.stabilized_lambda(), model.config().internal_dt(), opts.probes, seed + 2);
  const int steps = std::min(opts.recursion_steps, test.steps() - 1);
  for (int i = 0; i < std::min(opts.recursion_trajectories, test.num_trajectories()); ++i) {
    report.recursion.push_back(check_error_recursion(as_map(model), report.q_data, test, i, steps));
  }
  report.refinement = substep_refinement(report.estimates, model.config().dt_data);

  const fs::path out(common.out);
  write_text(out / "bounds.json", to_json(report).dump(2) + "\n", manifest);
  std::cout << summary_table(report);
  bool ok = report.gain.passed && report.lemma.passed;
  for (const auto& r : report.recursion) ok = ok && r.passed;
  finish_manifest(common, manifest);
  return (opts.strict && !ok) ? 2 : 0;
}

int cmd_ablate(const CommonOptions& common, const AblateOptions& opts) {
  const RunConfig config = resolve(common);
  const Scenario scenario = make_scenario(config.data.scenario);
  RunManifest manifest = start_manifest("ablate", config);
  const TrajectorySet train_set =
      generate_trajectories(scenario, config.data.seed, Split::train, config.data.num_train);
  const TrajectorySet test_set = generate_trajectories(scenario, config.data.seed, Split::test, config.data.num_test);

  struct Variant {
    std::string name;
    double alpha_g;
    double alpha_w;
  };
  const std::vector<Variant> variants = {{"full", config.model.alpha_g, config.model.alpha_w},
                                         {"alpha_w=0", config.model.alpha_g, 0.0},
                                         {"alpha_g=0", 0.0, config.model.alpha_w}};
  nlohmann::json j;
  j["task"] = scenario.name;
  j["reduction"] = config.eval.reduction;
  std::vector<double> medians;
  std::ostringstream csv;
  csv << "variant,seed,gmean\n";
  for (const auto& v : variants) {
    std::vector<double> values;
    for (int s = 0; s < opts.seeds; ++s) {
      SgnoConfig mc = config.model;
      mc.alpha_g = v.alpha_g;
      mc.alpha_w = v.alpha_w;
      TrainConfig tc = config.train;
      tc.seed = config.train.seed + static_cast<std::uint64_t>(s);
      const TrainResult r = train(SgnoModel::initialize(mc, scenario.grid, tc.seed), train_set, tc);
      const RolloutReport rep = evaluate(as_map(r.model), test_set, config.eval, tc.seed);
      values.push_back(rep.gmean.value);
      csv << v.name << ',' << tc.seed << ',' << rep.gmean.value << '\n';
      std::cerr << v.name << " seed " << tc.seed << ": GMean" << rep.gmean.horizon << " " << fmt(rep.gmean.value)
                << '\n';
    }
    medians.push_back(median(values));
    j["variants"][v.name] = {{"alpha_g", v.alpha_g}, {"alpha_w", v.alpha_w}, {"gmeans", values},
                             {"median", medians.back()}};
  }
  const fs::path out(common.out);
  write_text(out / "ablation.json", j.dump(2) + "\n", manifest);
  write_text(out / "ablation.csv", csv.str(), manifest);

  std::cout << std::left << std::setw(14) << "Task" << std::setw(12) << "full" << std::setw(12) << "alpha_w=0"
            << std::setw(12) << "alpha_g=0" << '\n'
            << std::setw(14) << scenario.name << std::setw(12) << fmt(medians[0]) << std::setw(12) << fmt(medians[1])
            << std::setw(12) << fmt(medians[2]) << '\n';
  finish_manifest(common, manifest);
  return 0;
}

int cmd_bench(const CommonOptions& common, const BenchOptions& opts) {
  const RunConfig config = resolve(common);
  if (opts.calls < 100 || opts.warmup < 10) throw ConfigError("bench needs at least 100 calls after 10 warmup calls");
  RunManifest manifest = start_manifest("bench", config);
  manifest.deterministic = false;

  const GridSpec grid({opts.n});
  SgnoConfig mc = SgnoConfig::defaults_for_dimension(1);
  mc.dt_data = config.model.dt_data;
  const SgnoModel model = SgnoModel::initialize(mc, grid, config.train.seed);
  const std::size_t params = model.params().size();
  manifest.parameter_count = params;

  // Random unit-RMS batch; latency does not depend on the parameter values.
  TrajectoryMeta meta;
  meta.scenario = "bench";
  meta.grid = grid;
  TrajectorySet batch(meta, opts.batch, 2, 1);
  std::mt19937_64 rng(config.train.seed);
  std::normal_distribution<float> normal(0.0f, 1.0f);
  for (float& x : batch.data()) x = normal(rng);

  auto infer = [&] {
    for (int b = 0; b < opts.batch; ++b) {
      const RowMatrix y = model.one_step(batch.frame(b, 0));
      if (!y.allFinite()) throw NumericError("bench: non-finite output");
    }
  };
  for (int i = 0; i < opts.warmup; ++i) infer();
  std::vector<double> ms;
  for (int i = 0; i < opts.calls; ++i) {
    const auto t0 = Clock::now();
    infer();
    ms.push_back(std::chrono::duration<double, std::milli>(Clock::now() - t0).count());
  }
  const double latency = median(ms);

  SgnoModel trainee = model;
  const auto pairs = make_pairs(batch);
  Adam adam(trainee.params(), 0.9, 0.999, 1e-8, 0.0);
  SgnoParams grad = trainee.params().zeros_like();
  const auto t0 = Clock::now();
  for (int s = 0; s < opts.train_steps; ++s) {
    batch_loss(trainee, batch, pairs, &grad);
    adam.step(trainee.params(), grad, 1e-4);
  }
  const double steps_per_s = opts.train_steps / std::chrono::duration<double>(Clock::now() - t0).count();

  rusage usage{};
  getrusage(RUSAGE_SELF, &usage);
  const double peak_mb = static_cast<double>(usage.ru_maxrss) / 1024.0;

  nlohmann::json j;
  j["deterministic"] = false;
  j["input_shape"] = {opts.batch, 1, opts.n};
  j["parameters"] = params;
  j["latency_ms_median"] = latency;
  j["latency_calls"] = opts.calls;
  j["warmup_calls"] = opts.warmup;
  j["train_steps_per_s"] = steps_per_s;
  j["peak_rss_mb"] = peak_mb;
  j["peak_rss_note"] = "process-wide ru_maxrss, platform dependent";
  j["precision"] = "float64";
  write_text(fs::path(common.out) / "bench.json", j.dump(2) + "\n", manifest);

  std::cout << std::left << std::setw(10) << "Params" << std::setw(16) << "Latency (ms)" << std::setw(16)
            << "Peak RSS (MB)" << std::setw(12) << "Train it/s" << '\n'
            << std::setw(10) << params << std::setw(16) << fmt(latency) << std::setw(16) << fmt(peak_mb)
            << std::setw(12) << fmt(steps_per_s) << '\n';
  finish_manifest(common, manifest);
  return 0;
}

}  // namespace sgno::cli
