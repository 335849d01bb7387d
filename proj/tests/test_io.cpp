#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>

#include "sgno/config.hpp"
#include "sgno/errors.hpp"
#include "sgno/io.hpp"
#include "sgno/report.hpp"
#include "support.hpp"

using namespace sgno;
namespace fs = std::filesystem;

namespace {

class TempDir : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("sgno_io_" + std::to_string(::getpid()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  fs::path dir_;
};

bool same_params(const SgnoParams& a, const SgnoParams& b) {
  std::vector<std::vector<double>> va, vb;
  a.visit([&](const std::string&, const std::vector<std::size_t>&, std::span<const double> d) {
    va.emplace_back(d.begin(), d.end());
  });
  b.visit([&](const std::string&, const std::vector<std::size_t>&, std::span<const double> d) {
    vb.emplace_back(d.begin(), d.end());
  });
  return va == vb;
}

}  // namespace

using TrajectoryFiles = TempDir;
using CheckpointFiles = TempDir;
using ConfigFiles = TempDir;

TEST_F(TrajectoryFiles, RoundTripIsBitIdentical) {
  const TrajectorySet set = generate_trajectories(make_scenario("aniso_diffusion2d"), 3, Split::test, 2);
  save_trajectories(set, dir_ / "test.bin");
  EXPECT_TRUE(fs::exists(dir_ / "test.json"));
  const TrajectorySet back = load_trajectories(dir_ / "test.bin");
  EXPECT_EQ(back.data(), set.data());
  EXPECT_EQ(back.shape(), set.shape());
  EXPECT_EQ(back.meta().grid, set.meta().grid);
  EXPECT_EQ(back.meta().scenario, "aniso_diffusion2d");
  EXPECT_EQ(back.meta().split, "test");
  EXPECT_EQ(back.meta().seed, 3u);
  EXPECT_EQ(back.meta().dt, set.meta().dt);

  save_trajectories(set, dir_ / "again.bin");
  EXPECT_EQ(read_file(dir_ / "test.bin"), read_file(dir_ / "again.bin"));
}

TEST_F(TrajectoryFiles, DetectsTruncationAndMissingFiles) {
  const TrajectorySet set = generate_trajectories(make_scenario("diffusion1d"), 0, Split::train, 1);
  save_trajectories(set, dir_ / "train.bin");
  const std::string bytes = read_file(dir_ / "train.bin");
  atomic_write(dir_ / "train.bin", std::string_view(bytes).substr(0, bytes.size() - 4));
  EXPECT_THROW(load_trajectories(dir_ / "train.bin"), FormatError);
  EXPECT_THROW(load_trajectories(dir_ / "nothing.bin"), FormatError);
}

TEST_F(TrajectoryFiles, EmptySet) {
  const TrajectorySet set = generate_trajectories(make_scenario("diffusion1d"), 0, Split::train, 0);
  save_trajectories(set, dir_ / "train.bin");
  const TrajectorySet back = load_trajectories(dir_ / "train.bin");
  EXPECT_EQ(back.num_trajectories(), 0);
  EXPECT_EQ(back.meta().scenario, "diffusion1d");
}

TEST_F(CheckpointFiles, RoundTripIsBitIdentical) {
  SgnoConfig c = SgnoConfig::defaults_for_dimension(2);
  c.use_beta = true;
  c.mixing_norm_cap = 2.0;
  c.width = 6;
  c.dt_data = 0.001;
  const SgnoModel m = SgnoModel::initialize(c, GridSpec({32, 32}), 5);
  save_checkpoint(dir_ / "model.ckpt", m, 5, 123);
  const Checkpoint back = load_checkpoint(dir_ / "model.ckpt");
  EXPECT_EQ(back.seed, 5u);
  EXPECT_EQ(back.step, 123);
  EXPECT_EQ(back.model.config(), c);
  EXPECT_EQ(back.model.grid(), m.grid());
  EXPECT_TRUE(same_params(back.model.params(), m.params()));
  save_checkpoint(dir_ / "again.ckpt", back.model, 5, 123);
  EXPECT_EQ(read_file(dir_ / "model.ckpt"), read_file(dir_ / "again.ckpt"));
}

TEST_F(CheckpointFiles, RejectsCorruptFiles) {
  atomic_write(dir_ / "junk.ckpt", "not a checkpoint at all");
  EXPECT_THROW(load_checkpoint(dir_ / "junk.ckpt"), FormatError);
  const SgnoModel m = SgnoModel::initialize(SgnoConfig::defaults_for_dimension(1), GridSpec({64}), 1);
  save_checkpoint(dir_ / "model.ckpt", m, 1, 0);
  const std::string bytes = read_file(dir_ / "model.ckpt");
  atomic_write(dir_ / "cut.ckpt", std::string_view(bytes).substr(0, bytes.size() / 2));
  EXPECT_THROW(load_checkpoint(dir_ / "cut.ckpt"), FormatError);
}

TEST_F(ConfigFiles, ResolveRoundTripIsStable) {
  const RunConfig a = resolve_config(std::nullopt, {{"data.scenario", "ks1d"}, {"model.alpha_w", "0"},
                                                    {"model.mixing_norm_cap", "1.5"}, {"train.grad_clip", "3"}},
                                     false);
  EXPECT_EQ(a.model.dt_data, 0.2);
  EXPECT_EQ(a.model.alpha_w, 0.0);
  atomic_write(dir_ / "run.ini", to_ini(a));
  const RunConfig b = resolve_config(dir_ / "run.ini", {}, false);
  EXPECT_EQ(a, b);
  EXPECT_EQ(to_ini(a), to_ini(b));
  for (const auto& key : config_keys()) EXPECT_EQ(config_value(a, key), config_value(b, key)) << key;
}

TEST_F(ConfigFiles, LayeringOrder) {
  atomic_write(dir_ / "run.ini", "[data]\nscenario = dispersion1d\n[train]\ntotal_steps = 10\nwarmup_steps = 2\n");
  ::setenv("SGNO_TRAIN_TOTAL_STEPS", "20", 1);
  const RunConfig env = resolve_config(dir_ / "run.ini", {}, true);
  EXPECT_EQ(env.train.total_steps, 20);
  EXPECT_EQ(env.model.dt_data, 0.5);
  const RunConfig flag = resolve_config(dir_ / "run.ini", {{"train.total_steps", "30"}}, true);
  EXPECT_EQ(flag.train.total_steps, 30);
  ::unsetenv("SGNO_TRAIN_TOTAL_STEPS");
  EXPECT_EQ(resolve_config(dir_ / "run.ini", {}, true).train.total_steps, 10);
}

TEST_F(ConfigFiles, Errors) {
  atomic_write(dir_ / "bad.ini", "[model]\nwidht = 3\n");
  EXPECT_THROW(resolve_config(dir_ / "bad.ini", {}, false), ConfigError);
  EXPECT_THROW(resolve_config(std::nullopt, {{"model.width", "three"}}, false), ConfigError);
  EXPECT_THROW(resolve_config(std::nullopt, {{"data.scenario", "nope"}}, false), ConfigError);
  EXPECT_THROW(resolve_config(std::nullopt, {{"eval.reduction", "max"}}, false), ConfigError);
  EXPECT_THROW(resolve_config(dir_ / "missing.ini", {}, false), ConfigError);
}

TEST(ConfigJson, ModelConfigRoundTrip) {
  SgnoConfig c = SgnoConfig::defaults_for_dimension(3);
  c.filter = {FilterKind::smooth, 0.5, 4};
  c.mask_placement = MaskPlacement::all;
  EXPECT_EQ(sgno_config_from_json(to_json(c)), c);
  EXPECT_EQ(grid_from_json(to_json(GridSpec({8, 10}))), GridSpec({8, 10}));
  EXPECT_THROW(sgno_config_from_json(nlohmann::json{{"width", "x"}}), FormatError);
}

TEST(Report, NonFiniteValuesSerializeAsStrings) {
  RolloutReport r;
  r.nrmse = RowMatrix::Constant(1, 2, std::numeric_limits<double>::infinity());
  r.per_step = {1.0, std::numeric_limits<double>::infinity()};
  r.gmean = {std::numeric_limits<double>::infinity(), true, 2};
  r.stable_step = {1};
  const auto j = to_json(r);
  EXPECT_NO_THROW(j.dump());
  EXPECT_TRUE(j.at("gmean").is_string());
  EXPECT_TRUE(j.at("gmean_diverged").get<bool>());
}
