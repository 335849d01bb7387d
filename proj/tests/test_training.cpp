#include <gtest/gtest.h>

#include <cmath>

#include "sgno/errors.hpp"
#include "sgno/training.hpp"
#include "support.hpp"

using namespace sgno;

namespace {

TrajectorySet synthetic(int num, int steps, std::uint64_t seed) {
  TrajectoryMeta meta;
  meta.scenario = "synthetic";
  meta.grid = GridSpec({16});
  TrajectorySet set(meta, num, steps, 1);
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> normal(0.0f, 1.0f);
  for (float& x : set.data()) x = normal(rng);
  return set;
}

SgnoConfig small_config() {
  SgnoConfig c = SgnoConfig::defaults_for_dimension(1);
  c.width = 6;
  c.modes_per_axis = {6};
  c.dt_data = 0.1;
  return c;
}

}  // namespace

TEST(Pairs, Counting) {
  EXPECT_EQ(make_pairs(synthetic(1, 3, 0)).size(), 2u);
  EXPECT_EQ(make_pairs(synthetic(10, 51, 0)).size(), 500u);
  EXPECT_EQ(make_pairs(synthetic(10, 51, 0), 8, 2).size(), 100u);
  EXPECT_EQ(make_pairs(synthetic(10, 51, 0), 8, 2).front().trajectory, 8);
}

TEST(Pairs, ShuffleIsDeterministic) {
  auto a = make_pairs(synthetic(4, 20, 0));
  auto b = a;
  auto c = a;
  shuffle_pairs(a, 3, 1);
  shuffle_pairs(b, 3, 1);
  shuffle_pairs(c, 3, 2);
  auto same = [](const auto& x, const auto& y) {
    for (std::size_t i = 0; i < x.size(); ++i)
      if (x[i].trajectory != y[i].trajectory || x[i].time != y[i].time) return false;
    return true;
  };
  EXPECT_TRUE(same(a, b));
  EXPECT_FALSE(same(a, c));
}

TEST(Loss, Mse) {
  const RowMatrix t = RowMatrix::Random(2, 16);
  EXPECT_EQ(mse_loss(t, t), 0.0);
  EXPECT_DOUBLE_EQ(mse_loss(t.array() + 1.0, t), 1.0);
}

TEST(Schedule, WarmupCosine) {
  TrainConfig c;
  EXPECT_EQ(lr_schedule(c, 0), 0.0);
  EXPECT_DOUBLE_EQ(lr_schedule(c, 200), 5e-4);
  EXPECT_DOUBLE_EQ(lr_schedule(c, 400), 1e-3);
  EXPECT_NEAR(lr_schedule(c, 1200), 5e-4, 1e-18);
  EXPECT_NEAR(lr_schedule(c, 2000), 0.0, 1e-18);
  c.min_lr = 1e-5;
  EXPECT_NEAR(lr_schedule(c, 2000), 1e-5, 1e-18);
}

TEST(TrainConfigTest, Validation) {
  TrainConfig c;
  c.warmup_steps = 2000;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.batch_size = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.grad_clip = -1.0;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Train, ZeroStepsReturnsInitialization) {
  const TrajectorySet data = synthetic(4, 5, 1);
  const SgnoModel init = SgnoModel::initialize(small_config(), data.meta().grid, 2);
  TrainConfig c;
  c.total_steps = 0;
  c.warmup_steps = 0;
  long hooked = -1;
  const TrainResult r = train(init, data, c, [&](const SgnoModel&, long step) { hooked = step; });
  EXPECT_EQ(hooked, 0);
  EXPECT_EQ(r.model.params().mixing.real, init.params().mixing.real);
  EXPECT_EQ(r.model.params().proj.second.weight, init.params().proj.second.weight);
  EXPECT_TRUE(r.log.empty());
}

TEST(Train, LossFiniteAndDecreasing) {
  // Learn the map u -> 0.9 u on random data.
  TrajectorySet data = synthetic(6, 6, 3);
  for (int i = 0; i < data.num_trajectories(); ++i)
    for (int t = 1; t < data.steps(); ++t) data.set_frame(i, t, 0.9 * data.frame(i, t - 1));
  TrainConfig c;
  c.total_steps = 60;
  c.warmup_steps = 10;
  c.log_every = 10;
  c.batch_size = 8;
  c.checkpoint_every = 20;
  std::vector<long> hooks;
  const TrainResult r = train(SgnoModel::initialize(small_config(), data.meta().grid, 4), data, c,
                              [&](const SgnoModel& m, long step) {
                                hooks.push_back(step);
                                EXPECT_LE(m.max_real_lambda(), 0.0);
                              });
  EXPECT_EQ(hooks, (std::vector<long>{20, 40, 60}));
  ASSERT_FALSE(r.log.empty());
  for (const auto& row : r.log) {
    EXPECT_TRUE(std::isfinite(row.loss));
    EXPECT_GE(row.loss, 0.0);
    EXPECT_LE(row.max_re_lambda, 0.0);
  }
  EXPECT_LT(r.log.back().loss, r.log.front().loss);
  EXPECT_TRUE(std::isfinite(r.validation_loss));
  EXPECT_EQ(training_log_csv(r.log).substr(0, 34), "step,loss,lr,grad_norm,max_re_lamb");
}

TEST(Train, SameSeedSameResult) {
  const TrajectorySet data = synthetic(4, 6, 5);
  TrainConfig c;
  c.total_steps = 10;
  c.warmup_steps = 2;
  c.batch_size = 4;
  const auto init = SgnoModel::initialize(small_config(), data.meta().grid, 6);
  const TrainResult a = train(init, data, c);
  const TrainResult b = train(init, data, c);
  EXPECT_EQ(a.model.params().lift.first.weight, b.model.params().lift.first.weight);
  EXPECT_EQ(a.final_train_loss, b.final_train_loss);
}

TEST(Train, NonFiniteDataAborts) {
  TrajectorySet data = synthetic(3, 4, 7);
  for (float& x : data.data()) x *= 1e30f;
  data.data()[3] = std::numeric_limits<float>::infinity();
  TrainConfig c;
  c.total_steps = 5;
  c.warmup_steps = 1;
  c.validation_trajectories = 0;
  try {
    train(SgnoModel::initialize(small_config(), data.meta().grid, 1), data, c);
    FAIL();
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("step 0"), std::string::npos) << e.what();
  }
}

TEST(Adam, FirstStepMovesByLearningRate) {
  const SgnoModel m = SgnoModel::initialize(small_config(), GridSpec({16}), 1);
  SgnoParams p = m.params();
  SgnoParams g = p.zeros_like();
  g.generator.eta.setConstant(3.0);
  Adam adam(p, 0.9, 0.999, 1e-12, 0.0);
  const RowMatrix before = p.generator.eta;
  adam.step(p, g, 0.01);
  EXPECT_NEAR((before - p.generator.eta).maxCoeff(), 0.01, 1e-10);
  EXPECT_EQ(p.mixing.real, m.params().mixing.real);
  EXPECT_EQ(adam.iterations(), 1);
}
