#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "sgno/errors.hpp"
#include "sgno/evaluation.hpp"
#include "support.hpp"

using namespace sgno;
using sgno::testing::random_field;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

RowMatrix row(std::initializer_list<double> v) {
  RowMatrix m(1, static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) m(0, i++) = x;
  return m;
}

}  // namespace

TEST(Nrmse, Identities) {
  std::mt19937_64 rng(1);
  const RowMatrix u = random_field(1, 32, rng);
  EXPECT_EQ(nrmse_frame(u, u), 0.0);
  EXPECT_NEAR(nrmse_frame(2.0 * u, u), 1.0, 1e-12);
  const RowMatrix unit = u / u.norm();
  EXPECT_EQ(nrmse_frame(RowMatrix::Zero(1, 32), unit), 1.0 / (1.0 + kNrmseEps));
  RowMatrix bad = u;
  bad(0, 3) = kNaN;
  EXPECT_EQ(nrmse_frame(bad, u), kInf);
  EXPECT_THROW(nrmse_frame(RowMatrix::Zero(1, 31), u), DimensionError);
}

TEST(GMeanTest, Examples) {
  const std::vector<double> c(100, 0.37);
  EXPECT_NEAR(gmean100(c).value, 0.37, 1e-15);
  std::vector<double> s(50, 2.0);
  s.insert(s.end(), 50, 8.0);
  EXPECT_NEAR(gmean100(s).value, 4.0, 1e-14);
  s[10] = 0.0;
  EXPECT_TRUE(gmean100(s).diverged);
  EXPECT_EQ(gmean100(s).value, kInf);
  s[10] = kNaN;
  EXPECT_TRUE(gmean100(s).diverged);
  EXPECT_THROW(gmean100(std::vector<double>(99, 1.0)), ConfigError);
  const GMean g = gmean_h(std::vector<double>(60, 3.0), 50);
  EXPECT_EQ(g.horizon, 50);
  EXPECT_NEAR(g.value, 3.0, 1e-14);
}

TEST(StableSteps, Examples) {
  EXPECT_EQ(stable_steps(RowMatrix::Constant(1, 200, 0.1), 0.2), std::vector<int>{200});
  EXPECT_EQ(stable_steps(row({0.1, 0.3, 0.1}), 0.2), std::vector<int>{2});
  EXPECT_EQ(stable_steps(row({0.1, kNaN, 0.1, 0.1}), 0.2), std::vector<int>{2});
  EXPECT_EQ(stable_steps(row({0.5}), 0.2), std::vector<int>{1});
  // Equal to tau is not a crossing.
  EXPECT_EQ(stable_steps(row({0.2, 0.2}), 0.2), std::vector<int>{2});
}

TEST(Quantiles, LinearInterpolation) {
  EXPECT_EQ(median({3.0, 1.0, 2.0}), 2.0);
  EXPECT_EQ(median({4.0, 1.0, 2.0, 3.0}), 2.5);
  EXPECT_EQ(quantile({1.0, 2.0, 3.0, 4.0, 5.0}, 0.25), 2.0);
  EXPECT_DOUBLE_EQ(quantile({0.0, 10.0}, 0.9), 9.0);
  EXPECT_EQ(median({kInf, kInf, 1.0}), kInf);
  const auto cdf = empirical_cdf({3.0, 1.0, 3.0, 2.0});
  ASSERT_EQ(cdf.size(), 3u);
  EXPECT_EQ(cdf[0].f, 0.25);
  EXPECT_EQ(cdf.back().x, 3.0);
  EXPECT_EQ(cdf.back().f, 1.0);
}

TEST(RolloutTest, PersistenceStaysAtInitialFrame) {
  std::mt19937_64 rng(2);
  const RowMatrix u = random_field(1, 16, rng);
  const Rollout r = rollout(persistence_map(), u, 5);
  ASSERT_EQ(r.states.size(), 6u);
  for (const auto& s : r.states) EXPECT_EQ(s, u);
}

TEST(RolloutTest, StrideComposesSteps) {
  const OneStepMap f = [](const RowMatrix& u) { return RowMatrix(0.5 * u.array() + 1.0); };
  const RowMatrix u = RowMatrix::Constant(1, 8, 4.0);
  const Rollout r = rollout(f, u, 3, 2);
  ASSERT_EQ(r.states.size(), 4u);
  EXPECT_EQ(r.states[1], f(f(u)));
  EXPECT_EQ(r.states[3], f(f(f(f(f(f(u)))))));
}

TEST(RolloutTest, DivergenceFreezesAndFlags) {
  int calls = 0;
  const OneStepMap f = [&](const RowMatrix& u) {
    ++calls;
    if (calls == 3) return RowMatrix(RowMatrix::Constant(u.rows(), u.cols(), kNaN));
    return RowMatrix(u * 2.0);
  };
  const Rollout r = rollout(f, RowMatrix::Ones(1, 8), 5);
  EXPECT_EQ(r.valid, (std::vector<bool>{true, true, true, false, false, false}));
  EXPECT_EQ(r.states[5], r.states[2]);
}

TEST(Evaluate, SolverAsModelHasZeroError) {
  const Scenario s = make_scenario("diffusion1d");
  const TrajectorySet test = generate_trajectories(s, 0, Split::test, 2);
  EvalConfig c;
  c.t_eval = 120;
  const RolloutReport r = evaluate(solver_map(SpectralSolver(s)), test, c);
  EXPECT_LT(r.nrmse.maxCoeff(), 1e-6);
  EXPECT_EQ(r.frames, 120);
  EXPECT_EQ(r.gmean.horizon, 100);
  EXPECT_EQ(r.stable_step, (std::vector<int>{120, 120}));
}

TEST(Evaluate, StrideHalvesFrames) {
  const TrajectorySet test = generate_trajectories(make_scenario("diffusion1d"), 0, Split::test, 1);
  EvalConfig c;
  c.stride = 2;
  const RolloutReport r = evaluate(persistence_map(), test, c);
  EXPECT_EQ(r.frames, 100);
  EXPECT_EQ(r.nrmse.cols(), 100);
  // Frame t compares against stored frame 2t.
  EXPECT_NEAR(r.nrmse(0, 4), nrmse_frame(test.frame(0, 0), test.frame(0, 10)), 1e-15);
}

TEST(Evaluate, RejectsHorizonBeyondData) {
  const TrajectorySet test = generate_trajectories(make_scenario("diffusion1d"), 0, Split::test, 1);
  EvalConfig c;
  c.t_eval = 500;
  EXPECT_THROW(evaluate(persistence_map(), test, c), ConfigError);
}

TEST(Aggregate, MedianAndSingleSeed) {
  RolloutReport a;
  a.nrmse = RowMatrix::Constant(2, 4, 0.1);
  a.nrmse(1, 2) = 0.5;
  a.stable_step = {4, 3};
  a.gmean.value = 1.0;
  RolloutReport b = a, c = a;
  b.gmean.value = 2.0;
  c.gmean.value = 3.0;
  const SeedSummary one = aggregate_seeds({a});
  EXPECT_EQ(one.median_gmean, 1.0);
  EXPECT_EQ(one.stable_median, 3.5);
  EXPECT_EQ(one.stable_cdf.back().f, 1.0);
  EXPECT_EQ(one.stable_cdf.back().x, 4.0);
  const SeedSummary three = aggregate_seeds({a, b, c});
  EXPECT_EQ(three.median_gmean, 2.0);
  EXPECT_EQ(three.representative, 1u);
  EXPECT_EQ(three.band_median.size(), 4u);
  EXPECT_THROW(aggregate_seeds({}), ConfigError);
}

TEST(ResolutionShift, FactorOneMatchesBase) {
  const Scenario s = make_scenario("diffusion1d");
  const TrajectorySet test = generate_trajectories(s, 0, Split::test, 1);
  EvalConfig c;
  const auto base = evaluate(persistence_map(), test, c);
  const auto shifted = resolution_shift_eval(persistence_map(), test, s.grid, c);
  EXPECT_LT((base.nrmse - shifted.nrmse).cwiseAbs().maxCoeff(), 1e-6);
}
