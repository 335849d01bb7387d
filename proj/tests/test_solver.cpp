#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "sgno/errors.hpp"
#include "sgno/solver.hpp"
#include "support.hpp"

using namespace sgno;
using sgno::testing::cosine_mode;
using sgno::testing::random_field;
using sgno::testing::rel_error;

TEST(Solver, HeatModeDecay) {
  // exp(-0.01 (2 pi)^2 0.1), 40-digit reference
  const SpectralSolver solver(heat_scenario(0.01, 64, 0.1));
  const RowMatrix u = cosine_mode(64, 1);
  EXPECT_LT(rel_error(solver.data_step(u), 0.961290700722946 * u), 1e-9);
}

TEST(Solver, LinearStepIsExactAndComposes) {
  const SpectralSolver solver(make_scenario("dispersion1d"));
  const RowMatrix u = random_initial_condition(solver.scenario(), 1);
  EXPECT_LT(rel_error(solver.advance(u, 1.0, 4), solver.advance(u, 1.0, 1)), 1e-13);
  // Pure dispersion conserves energy.
  EXPECT_NEAR(solver.advance(u, 3.0, 1).norm(), u.norm(), 1e-12 * u.norm());
}

TEST(Solver, StageCorrectionsVanishWithoutNonlinearity) {
  const SpectralSolver solver(heat_scenario(0.02, 32, 0.1));
  EXPECT_EQ(solver.nonlinear_term(CRowMatrix::Ones(1, 17)).norm(), 0.0);
}

TEST(Solver, RejectsBadSteps) {
  const SpectralSolver solver(make_scenario("ks1d"));
  EXPECT_THROW(solver.etdrk4_step(CRowMatrix::Zero(1, 33), 0.0), ConfigError);
  EXPECT_THROW(solver.etdrk4_step(CRowMatrix::Zero(1, 10), 0.1), DimensionError);
  EXPECT_THROW(solver.advance(RowMatrix::Zero(1, 64), 0.1, 0), ConfigError);
}

TEST(Solver, BurgersConservesMean) {
  const SpectralSolver solver(make_scenario("kdv1d"));
  RowMatrix u = random_initial_condition(solver.scenario(), 3);
  u.array() += 0.25;
  const RowMatrix v = solver.advance(u, 0.05, 8);
  EXPECT_NEAR(v.mean(), u.mean(), 1e-12);
}

TEST(Scenario, RegistryAndErrors) {
  for (const auto& name : scenario_names()) EXPECT_EQ(make_scenario(name).name, name);
  try {
    make_scenario("navier_stokes");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("diffusion1d"), std::string::npos);
  }
  EXPECT_THROW(with_grid(make_scenario("ks1d"), GridSpec({16, 16})), DimensionError);
}

TEST(Scenario, GrowingSymbolRejected) {
  Scenario s = heat_scenario(0.01, 32, 0.1);
  s.linear_symbol = [](const Wavevector& k) { return Complex(1e3 * k[0], 0.0); };
  EXPECT_THROW(s.validate(), ConfigError);
}

TEST(InitialCondition, ZeroMeanUnitRms) {
  for (const auto& name : {"diffusion1d", "aniso_diffusion2d", "advection3d"}) {
    const Scenario s = make_scenario(name);
    const RowMatrix u = random_initial_condition(s, 42);
    EXPECT_NEAR(u.mean(), 0.0, 1e-14) << name;
    EXPECT_NEAR(std::sqrt(u.squaredNorm() / u.size()), s.ic.rms, 1e-12) << name;
  }
}

TEST(Generate, DeterministicAndSeedSensitive) {
  const Scenario s = make_scenario("diffusion1d");
  const TrajectorySet a = generate_trajectories(s, 0, Split::train, 2);
  const TrajectorySet b = generate_trajectories(s, 0, Split::train, 2);
  const TrajectorySet c = generate_trajectories(s, 1, Split::train, 2);
  EXPECT_EQ(a.data(), b.data());
  EXPECT_NE(a.data(), c.data());
  EXPECT_NE(derive_seed(0, 0, 0), derive_seed(0, 1, 0));
}

TEST(Generate, EmptySetKeepsMeta) {
  const TrajectorySet e = generate_trajectories(make_scenario("ks1d"), 0, Split::train, 0);
  EXPECT_EQ(e.num_trajectories(), 0);
  EXPECT_EQ(e.meta().scenario, "ks1d");
  EXPECT_EQ(e.meta().stepper, "etdrk4");
  EXPECT_TRUE(e.data().empty());
}

TEST(Generate, DiffusionEnergyNonincreasing) {
  const TrajectorySet set = generate_trajectories(make_scenario("diffusion1d"), 0, Split::train);
  for (int i = 0; i < set.num_trajectories(); ++i) {
    double previous = set.frame(i, 0).squaredNorm();
    for (int t = 1; t < set.steps(); ++t) {
      const double e = set.frame(i, t).squaredNorm();
      EXPECT_LE(e, previous * (1 + 1e-6)) << i << ' ' << t;
      previous = e;
    }
  }
}

TEST(TrajectorySetTest, SliceAndFrames) {
  const TrajectorySet set = generate_trajectories(make_scenario("diffusion1d"), 0, Split::test, 3);
  const TrajectorySet tail = set.slice(1, 2);
  EXPECT_EQ(tail.num_trajectories(), 2);
  EXPECT_EQ(tail.frame(0, 5), set.frame(1, 5));
  EXPECT_THROW(set.slice(2, 2), DimensionError);
  TrajectorySet bad = set;
  bad.data()[7] = std::nanf("");
  EXPECT_THROW(bad.check_finite(), NumericError);
}
