#include <benchmark/benchmark.h>

#include <random>

#include "sgno/model.hpp"
#include "sgno/solver.hpp"
#include "sgno/training.hpp"

using namespace sgno;

namespace {

RowMatrix random_field(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  RowMatrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

void BM_ForwardTransform(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const GridSpec grid({n});
  const RowMatrix u = random_field(28, n, 1);
  for (auto _ : state) benchmark::DoNotOptimize(forward_transform(u, grid));
  state.SetItemsProcessed(state.iterations() * 28);
}
BENCHMARK(BM_ForwardTransform)->Arg(64)->Arg(160)->Arg(1024);

void BM_ForwardTransform2d(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const GridSpec grid({n, n});
  const RowMatrix u = random_field(20, n * n, 2);
  for (auto _ : state) benchmark::DoNotOptimize(forward_transform(u, grid));
}
BENCHMARK(BM_ForwardTransform2d)->Arg(32)->Arg(64);

void BM_OneStep(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const SgnoModel model = SgnoModel::initialize(SgnoConfig::defaults_for_dimension(1), GridSpec({n}), 3);
  const RowMatrix u = random_field(1, n, 4);
  for (auto _ : state) benchmark::DoNotOptimize(model.one_step(u));
}
BENCHMARK(BM_OneStep)->Arg(64)->Arg(160)->Arg(512);

void BM_TrainStep(benchmark::State& state) {
  const int batch = static_cast<int>(state.range(0));
  const GridSpec grid({160});
  SgnoModel model = SgnoModel::initialize(SgnoConfig::defaults_for_dimension(1), grid, 5);
  TrajectoryMeta meta;
  meta.grid = grid;
  TrajectorySet data(meta, batch, 2, 1);
  std::mt19937_64 rng(6);
  std::normal_distribution<float> n(0.0f, 1.0f);
  for (float& x : data.data()) x = n(rng);
  const auto pairs = make_pairs(data);
  Adam adam(model.params(), 0.9, 0.999, 1e-8, 0.0);
  SgnoParams grad = model.params().zeros_like();
  for (auto _ : state) {
    benchmark::DoNotOptimize(batch_loss(model, data, pairs, &grad));
    adam.step(model.params(), grad, 1e-4);
  }
}
BENCHMARK(BM_TrainStep)->Arg(1)->Arg(20)->Unit(benchmark::kMillisecond);

void BM_Etdrk4Step(benchmark::State& state) {
  const SpectralSolver solver(make_scenario("ks1d"));
  const CRowMatrix u = forward_transform(random_initial_condition(solver.scenario(), 7), solver.scenario().grid);
  for (auto _ : state) benchmark::DoNotOptimize(solver.etdrk4_step(u, 0.025));
}
BENCHMARK(BM_Etdrk4Step);

}  // namespace
