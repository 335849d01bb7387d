#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "sgno/model.hpp"
#include "sgno/solver.hpp"

namespace sgno {

using OneStepMap = std::function<RowMatrix(const RowMatrix&)>;

inline constexpr double kNrmseEps = 1e-12;

struct EvalConfig {
  int t_eval = 200;
  int gmean_horizon = 100;
  double tau = 0.2;
  int stride = 1;
  /// Across-trajectory reduction before the geometric mean: "mean" or "median".
  std::string reduction = "mean";

  void validate() const;
  bool operator==(const EvalConfig&) const = default;
};

struct Rollout {
  std::vector<RowMatrix> states;  // states[t], t = 0..T; states[0] is the initial frame
  std::vector<bool> valid;        // false from the first non-finite prediction onward
};

/// Autoregressive rollout of `steps` frames, each frame composing `stride`
/// applications of `f`. A non-finite state freezes the rollout at the last
/// finite state and marks it invalid from that frame onward.
Rollout rollout(const OneStepMap& f, const RowMatrix& initial, int steps, int stride = 1);

OneStepMap as_map(const SgnoModel& model);
OneStepMap persistence_map();
OneStepMap solver_map(const SpectralSolver& solver);

/// ||pred - truth|| / (||truth|| + eps); non-finite prediction gives +inf.
double nrmse_frame(std::span<const double> pred, std::span<const double> truth, double eps = kNrmseEps);
double nrmse_frame(const RowMatrix& pred, const RowMatrix& truth, double eps = kNrmseEps);

/// Per-trajectory, per-step nRMSE [num_traj, steps]; column t-1 holds step t.
/// Truth frame for step t is truth(i, t * stride).
RowMatrix nrmse(const std::vector<Rollout>& predictions, const TrajectorySet& truth, int stride = 1);

std::vector<double> mean_over_trajectories(const RowMatrix& nrmse);
std::vector<double> median_over_trajectories(const RowMatrix& nrmse);

struct GMean {
  double value = 0.0;
  bool diverged = false;  // a nonpositive or non-finite term forced +inf
  int horizon = 0;
};

/// exp(mean(log L_t)) over the first `horizon` entries.
GMean gmean_h(std::span<const double> series, int horizon);
/// Requires at least 100 entries; throws ConfigError otherwise.
GMean gmean100(std::span<const double> series);

/// First step t >= 1 with nRMSE > tau (non-finite counts as a crossing);
/// the horizon length if never exceeded.
std::vector<int> stable_steps(const RowMatrix& nrmse, double tau);

/// Linear-interpolation quantile, q in [0, 1].
double quantile(std::vector<double> values, double q);
double median(std::vector<double> values);

struct CdfPoint {
  double x = 0.0;
  double f = 0.0;
};
/// Empirical CDF at each distinct value.
std::vector<CdfPoint> empirical_cdf(std::vector<double> values);

struct RolloutReport {
  RowMatrix nrmse;                // [num_traj, frames]
  std::vector<double> per_step;   // across-trajectory reduction used for the gmean
  GMean gmean;
  std::string reduction = "mean";
  std::vector<int> stable_step;
  double tau = 0.2;
  int t_eval = 0;                 // model steps
  int stride = 1;
  int frames = 0;                 // compared frames, t_eval / stride
  std::uint64_t seed = 0;
};

RolloutReport evaluate(const OneStepMap& f, const TrajectorySet& test, const EvalConfig& config,
                       std::uint64_t seed = 0);

/// Spectral downsampling of every frame onto `target`.
TrajectorySet downsample_set(const TrajectorySet& set, const GridSpec& target);
RolloutReport resolution_shift_eval(const OneStepMap& f, const TrajectorySet& hi_res, const GridSpec& target,
                                    const EvalConfig& config, std::uint64_t seed = 0);

struct SeedSummary {
  double median_gmean = 0.0;
  std::vector<double> gmeans;
  double stable_median = 0.0;
  double stable_q25 = 0.0;
  double stable_q75 = 0.0;
  std::vector<CdfPoint> stable_cdf;  // pooled over seeds and trajectories
  std::size_t representative = 0;   // seed whose gmean is closest to the median
  std::vector<double> band_median;   // per-step median over trajectories of the representative seed
  std::vector<double> band_p10;
  std::vector<double> band_p90;
};

SeedSummary aggregate_seeds(const std::vector<RolloutReport>& reports);

}  // namespace sgno
