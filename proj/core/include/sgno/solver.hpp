#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sgno/scenario.hpp"
#include "sgno/types.hpp"

namespace sgno {

/// Trajectory array [num_traj, T, C, points] with metadata.
struct TrajectoryMeta {
  std::string scenario;
  double dt = 0.0;
  GridSpec grid;
  std::uint64_t seed = 0;
  std::string split;  // "train" or "test"
  int substeps = 1;
  std::string stepper;  // "exact" or "etdrk4"
  bool dealias = false;
  int burn_in_steps = 0;
  int format_version = 1;
};

class TrajectorySet {
 public:
  TrajectorySet() = default;
  TrajectorySet(TrajectoryMeta meta, int num_traj, int steps, int channels);

  const TrajectoryMeta& meta() const noexcept { return meta_; }
  TrajectoryMeta& meta() noexcept { return meta_; }
  int num_trajectories() const noexcept { return num_traj_; }
  int steps() const noexcept { return steps_; }
  int channels() const noexcept { return channels_; }
  std::size_t points() const noexcept { return meta_.grid.points(); }

  RowMatrix frame(int traj, int t) const;
  void set_frame(int traj, int t, const RowMatrix& field);

  const std::vector<float>& data() const noexcept { return data_; }
  std::vector<float>& data() noexcept { return data_; }
  std::vector<std::size_t> shape() const;

  /// Subset of trajectories [first, first + count).
  TrajectorySet slice(int first, int count) const;
  /// Throws NumericError on NaN/Inf entries.
  void check_finite() const;

 private:
  std::size_t offset(int traj, int t) const;

  TrajectoryMeta meta_;
  int num_traj_ = 0;
  int steps_ = 0;
  int channels_ = 1;
  std::vector<float> data_;
};

/// Pseudo-spectral reference stepper for one scenario.
class SpectralSolver {
 public:
  explicit SpectralSolver(Scenario scenario);

  const Scenario& scenario() const noexcept { return scenario_; }

  /// One exponential RK4 step of size h on the stored spectrum. Linear
  /// scenarios use the exact propagator.
  CRowMatrix etdrk4_step(const CRowMatrix& u_hat, double h) const;
  /// Advance a physical field by `duration` using `substeps` equal steps.
  RowMatrix advance(const RowMatrix& u, double duration, int substeps) const;
  /// One data step (scenario dt, scenario substeps).
  RowMatrix data_step(const RowMatrix& u) const;

  /// Nonlinear term N(u) in spectral form, dealiased when enabled.
  CRowMatrix nonlinear_term(const CRowMatrix& u_hat) const;
  const CVector& symbol() const noexcept { return symbol_; }

 private:
  Scenario scenario_;
  SpectrumLayout layout_;
  CVector symbol_;        // lambda(k) per stored mode
  Vector derivative_;     // 2 pi k_0 * scale, imaginary unit applied at use
  Vector dealias_mask_;
};

/// Seeded initial condition with unit RMS and zero mean.
RowMatrix random_initial_condition(const Scenario& scenario, std::uint64_t seed);

/// Per-trajectory seed derived from (base seed, split id, index).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t split, std::uint64_t index);

enum class Split { train, test };

/// Trajectories for one split. Counts and lengths come from the scenario;
/// `count` overrides num_train/num_test when nonnegative.
TrajectorySet generate_trajectories(const Scenario& scenario, std::uint64_t seed, Split split,
                                    int count = -1);

}  // namespace sgno
