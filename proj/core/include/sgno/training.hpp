#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sgno/model.hpp"
#include "sgno/solver.hpp"

namespace sgno {

struct TrainConfig {
  double base_lr = 1e-3;
  long warmup_steps = 400;
  long total_steps = 2000;
  double min_lr = 0.0;
  double weight_decay = 0.0;
  int batch_size = 20;
  std::uint64_t seed = 0;
  long checkpoint_every = 0;  // 0: final checkpoint only
  long log_every = 50;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::optional<double> grad_clip;  // global-norm clip, off by default
  int validation_trajectories = 2;

  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

/// Linear warmup from 0 to base_lr, then cosine decay to min_lr.
double lr_schedule(const TrainConfig& config, long step);

struct TrainingPair {
  int trajectory = 0;
  int time = 0;  // pair (u_t, u_{t+1})
};

/// Every consecutive pair of trajectories [first, first + count).
std::vector<TrainingPair> make_pairs(const TrajectorySet& data, int first = 0, int count = -1);
/// Deterministic per-epoch permutation.
void shuffle_pairs(std::vector<TrainingPair>& pairs, std::uint64_t seed, long epoch);

/// Mean squared error over all entries; throws DimensionError on shape mismatch.
double mse_loss(const RowMatrix& pred, const RowMatrix& target);

/// Mean one-step MSE over `pairs`. When `grad` is non-null it receives the
/// gradient (overwritten).
double batch_loss(const SgnoModel& model, const TrajectorySet& data,
                  std::span<const TrainingPair> pairs, SgnoParams* grad);

double global_norm(const SgnoParams& params);

class Adam {
 public:
  Adam(const SgnoParams& like, double beta1, double beta2, double eps, double weight_decay);
  void step(SgnoParams& params, const SgnoParams& grad, double lr);
  long iterations() const noexcept { return t_; }

 private:
  SgnoParams m_;
  SgnoParams v_;
  double beta1_, beta2_, eps_, weight_decay_;
  long t_ = 0;
};

struct TrainLogRow {
  long step = 0;
  double loss = 0.0;
  double lr = 0.0;
  double grad_norm = 0.0;
  double max_re_lambda = 0.0;
};

struct TrainResult {
  SgnoModel model;
  std::vector<TrainLogRow> log;
  double final_train_loss = 0.0;
  double validation_loss = 0.0;  // NaN when no trajectories are held out
  double seconds = 0.0;
};

/// Called after each checkpoint-worthy step with the current model.
using CheckpointHook = std::function<void(const SgnoModel&, long step)>;

/// One-step teacher-forced training. The last `validation_trajectories`
/// trajectories are held out for diagnostics. Throws NumericError on a
/// non-finite loss with lr, gradient norm and batch index in the message.
TrainResult train(SgnoModel model, const TrajectorySet& data, const TrainConfig& config,
                  const CheckpointHook& on_checkpoint = {});

std::string training_log_csv(const std::vector<TrainLogRow>& log);

}  // namespace sgno
