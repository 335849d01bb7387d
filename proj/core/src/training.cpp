#include "sgno/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include "sgno/errors.hpp"

namespace sgno {

void TrainConfig::validate() const {
  if (total_steps < 0) throw ConfigError("total_steps must be nonnegative");
  if (total_steps > 0 && !(warmup_steps < total_steps)) {
    throw ConfigError("warmup_steps must be smaller than total_steps");
  }
  if (warmup_steps < 0) throw ConfigError("warmup_steps must be nonnegative");
  if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
  if (!(base_lr >= 0.0) || !(min_lr >= 0.0)) throw ConfigError("learning rates must be nonnegative");
  if (weight_decay < 0.0) throw ConfigError("weight_decay must be nonnegative");
  if (grad_clip && !(*grad_clip > 0.0)) throw ConfigError("grad_clip must be positive");
  if (validation_trajectories < 0) throw ConfigError("validation_trajectories must be nonnegative");
}

double lr_schedule(const TrainConfig& c, long step) {
  if (step < 0) step = 0;
  if (step > c.total_steps) step = c.total_steps;
  if (step < c.warmup_steps) {
    return c.base_lr * static_cast<double>(step) / static_cast<double>(c.warmup_steps);
  }
  const long decay = c.total_steps - c.warmup_steps;
  if (decay <= 0) return c.base_lr;
  const double progress = static_cast<double>(step - c.warmup_steps) / static_cast<double>(decay);
  return c.min_lr + (c.base_lr - c.min_lr) * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

std::vector<TrainingPair> make_pairs(const TrajectorySet& data, int first, int count) {
  if (count < 0) count = data.num_trajectories() - first;
  if (first < 0 || first + count > data.num_trajectories()) {
    throw DimensionError("make_pairs: trajectory range out of bounds");
  }
  if (data.steps() < 2) throw ConfigError("make_pairs: trajectories need at least 2 frames");
  std::vector<TrainingPair> pairs;
  pairs.reserve(static_cast<std::size_t>(count) * (data.steps() - 1));
  for (int i = first; i < first + count; ++i) {
    for (int t = 0; t + 1 < data.steps(); ++t) pairs.push_back({i, t});
  }
  if (pairs.empty()) throw ConfigError("make_pairs: no training pairs");
  return pairs;
}

void shuffle_pairs(std::vector<TrainingPair>& pairs, std::uint64_t seed, long epoch) {
  std::mt19937_64 rng(derive_seed(seed, 7, static_cast<std::uint64_t>(epoch)));
  std::shuffle(pairs.begin(), pairs.end(), rng);
}

double mse_loss(const RowMatrix& pred, const RowMatrix& target) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols()) {
    throw DimensionError("mse_loss: shape mismatch");
  }
  if (pred.size() == 0) return 0.0;
  return (pred - target).squaredNorm() / static_cast<double>(pred.size());
}

double batch_loss(const SgnoModel& model, const TrajectorySet& data, std::span<const TrainingPair> pairs,
                  SgnoParams* grad) {
  if (pairs.empty()) throw ConfigError("batch_loss: empty batch");
  if (grad) grad->set_zero();
  double total = 0.0;
  const double entries = static_cast<double>(pairs.size()) * data.channels() * data.points();
  for (const auto& p : pairs) {
    const RowMatrix input = data.frame(p.trajectory, p.time);
    const RowMatrix target = data.frame(p.trajectory, p.time + 1);
    if (grad) {
      SgnoModel::Tape tape;
      const RowMatrix diff = model.forward(input, tape) - target;
      total += diff.squaredNorm();
      model.backward(tape, (2.0 / entries) * diff, *grad);
    } else {
      total += (model.one_step(input) - target).squaredNorm();
    }
  }
  return total / entries;
}

double global_norm(const SgnoParams& params) {
  double sum = 0.0;
  params.visit([&](const std::string&, const std::vector<std::size_t>&, std::span<const double> d) {
    for (double x : d) sum += x * x;
  });
  return std::sqrt(sum);
}

Adam::Adam(const SgnoParams& like, double beta1, double beta2, double eps, double weight_decay)
    : m_(like.zeros_like()), v_(like.zeros_like()), beta1_(beta1), beta2_(beta2), eps_(eps),
      weight_decay_(weight_decay) {}

void Adam::step(SgnoParams& params, const SgnoParams& grad, double lr) {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  std::vector<std::span<double>> p, m, v;
  std::vector<std::span<const double>> g;
  params.visit([&](const std::string&, const std::vector<std::size_t>&, std::span<double> d) { p.push_back(d); });
  m_.visit([&](const std::string&, const std::vector<std::size_t>&, std::span<double> d) { m.push_back(d); });
  v_.visit([&](const std::string&, const std::vector<std::size_t>&, std::span<double> d) { v.push_back(d); });
  grad.visit([&](const std::string&, const std::vector<std::size_t>&, std::span<const double> d) { g.push_back(d); });
  if (p.size() != g.size() || p.size() != m.size()) throw DimensionError("Adam: parameter layout changed");
  for (std::size_t a = 0; a < p.size(); ++a) {
    if (p[a].size() != g[a].size()) throw DimensionError("Adam: tensor size mismatch");
    for (std::size_t i = 0; i < p[a].size(); ++i) {
      const double gi = g[a][i] + weight_decay_ * p[a][i];
      m[a][i] = beta1_ * m[a][i] + (1.0 - beta1_) * gi;
      v[a][i] = beta2_ * v[a][i] + (1.0 - beta2_) * gi * gi;
      p[a][i] -= lr * (m[a][i] / c1) / (std::sqrt(v[a][i] / c2) + eps_);
    }
  }
}

namespace {

void scale_params(SgnoParams& params, double s) {
  params.visit([&](const std::string&, const std::vector<std::size_t>&, std::span<double> d) {
    for (double& x : d) x *= s;
  });
}

void check_sign(const SgnoModel& model, long step) {
  const double bound = -model.config().lambda_margin;
  const double re = model.max_real_lambda();
  if (!(re <= bound)) {
    std::ostringstream os;
    os << "generator sign constraint violated at step " << step << ": max Re(lambda) = " << re;
    throw NumericError(os.str());
  }
}

}  // namespace

TrainResult train(SgnoModel model, const TrajectorySet& data, const TrainConfig& config,
                  const CheckpointHook& on_checkpoint) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  const int holdout = data.num_trajectories() > config.validation_trajectories
                          ? config.validation_trajectories
                          : 0;
  const int train_count = data.num_trajectories() - holdout;
  std::vector<TrainingPair> pairs = make_pairs(data, 0, train_count);

  TrainResult result;
  Adam adam(model.params(), config.adam_beta1, config.adam_beta2, config.adam_eps, config.weight_decay);
  SgnoParams grad = model.params().zeros_like();

  long epoch = 0;
  std::size_t cursor = 0;
  shuffle_pairs(pairs, config.seed, epoch);
  const std::size_t batch = std::min<std::size_t>(config.batch_size, pairs.size());
  double last_loss = std::numeric_limits<double>::quiet_NaN();

  for (long step = 0; step < config.total_steps; ++step) {
    if (cursor + batch > pairs.size()) {
      ++epoch;
      cursor = 0;
      shuffle_pairs(pairs, config.seed, epoch);
    }
    const std::span<const TrainingPair> mb(pairs.data() + cursor, batch);
    cursor += batch;

    const double lr = lr_schedule(config, step + 1);
    double loss = 0.0;
    try {
      loss = batch_loss(model, data, mb, &grad);
    } catch (const NumericError& e) {
      std::ostringstream os;
      os << "non-finite forward pass at step " << step << " (epoch " << epoch << ", batch index "
         << (cursor / batch - 1) << ", lr " << lr << "): " << e.what();
      throw NumericError(os.str());
    }
    const double gnorm = global_norm(grad);
    if (!std::isfinite(loss) || !std::isfinite(gnorm)) {
      std::ostringstream os;
      os << "non-finite loss at step " << step << " (epoch " << epoch << ", batch index "
         << (cursor / batch - 1) << "): loss " << loss << ", grad norm " << gnorm << ", lr " << lr;
      throw NumericError(os.str());
    }
    if (config.grad_clip && gnorm > *config.grad_clip) scale_params(grad, *config.grad_clip / gnorm);
    adam.step(model.params(), grad, lr);
    last_loss = loss;

    const long done = step + 1;
    if (done % std::max(1L, config.log_every) == 0 || done == config.total_steps || step == 0) {
      result.log.push_back({done, loss, lr, gnorm, model.max_real_lambda()});
    }
    if (config.checkpoint_every > 0 && done % config.checkpoint_every == 0 && done != config.total_steps) {
      check_sign(model, done);
      if (on_checkpoint) on_checkpoint(model, done);
    }
  }

  check_sign(model, config.total_steps);
  if (on_checkpoint) on_checkpoint(model, config.total_steps);

  result.final_train_loss = last_loss;
  if (holdout > 0) {
    const auto val = make_pairs(data, train_count, holdout);
    result.validation_loss = batch_loss(model, data, val, nullptr);
  } else {
    result.validation_loss = std::numeric_limits<double>::quiet_NaN();
  }
  result.model = std::move(model);
  result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

std::string training_log_csv(const std::vector<TrainLogRow>& log) {
  std::ostringstream os;
  os.precision(10);
  os << "step,loss,lr,grad_norm,max_re_lambda\n";
  for (const auto& r : log) {
    os << r.step << ',' << r.loss << ',' << r.lr << ',' << r.grad_norm << ',' << r.max_re_lambda << '\n';
  }
  return os.str();
}

}  // namespace sgno
