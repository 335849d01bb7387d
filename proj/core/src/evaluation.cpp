#include "sgno/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "sgno/errors.hpp"

namespace sgno {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool all_finite(const RowMatrix& m) { return m.allFinite(); }

}  // namespace

void EvalConfig::validate() const {
  if (t_eval < 1) throw ConfigError("t_eval must be at least 1");
  if (gmean_horizon < 1) throw ConfigError("gmean horizon must be at least 1");
  if (!(tau > 0.0)) throw ConfigError("tau must be positive");
  if (stride < 1) throw ConfigError("stride must be at least 1");
  if (reduction != "mean" && reduction != "median") {
    throw ConfigError("reduction must be 'mean' or 'median', got '" + reduction + "'");
  }
}

Rollout rollout(const OneStepMap& f, const RowMatrix& initial, int steps, int stride) {
  if (steps < 0 || stride < 1) throw ConfigError("rollout: invalid steps or stride");
  Rollout r;
  r.states.reserve(steps + 1);
  r.valid.reserve(steps + 1);
  r.states.push_back(initial);
  r.valid.push_back(all_finite(initial));
  RowMatrix current = initial;
  bool ok = r.valid.back();
  for (int t = 1; t <= steps; ++t) {
    if (ok) {
      RowMatrix next = current;
      try {
        for (int s = 0; s < stride && ok; ++s) {
          next = f(next);
          ok = all_finite(next);
        }
      } catch (const NumericError&) {
        ok = false;
      }
      if (ok) current = std::move(next);
    }
    r.states.push_back(current);
    r.valid.push_back(ok);
  }
  return r;
}

OneStepMap as_map(const SgnoModel& model) {
  return [&model](const RowMatrix& u) { return model.one_step(u); };
}

OneStepMap persistence_map() {
  return [](const RowMatrix& u) { return u; };
}

OneStepMap solver_map(const SpectralSolver& solver) {
  return [&solver](const RowMatrix& u) { return solver.data_step(u); };
}

double nrmse_frame(std::span<const double> pred, std::span<const double> truth, double eps) {
  if (pred.size() != truth.size()) throw DimensionError("nrmse: shape mismatch");
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (!std::isfinite(pred[i])) return kInf;
    const double d = pred[i] - truth[i];
    num += d * d;
    den += truth[i] * truth[i];
  }
  return std::sqrt(num) / (std::sqrt(den) + eps);
}

double nrmse_frame(const RowMatrix& pred, const RowMatrix& truth, double eps) {
  if (pred.rows() != truth.rows() || pred.cols() != truth.cols()) {
    throw DimensionError("nrmse: shape mismatch");
  }
  return nrmse_frame(std::span<const double>(pred.data(), pred.size()),
                     std::span<const double>(truth.data(), truth.size()), eps);
}

RowMatrix nrmse(const std::vector<Rollout>& predictions, const TrajectorySet& truth, int stride) {
  if (static_cast<int>(predictions.size()) != truth.num_trajectories()) {
    throw DimensionError("nrmse: trajectory count mismatch");
  }
  if (predictions.empty()) return RowMatrix(0, 0);
  const int frames = static_cast<int>(predictions.front().states.size()) - 1;
  if (frames * stride > truth.steps() - 1) throw DimensionError("nrmse: rollout longer than the truth");
  RowMatrix out(truth.num_trajectories(), frames);
  for (int i = 0; i < truth.num_trajectories(); ++i) {
    const auto& r = predictions[i];
    if (static_cast<int>(r.states.size()) != frames + 1) throw DimensionError("nrmse: ragged rollouts");
    for (int t = 1; t <= frames; ++t) {
      out(i, t - 1) = r.valid[t] ? nrmse_frame(r.states[t], truth.frame(i, t * stride)) : kInf;
    }
  }
  return out;
}

std::vector<double> mean_over_trajectories(const RowMatrix& e) {
  std::vector<double> out(e.cols(), 0.0);
  for (Eigen::Index t = 0; t < e.cols(); ++t) out[t] = e.col(t).mean();
  return out;
}

std::vector<double> median_over_trajectories(const RowMatrix& e) {
  std::vector<double> out(e.cols(), 0.0);
  for (Eigen::Index t = 0; t < e.cols(); ++t) {
    std::vector<double> col(e.rows());
    for (Eigen::Index i = 0; i < e.rows(); ++i) col[i] = e(i, t);
    out[t] = median(std::move(col));
  }
  return out;
}

GMean gmean_h(std::span<const double> series, int horizon) {
  if (horizon < 1) throw ConfigError("gmean: horizon must be positive");
  if (static_cast<int>(series.size()) < horizon) {
    std::ostringstream os;
    os << "gmean: need " << horizon << " steps, got " << series.size();
    throw ConfigError(os.str());
  }
  GMean g;
  g.horizon = horizon;
  double sum = 0.0;
  for (int t = 0; t < horizon; ++t) {
    const double v = series[t];
    if (!(v > 0.0) || !std::isfinite(v)) {
      g.value = kInf;
      g.diverged = true;
      return g;
    }
    sum += std::log(v);
  }
  g.value = std::exp(sum / horizon);
  return g;
}

GMean gmean100(std::span<const double> series) { return gmean_h(series, 100); }

std::vector<int> stable_steps(const RowMatrix& e, double tau) {
  if (!(tau > 0.0)) throw ConfigError("stable_steps: tau must be positive");
  const int horizon = static_cast<int>(e.cols());
  std::vector<int> out(e.rows(), horizon);
  for (Eigen::Index i = 0; i < e.rows(); ++i) {
    for (int t = 0; t < horizon; ++t) {
      const double v = e(i, t);
      if (!std::isfinite(v) || v > tau) {
        out[i] = t + 1;
        break;
      }
    }
  }
  return out;
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw ConfigError("quantile of an empty set");
  if (q < 0.0 || q > 1.0) throw ConfigError("quantile level outside [0, 1]");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  if (frac == 0.0 || values[hi] == values[lo]) return values[lo];
  return values[lo] + frac * (values[hi] - values[lo]);
}

double median(std::vector<double> values) { return quantile(std::move(values), 0.5); }

std::vector<CdfPoint> empirical_cdf(std::vector<double> values) {
  std::vector<CdfPoint> out;
  if (values.empty()) return out;
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i + 1 < values.size() && values[i + 1] == values[i]) continue;
    out.push_back({values[i], static_cast<double>(i + 1) / n});
  }
  return out;
}

RolloutReport evaluate(const OneStepMap& f, const TrajectorySet& test, const EvalConfig& config,
                       std::uint64_t seed) {
  config.validate();
  const int frames = config.t_eval / config.stride;
  if (frames < 1) throw ConfigError("evaluate: t_eval shorter than the stride");
  if (frames * config.stride > test.steps() - 1) {
    std::ostringstream os;
    os << "evaluate: test trajectories have " << test.steps() << " frames, need "
       << frames * config.stride + 1;
    throw ConfigError(os.str());
  }
  std::vector<Rollout> preds;
  preds.reserve(test.num_trajectories());
  for (int i = 0; i < test.num_trajectories(); ++i) {
    preds.push_back(rollout(f, test.frame(i, 0), frames, config.stride));
  }
  RolloutReport r;
  r.nrmse = nrmse(preds, test, config.stride);
  r.reduction = config.reduction;
  r.per_step = config.reduction == "median" ? median_over_trajectories(r.nrmse) : mean_over_trajectories(r.nrmse);
  r.gmean = gmean_h(r.per_step, std::min(config.gmean_horizon, frames));
  r.stable_step = stable_steps(r.nrmse, config.tau);
  r.tau = config.tau;
  r.t_eval = config.t_eval;
  r.stride = config.stride;
  r.frames = frames;
  r.seed = seed;
  return r;
}

TrajectorySet downsample_set(const TrajectorySet& set, const GridSpec& target) {
  TrajectoryMeta meta = set.meta();
  meta.grid = target;
  TrajectorySet out(meta, set.num_trajectories(), set.steps(), set.channels());
  for (int i = 0; i < set.num_trajectories(); ++i) {
    for (int t = 0; t < set.steps(); ++t) {
      out.set_frame(i, t, spectral_downsample(set.frame(i, t), set.meta().grid, target));
    }
  }
  return out;
}

RolloutReport resolution_shift_eval(const OneStepMap& f, const TrajectorySet& hi_res, const GridSpec& target,
                                    const EvalConfig& config, std::uint64_t seed) {
  return evaluate(f, downsample_set(hi_res, target), config, seed);
}

SeedSummary aggregate_seeds(const std::vector<RolloutReport>& reports) {
  if (reports.empty()) throw ConfigError("aggregate_seeds: no reports");
  SeedSummary s;
  for (const auto& r : reports) s.gmeans.push_back(r.gmean.value);
  s.median_gmean = median(s.gmeans);

  double best = kInf;
  s.representative = 0;
  for (std::size_t i = 0; i < s.gmeans.size(); ++i) {
    const double d = s.gmeans[i] == s.median_gmean ? 0.0 : std::abs(s.gmeans[i] - s.median_gmean);
    if (d < best) {
      best = d;
      s.representative = i;
    }
  }

  std::vector<double> stable;
  for (const auto& r : reports) {
    for (int v : r.stable_step) stable.push_back(v);
  }
  if (!stable.empty()) {
    s.stable_median = median(stable);
    s.stable_q25 = quantile(stable, 0.25);
    s.stable_q75 = quantile(stable, 0.75);
    s.stable_cdf = empirical_cdf(stable);
  }

  const RowMatrix& e = reports[s.representative].nrmse;
  for (Eigen::Index t = 0; t < e.cols(); ++t) {
    std::vector<double> col(e.rows());
    for (Eigen::Index i = 0; i < e.rows(); ++i) col[i] = e(i, t);
    if (col.empty()) continue;
    s.band_median.push_back(quantile(col, 0.5));
    s.band_p10.push_back(quantile(col, 0.1));
    s.band_p90.push_back(quantile(col, 0.9));
  }
  return s;
}

}  // namespace sgno
