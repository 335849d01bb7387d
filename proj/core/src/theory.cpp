#include "sgno/theory.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <random>
#include <sstream>

#include "sgno/errors.hpp"
#include "sgno/phi.hpp"

namespace sgno {

namespace {

constexpr int kPairwiseFallbackPairs = 10000;

Eigen::MatrixXd per_point_columns(const std::vector<RowMatrix>& fields) {
  if (fields.empty()) return {};
  const Eigen::Index rows = fields.front().rows();
  const Eigen::Index cols = fields.front().cols();
  Eigen::MatrixXd out(rows, cols * static_cast<Eigen::Index>(fields.size()));
  for (std::size_t s = 0; s < fields.size(); ++s) {
    out.middleCols(static_cast<Eigen::Index>(s) * cols, cols) = fields[s];
  }
  return out;
}

RowMatrix gaussian_like(const RowMatrix& like, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  RowMatrix out(like.rows(), like.cols());
  for (Eigen::Index i = 0; i < out.size(); ++i) out.data()[i] = n(rng);
  return out;
}

}  // namespace

SpectralNormEstimate power_iteration_norm(const Eigen::MatrixXd& a, int max_iterations, double tolerance) {
  SpectralNormEstimate est;
  if (a.size() == 0) return est;
  // Deterministic start with all components nonzero.
  Eigen::VectorXd v(a.cols());
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = 1.0 + 0.1 * std::sin(1.0 + 2.0 * static_cast<double>(i));
  v.normalize();
  double sigma = 0.0;
  est.converged = false;
  for (int it = 1; it <= max_iterations; ++it) {
    const Eigen::VectorXd u = a * v;
    const double next = u.norm();
    est.iterations = it;
    if (next == 0.0) {
      sigma = 0.0;
      est.converged = true;
      break;
    }
    Eigen::VectorXd w = a.transpose() * u;
    const double wn = w.norm();
    if (wn == 0.0) {
      sigma = next;
      est.converged = true;
      break;
    }
    v = w / wn;
    if (std::abs(next - sigma) <= tolerance * next) {
      sigma = std::max(sigma, next);
      est.converged = true;
      break;
    }
    sigma = next;
  }
  est.value = std::max(sigma, (a * v).norm());
  return est;
}

NetLipschitz estimate_lipschitz(const PointwiseNet& net, const Eigen::MatrixXd& samples, std::uint64_t seed,
                                Eigen::Index first_col, Eigen::Index width) {
  if (width < 0) width = net.in_features() - first_col;
  if (samples.rows() != net.in_features()) throw DimensionError("estimate_lipschitz: sample width mismatch");
  NetLipschitz out;
  out.samples = static_cast<std::size_t>(samples.cols());
  out.method = "jacobian-power";
  for (Eigen::Index s = 0; s < samples.cols(); ++s) {
    const Eigen::MatrixXd j = net.jacobian(samples.col(s)).middleCols(first_col, width);
    const auto est = power_iteration_norm(j);
    out.value = std::max(out.value, est.value);
    out.all_converged = out.all_converged && est.converged;
  }
  if (!out.all_converged && samples.cols() > 1) {
    out.method = "jacobian-power+pairwise";
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<Eigen::Index> pick(0, samples.cols() - 1);
    for (int p = 0; p < kPairwiseFallbackPairs; ++p) {
      const Eigen::Index a = pick(rng);
      const Eigen::Index b = pick(rng);
      Eigen::VectorXd x = samples.col(a);
      Eigen::VectorXd y = x;
      y.segment(first_col, width) = samples.col(b).segment(first_col, width);
      const double dx = (x - y).norm();
      if (dx == 0.0) continue;
      const RowMatrix fx = net.forward(RowMatrix(x));
      const RowMatrix fy = net.forward(RowMatrix(y));
      out.value = std::max(out.value, (fx - fy).norm() / dx);
    }
  }
  return out;
}

double compute_q(const LipschitzEstimates& e, double dt) {
  if (!(dt > 0.0)) throw ConfigError("compute_q: dt must be positive");
  const double z = e.omega * dt;
  return e.L_sigma * (std::exp(z) + dt * phi1(z) * e.alpha_g * e.M * e.L_G + e.alpha_w * e.L_W);
}

double compute_q_data(const LipschitzEstimates& e, double dt_data, int blocks) {
  if (blocks < 1) throw ConfigError("compute_q_data: blocks must be positive");
  const double q = compute_q(e, dt_data / blocks);
  return 1.0 + e.L_proj * e.L_lift * std::pow(q, blocks);
}

double block_slope_bound(const SgnoConfig& config) {
  return config.num_blocks > 1 ? activation_slope_bound(config.sigma) : 1.0;
}

SampleSet build_sample_set(const SgnoModel& model, const TrajectorySet& data, std::size_t max_frames,
                           std::uint64_t seed) {
  if (data.num_trajectories() == 0 || data.steps() == 0) throw ConfigError("build_sample_set: empty data");
  SampleSet set;
  const std::size_t total = static_cast<std::size_t>(data.num_trajectories()) * data.steps();
  const std::size_t take = std::min(max_frames, total);
  const BlockOperators ops = model.operators();
  const int blocks = model.config().num_blocks;

  auto harvest = [&](const RowMatrix& state) {
    RowMatrix v = model.lift(state);
    for (int l = 0; l < blocks; ++l) {
      set.latents.push_back(v);
      v = model.time_advance_block(ops, v, l + 1 == blocks);
    }
    set.outputs.push_back(v);
    set.states.push_back(state);
  };

  for (std::size_t i = 0; i < take; ++i) {
    // Evenly spaced over the flattened (trajectory, time) index.
    const std::size_t flat = take > 1 ? i * (total - 1) / (take - 1) : 0;
    const int traj = static_cast<int>(flat / data.steps());
    const int t = static_cast<int>(flat % data.steps());
    const RowMatrix u = data.frame(traj, t);
    harvest(u);
    // One model step from the same frame, i.e. a state the rollout visits.
    const RowMatrix next = model.one_step(u);
    if (next.allFinite()) harvest(next);
  }

  for (const auto& v : set.latents) set.R = std::max(set.R, v.norm());

  std::mt19937_64 rng(seed);
  const std::size_t harvested = set.latents.size();
  for (double radius : {1e-3, 1e-2, 1e-1}) {
    for (std::size_t i = 0; i < harvested; ++i) {
      RowMatrix n = gaussian_like(set.latents[i], rng);
      n *= radius * set.R / n.norm();
      set.latents.push_back(set.latents[i] + n);
    }
  }
  return set;
}

LipschitzEstimates estimate_constants(const SgnoModel& model, const SampleSet& samples, std::uint64_t seed) {
  if (samples.latents.empty()) throw ConfigError("estimate_constants: empty sample set");
  const auto& cfg = model.config();
  LipschitzEstimates e;
  e.omega = model.max_real_lambda();
  e.alpha_g = cfg.alpha_g;
  e.alpha_w = cfg.alpha_w;
  e.L_sigma = block_slope_bound(cfg);
  e.R = samples.R;
  e.num_samples = samples.latents.size();

  for (const auto& m : model.capped_mixing()) {
    Eigen::JacobiSVD<CMatrix> svd(m);
    if (svd.singularValues().size()) e.M = std::max(e.M, svd.singularValues()(0));
  }
  const Eigen::MatrixXd latent_cols = per_point_columns(samples.latents);
  const auto g = estimate_lipschitz(model.params().forcing, latent_cols, seed);
  const auto w = estimate_lipschitz(model.params().correction, latent_cols, seed + 1);
  e.L_G = g.value;
  e.L_W = w.value;

  std::vector<RowMatrix> lift_inputs;
  const RowMatrix coords = grid_coordinates(model.grid());
  for (const auto& u : samples.states) {
    RowMatrix in(u.rows() + coords.rows(), u.cols());
    in.topRows(u.rows()) = u;
    in.bottomRows(coords.rows()) = coords;
    lift_inputs.push_back(std::move(in));
  }
  const auto lift = estimate_lipschitz(model.params().lift, per_point_columns(lift_inputs), seed + 2, 0,
                                       cfg.state_channels);
  const auto proj = estimate_lipschitz(model.params().proj, per_point_columns(samples.outputs), seed + 3);
  e.L_lift = lift.value;
  e.L_proj = proj.value;
  const bool fallback = !(g.all_converged && w.all_converged && lift.all_converged && proj.all_converged);
  e.method = fallback ? "jacobian-power+pairwise" : "jacobian-power";
  return e;
}

GainCheck check_one_step_bound(const SgnoModel& model, const LipschitzEstimates& estimates,
                               const SampleSet& samples, std::size_t num_pairs, std::uint64_t seed,
                               double tolerance) {
  const auto& cfg = model.config();
  const auto& pool = samples.latents;
  if (pool.size() < 2) throw ConfigError("check_one_step_bound: need at least two samples");
  GainCheck out;
  out.tolerance = tolerance;
  out.q = compute_q(estimates, cfg.internal_dt());
  out.q_pow_L = std::pow(out.q, cfg.num_blocks);

  const BlockOperators ops = model.operators();
  const bool first_is_final = cfg.num_blocks == 1;
  auto compose = [&](const RowMatrix& v) {
    RowMatrix x = v;
    for (int l = 0; l < cfg.num_blocks; ++l) x = model.time_advance_block(ops, x, l + 1 == cfg.num_blocks);
    return x;
  };

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
  constexpr double kMagnitudes[] = {1e-6, 1e-5, 1e-4, 1e-3, 1e-2};
  const std::size_t far = num_pairs / 2;

  for (std::size_t p = 0; p < num_pairs; ++p) {
    const RowMatrix& v = pool[pick(rng)];
    RowMatrix w;
    if (p < far) {
      w = pool[pick(rng)];
      if ((v - w).norm() == 0.0) w = v + 1e-3 * samples.R * gaussian_like(v, rng) / std::sqrt(double(v.size()));
    } else {
      RowMatrix n = gaussian_like(v, rng);
      n *= kMagnitudes[(p - far) % 5] * samples.R / n.norm();
      w = v + n;
    }
    const double dist = (v - w).norm();
    const double block_gain =
        (model.time_advance_block(ops, v, first_is_final) - model.time_advance_block(ops, w, first_is_final))
            .norm() /
        dist;
    if (block_gain > out.max_block_gain) {
      out.max_block_gain = block_gain;
      out.argmax_pair = p;
    }
    const double composed = cfg.num_blocks == 1 ? block_gain : (compose(v) - compose(w)).norm() / dist;
    out.max_composed_gain = std::max(out.max_composed_gain, composed);
    ++out.pairs;
  }
  out.passed = out.max_block_gain <= out.q * (1.0 + tolerance) &&
               out.max_composed_gain <= out.q_pow_L * (1.0 + tolerance);
  std::ostringstream os;
  os << "max block gain " << out.max_block_gain << " vs q " << out.q << ", composed " << out.max_composed_gain
     << " vs q^L " << out.q_pow_L << " over " << out.pairs << " pairs (witness pair " << out.argmax_pair << ")";
  out.detail = os.str();
  return out;
}

LemmaCheck check_lemma_a1(const CRowMatrix& lambda, double dt, std::size_t probes, std::uint64_t seed,
                          double tolerance) {
  if (lambda.size() == 0) throw ConfigError("check_lemma_a1: empty generator");
  LemmaCheck out;
  out.probes = probes;
  Eigen::Index argmax = 0;
  double omega = lambda.data()[0].real();
  for (Eigen::Index i = 1; i < lambda.size(); ++i) {
    if (lambda.data()[i].real() > omega) {
      omega = lambda.data()[i].real();
      argmax = i;
    }
  }
  out.exp_bound = std::exp(omega * dt);
  out.phi_bound = phi1(omega * dt);

  CRowMatrix s_op(lambda.rows(), lambda.cols());
  CRowMatrix phi_op(lambda.rows(), lambda.cols());
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    s_op.data()[i] = std::exp(dt * lambda.data()[i]);
    phi_op.data()[i] = phi1(dt * lambda.data()[i]);
  }

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  bool ok = true;
  std::ostringstream detail;
  for (std::size_t p = 0; p < probes; ++p) {
    CRowMatrix s(lambda.rows(), lambda.cols());
    for (Eigen::Index i = 0; i < s.size(); ++i) s.data()[i] = Complex(n(rng), n(rng));
    const double sn = s.norm();
    const double re = s_op.cwiseProduct(s).norm() / sn;
    const double rp = phi_op.cwiseProduct(s).norm() / sn;
    out.max_exp_ratio = std::max(out.max_exp_ratio, re);
    out.max_phi_ratio = std::max(out.max_phi_ratio, rp);
  }
  out.extremal_exp_ratio = std::abs(s_op.data()[argmax]);
  out.extremal_phi_ratio = std::abs(phi_op.data()[argmax]);
  // Entry-wise check localizes any violation.
  for (Eigen::Index i = 0; i < lambda.size() && ok; ++i) {
    if (std::abs(s_op.data()[i]) > out.exp_bound * (1.0 + tolerance) ||
        std::abs(phi_op.data()[i]) > out.phi_bound * (1.0 + tolerance)) {
      ok = false;
      detail << "violation at mode " << i / lambda.cols() << ", channel " << i % lambda.cols();
    }
  }
  ok = ok && out.max_exp_ratio <= out.exp_bound * (1.0 + tolerance) &&
       out.max_phi_ratio <= out.phi_bound * (1.0 + tolerance);
  out.passed = ok;
  if (ok) {
    detail << "exp ratio " << out.max_exp_ratio << " <= " << out.exp_bound << ", phi ratio " << out.max_phi_ratio
           << " <= " << out.phi_bound;
  }
  out.detail = detail.str();
  return out;
}

RecursionReport check_error_recursion(const OneStepMap& f, double q_data, const TrajectorySet& truth,
                                      int trajectory, int steps, double tolerance) {
  if (!std::isfinite(q_data) || q_data < 0.0) throw ConfigError("check_error_recursion: invalid q_data");
  if (trajectory < 0 || trajectory >= truth.num_trajectories()) {
    throw DimensionError("check_error_recursion: trajectory index out of range");
  }
  if (steps < 1 || steps > truth.steps() - 1) throw ConfigError("check_error_recursion: invalid step count");
  RecursionReport r;
  r.q_data = q_data;
  r.tolerance = tolerance;

  const Rollout pred = rollout(f, truth.frame(trajectory, 0), steps);
  for (int n = 0; n < steps; ++n) {
    const RowMatrix un = truth.frame(trajectory, n);
    const RowMatrix next = f(un);
    r.defects.push_back((truth.frame(trajectory, n + 1) - next).norm());
  }
  for (int n = 0; n <= steps; ++n) {
    const double e = pred.valid[n] ? (pred.states[n] - truth.frame(trajectory, n)).norm()
                                   : std::numeric_limits<double>::infinity();
    r.errors.push_back(e);
  }
  const double e0 = r.errors.front();
  for (int n = 0; n <= steps; ++n) {
    double b = std::pow(q_data, n) * e0;
    for (int j = 0; j < n; ++j) b += std::pow(q_data, n - 1 - j) * r.defects[j];
    r.bound.push_back(b);
    r.tightness.push_back(b > 0.0 ? r.errors[n] / b : (r.errors[n] == 0.0 ? 0.0 : 1e300));
    if (!(r.errors[n] <= b * (1.0 + tolerance)) && r.first_violation < 0) r.first_violation = n;
  }
  r.passed = r.first_violation < 0;
  return r;
}

LinearExactness linear_exactness_probe(const SgnoModel& model, const RowMatrix& latent, double tolerance) {
  const auto& cfg = model.config();
  if (cfg.alpha_g != 0.0 || cfg.alpha_w != 0.0 || cfg.sigma != Activation::identity) {
    throw ConfigError("linear_exactness_probe: needs alpha_g = alpha_w = 0 and sigma = identity");
  }
  if (cfg.padding != 0) throw ConfigError("linear_exactness_probe: padding must be zero");
  const SpectrumLayout& layout = model.layout();
  const CRowMatrix lambda = model.stabilized_lambda();
  const Vector mask = model.forcing_mask();
  const bool mask_all = cfg.mask_placement == MaskPlacement::all;

  CRowMatrix v_hat = gather_retained(forward_transform(latent, layout), layout);
  CRowMatrix expected_hat = v_hat;
  for (Eigen::Index k = 0; k < v_hat.cols(); ++k) {
    for (Eigen::Index c = 0; c < v_hat.rows(); ++c) {
      Complex factor = std::exp(cfg.dt_data * lambda(k, c));
      if (mask_all) factor *= std::pow(mask[k], cfg.num_blocks);
      expected_hat(c, k) = factor * v_hat(c, k);
    }
  }
  const RowMatrix expected = inverse_transform(scatter_retained(expected_hat, layout), layout);
  const RowMatrix got = model.advance(latent);

  LinearExactness out;
  const double scale = std::max(expected.norm(), 1e-300);
  out.max_rel_error = (got - expected).norm() / scale;
  out.passed = out.max_rel_error <= tolerance;
  if (!out.passed) {
    const CRowMatrix got_hat = gather_retained(forward_transform(got, layout), layout);
    const double spec_scale = std::max(expected_hat.norm(), 1e-300);
    for (Eigen::Index k = 0; k < got_hat.cols() && out.first_bad_mode < 0; ++k) {
      if ((got_hat.col(k) - expected_hat.col(k)).norm() > tolerance * spec_scale) out.first_bad_mode = k;
    }
  }
  return out;
}

std::vector<RefinementRow> substep_refinement(const LipschitzEstimates& e, double dt_data,
                                              const std::vector<int>& blocks) {
  std::vector<RefinementRow> rows;
  for (int l : blocks) {
    const double q = compute_q(e, dt_data / l);
    rows.push_back({l, q, std::pow(q, l)});
  }
  return rows;
}

nlohmann::json to_json(const BoundReport& r) {
  using nlohmann::json;
  const auto& e = r.estimates;
  json j;
  j["schema_version"] = kBoundReportSchemaVersion;
  j["tolerances"] = {{"structural", 1e-10}, {"sampled", r.gain.tolerance}};
  j["caveat"] = "Lipschitz constants are suprema over a finite sample set and therefore lower bounds of the "
                "true constants; every verdict below inherits this.";
  j["estimates"] = {{"omega", e.omega},   {"L_G", e.L_G},         {"L_W", e.L_W},
                    {"L_lift", e.L_lift}, {"L_proj", e.L_proj},   {"L_sigma", e.L_sigma},
                    {"M", e.M},           {"alpha_g", e.alpha_g}, {"alpha_w", e.alpha_w},
                    {"R", e.R},           {"num_samples", e.num_samples}, {"method", e.method}};
  j["q_dt"] = r.q_dt;
  j["q_dt_pow_L"] = r.q_dt_pow_L;
  j["q_data"] = r.q_data;
  j["one_step_bound"] = {{"inequality", "||Psi(v)-Psi(w)|| <= q(dt) (1+tol) ||v-w||"},
                         {"q", r.gain.q},
                         {"max_block_gain", r.gain.max_block_gain},
                         {"q_pow_L", r.gain.q_pow_L},
                         {"max_composed_gain", r.gain.max_composed_gain},
                         {"pairs", r.gain.pairs},
                         {"argmax_pair", r.gain.argmax_pair},
                         {"passed", r.gain.passed}};
  j["operator_bounds"] = {{"inequality", "||S|| <= exp(omega dt), ||Phi|| <= phi1(omega dt)"},
                          {"exp_bound", r.lemma.exp_bound},
                          {"phi_bound", r.lemma.phi_bound},
                          {"max_exp_ratio", r.lemma.max_exp_ratio},
                          {"max_phi_ratio", r.lemma.max_phi_ratio},
                          {"extremal_exp_ratio", r.lemma.extremal_exp_ratio},
                          {"extremal_phi_ratio", r.lemma.extremal_phi_ratio},
                          {"probes", r.lemma.probes},
                          {"passed", r.lemma.passed}};
  json rec = json::array();
  for (const auto& x : r.recursion) {
    rec.push_back({{"inequality", "E_n <= q_data^n E_0 + sum_j q_data^(n-1-j) e(u_j)"},
                   {"q_data", x.q_data},
                   {"defects", x.defects},
                   {"errors", x.errors},
                   {"bound", x.bound},
                   {"tightness", x.tightness},
                   {"first_violation", x.first_violation},
                   {"passed", x.passed}});
  }
  j["error_recursion"] = rec;
  json ref = json::array();
  for (const auto& row : r.refinement) ref.push_back({{"L", row.blocks}, {"q", row.q}, {"q_pow_L", row.q_pow_L}});
  j["substep_refinement"] = ref;
  return j;
}

std::string summary_table(const BoundReport& r) {
  std::ostringstream os;
  os << std::setprecision(6);
  const auto& e = r.estimates;
  os << "constants (sampled lower bounds, R = " << e.R << ", " << e.num_samples << " samples)\n";
  os << "  omega " << e.omega << "  M " << e.M << "  L_G " << e.L_G << "  L_W " << e.L_W << "  L_lift " << e.L_lift
     << "  L_proj " << e.L_proj << "  L_sigma " << e.L_sigma << "\n";
  os << "q(dt) " << r.q_dt << "  q^L " << r.q_dt_pow_L << "  q_data " << r.q_data << "\n";
  os << "block gain     " << (r.gain.passed ? "PASS " : "FAIL ") << r.gain.detail << "\n";
  os << "operator bound " << (r.lemma.passed ? "PASS " : "FAIL ") << r.lemma.detail << "\n";
  for (std::size_t i = 0; i < r.recursion.size(); ++i) {
    const auto& x = r.recursion[i];
    double tight = 0.0;
    for (double t : x.tightness) tight = std::max(tight, t);
    os << "recursion " << i << "    " << (x.passed ? "PASS " : "FAIL ") << "max E_n/bound " << tight;
    if (!x.passed) os << " (first violation at n = " << x.first_violation << ")";
    os << "\n";
  }
  os << "refinement:";
  for (const auto& row : r.refinement) os << "  L=" << row.blocks << " q^L=" << row.q_pow_L;
  os << "\n";
  return os.str();
}

}  // namespace sgno
