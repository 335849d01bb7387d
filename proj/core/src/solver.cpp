#include "sgno/solver.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "sgno/errors.hpp"
#include "sgno/phi.hpp"

namespace sgno {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

bool all_finite(const CRowMatrix& m) {
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    const Complex v = m.data()[i];
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
  }
  return true;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

}  // namespace

TrajectorySet::TrajectorySet(TrajectoryMeta meta, int num_traj, int steps, int channels)
    : meta_(std::move(meta)), num_traj_(num_traj), steps_(steps), channels_(channels) {
  data_.assign(static_cast<std::size_t>(num_traj) * steps * channels * meta_.grid.points(), 0.0f);
}

std::size_t TrajectorySet::offset(int traj, int t) const {
  if (traj < 0 || traj >= num_traj_ || t < 0 || t >= steps_) {
    throw DimensionError("trajectory index (" + std::to_string(traj) + ", " + std::to_string(t) +
                         ") out of range");
  }
  return (static_cast<std::size_t>(traj) * steps_ + t) * channels_ * points();
}

RowMatrix TrajectorySet::frame(int traj, int t) const {
  const std::size_t off = offset(traj, t);
  RowMatrix f(channels_, static_cast<Eigen::Index>(points()));
  for (Eigen::Index i = 0; i < f.size(); ++i) f.data()[i] = data_[off + i];
  return f;
}

void TrajectorySet::set_frame(int traj, int t, const RowMatrix& field) {
  if (field.rows() != channels_ || static_cast<std::size_t>(field.cols()) != points()) {
    throw DimensionError("set_frame: field shape does not match trajectory set");
  }
  const std::size_t off = offset(traj, t);
  for (Eigen::Index i = 0; i < field.size(); ++i) data_[off + i] = static_cast<float>(field.data()[i]);
}

std::vector<std::size_t> TrajectorySet::shape() const {
  std::vector<std::size_t> s{static_cast<std::size_t>(num_traj_), static_cast<std::size_t>(steps_),
                             static_cast<std::size_t>(channels_)};
  for (int n : meta_.grid.n) s.push_back(static_cast<std::size_t>(n));
  return s;
}

TrajectorySet TrajectorySet::slice(int first, int count) const {
  if (first < 0 || count < 0 || first + count > num_traj_) throw DimensionError("slice out of range");
  TrajectorySet out(meta_, count, steps_, channels_);
  const std::size_t per = static_cast<std::size_t>(steps_) * channels_ * points();
  std::copy(data_.begin() + first * per, data_.begin() + (first + count) * per, out.data_.begin());
  return out;
}

void TrajectorySet::check_finite() const {
  for (std::size_t i = 0; i < data_.size(); ++i) {
    if (!std::isfinite(data_[i])) {
      throw NumericError("non-finite value in trajectory data at flat index " + std::to_string(i));
    }
  }
}

SpectralSolver::SpectralSolver(Scenario scenario) : scenario_(std::move(scenario)) {
  scenario_.validate();
  const auto& grid = scenario_.grid;
  layout_ = SpectrumLayout(grid, std::vector<int>(grid.dim(), 1));
  const auto ns = static_cast<Eigen::Index>(grid.spectral_points());
  symbol_.resize(ns);
  derivative_.resize(ns);
  dealias_mask_.resize(ns);
  for (Eigen::Index f = 0; f < ns; ++f) {
    const Wavevector k = layout_.wavevector(static_cast<std::size_t>(f));
    symbol_[f] = scenario_.linear_symbol(k);
    const bool nyquist0 = std::abs(k[0]) == grid.n[0] / 2;
    derivative_[f] = nyquist0 ? 0.0 : kTwoPi * k[0] * scenario_.nonlinearity.scale;
    bool keep = true;
    for (int a = 0; a < grid.dim(); ++a) keep = keep && 3 * std::abs(k[a]) < grid.n[a];
    dealias_mask_[f] = (scenario_.dealias && !keep) ? 0.0 : 1.0;
  }
}

CRowMatrix SpectralSolver::nonlinear_term(const CRowMatrix& u_hat) const {
  const auto& grid = scenario_.grid;
  const auto& nl = scenario_.nonlinearity;
  CRowMatrix out;
  switch (nl.kind) {
    case NonlinearityKind::none:
      return CRowMatrix::Zero(u_hat.rows(), u_hat.cols());
    case NonlinearityKind::burgers: {
      const RowMatrix u = inverse_transform(u_hat, grid);
      out = forward_transform(RowMatrix(u.cwiseProduct(u)), grid);
      for (Eigen::Index f = 0; f < out.cols(); ++f) out.col(f) *= Complex(0.0, -0.5 * derivative_[f]);
      break;
    }
    case NonlinearityKind::advection: {
      const RowMatrix u = inverse_transform(u_hat, grid);
      CRowMatrix ux_hat = u_hat;
      for (Eigen::Index f = 0; f < ux_hat.cols(); ++f) ux_hat.col(f) *= Complex(0.0, derivative_[f]);
      const RowMatrix ux = inverse_transform(ux_hat, grid);
      out = -forward_transform(RowMatrix(u.cwiseProduct(ux)), grid);
      break;
    }
    case NonlinearityKind::reaction: {
      const RowMatrix u = inverse_transform(u_hat, grid);
      RowMatrix r = RowMatrix::Zero(u.rows(), u.cols());
      // Horner evaluation of sum_i c_i u^i.
      for (auto it = nl.reaction.rbegin(); it != nl.reaction.rend(); ++it) {
        r = r.cwiseProduct(u);
        r.array() += *it;
      }
      out = forward_transform(r, grid);
      break;
    }
  }
  for (Eigen::Index f = 0; f < out.cols(); ++f) out.col(f) *= dealias_mask_[f];
  return out;
}

CRowMatrix SpectralSolver::etdrk4_step(const CRowMatrix& u_hat, double h) const {
  if (!(h > 0.0)) throw ConfigError("etdrk4_step: step must be positive");
  const Eigen::Index ns = symbol_.size();
  if (u_hat.cols() != ns) throw DimensionError("etdrk4_step: spectrum has wrong size");

  if (scenario_.is_linear()) {
    CRowMatrix out = u_hat;
    for (Eigen::Index f = 0; f < ns; ++f) out.col(f) *= std::exp(h * symbol_[f]);
    return out;
  }

  CVector e(ns), e2(ns), q(ns), f1(ns), f2(ns), f3(ns);
  for (Eigen::Index f = 0; f < ns; ++f) {
    const PhiCoefficients c = stable_phi_coefficients(symbol_[f], h);
    e[f] = c.exp_full;
    e2[f] = c.exp_half;
    q[f] = 0.5 * h * c.phi1_half;
    f1[f] = h * (c.phi1 - 3.0 * c.phi2 + 4.0 * c.phi3);
    f2[f] = h * (c.phi2 - 2.0 * c.phi3);
    f3[f] = h * (4.0 * c.phi3 - c.phi2);
  }
  auto scale = [&](const CVector& w, const CRowMatrix& m) {
    CRowMatrix r = m;
    for (Eigen::Index f = 0; f < ns; ++f) r.col(f) *= w[f];
    return r;
  };

  const CRowMatrix nu = nonlinear_term(u_hat);
  const CRowMatrix eu = scale(e2, u_hat);
  const CRowMatrix a = eu + scale(q, nu);
  const CRowMatrix na = nonlinear_term(a);
  const CRowMatrix b = eu + scale(q, na);
  const CRowMatrix nb = nonlinear_term(b);
  const CRowMatrix c = scale(e2, a) + scale(q, CRowMatrix(2.0 * nb - nu));
  const CRowMatrix nc = nonlinear_term(c);
  return scale(e, u_hat) + scale(f1, nu) + scale(f2, CRowMatrix(2.0 * (na + nb))) + scale(f3, nc);
}

RowMatrix SpectralSolver::advance(const RowMatrix& u, double duration, int substeps) const {
  if (substeps < 1) throw ConfigError("advance: substeps must be positive");
  const double h = duration / substeps;
  CRowMatrix u_hat = forward_transform(u, scenario_.grid);
  for (int s = 0; s < substeps; ++s) {
    u_hat = etdrk4_step(u_hat, h);
    if (!all_finite(u_hat)) {
      throw SolverDivergence("solver diverged in scenario " + scenario_.name + " at substep " +
                                 std::to_string(s),
                             s);
    }
  }
  return inverse_transform(u_hat, scenario_.grid);
}

RowMatrix SpectralSolver::data_step(const RowMatrix& u) const {
  return advance(u, scenario_.dt, scenario_.is_linear() ? 1 : scenario_.substeps);
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t split, std::uint64_t index) {
  return splitmix64(splitmix64(splitmix64(base) ^ (split + 0x51ED27ull)) ^ index);
}

RowMatrix random_initial_condition(const Scenario& scenario, std::uint64_t seed) {
  const auto& grid = scenario.grid;
  const SpectrumLayout layout(grid, std::vector<int>(grid.dim(), 1));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  const auto ns = static_cast<Eigen::Index>(grid.spectral_points());
  CRowMatrix spec = CRowMatrix::Zero(scenario.state_channels, ns);
  for (int c = 0; c < scenario.state_channels; ++c) {
    for (Eigen::Index f = 0; f < ns; ++f) {
      const Wavevector k = layout.wavevector(static_cast<std::size_t>(f));
      double norm2 = 0.0;
      bool nyquist = false;
      for (int a = 0; a < grid.dim(); ++a) {
        norm2 += static_cast<double>(k[a]) * k[a];
        nyquist = nyquist || std::abs(k[a]) == grid.n[a] / 2;
      }
      const double theta = phase(rng);  // drawn for every entry to keep the stream layout fixed
      if (norm2 == 0.0 || nyquist) continue;
      spec(c, f) = std::polar(std::exp(-scenario.ic.decay * std::sqrt(norm2)), theta);
    }
  }
  RowMatrix u = inverse_transform(spec, grid);
  for (Eigen::Index c = 0; c < u.rows(); ++c) {
    u.row(c).array() -= u.row(c).mean();
    const double rms = std::sqrt(u.row(c).squaredNorm() / static_cast<double>(u.cols()));
    if (rms > 0.0) u.row(c) *= scenario.ic.rms / rms;
  }
  return u;
}

TrajectorySet generate_trajectories(const Scenario& scenario, std::uint64_t seed, Split split,
                                    int count) {
  scenario.validate();
  const bool train = split == Split::train;
  const int num = count >= 0 ? count : (train ? scenario.num_train : scenario.num_test);
  const int steps = train ? scenario.t_train : scenario.t_test;

  TrajectoryMeta meta;
  meta.scenario = scenario.name;
  meta.dt = scenario.dt;
  meta.grid = scenario.grid;
  meta.seed = seed;
  meta.split = train ? "train" : "test";
  meta.substeps = scenario.is_linear() ? 1 : scenario.substeps;
  meta.stepper = scenario.is_linear() ? "exact" : "etdrk4";
  meta.dealias = scenario.dealias && !scenario.is_linear();
  meta.burn_in_steps = scenario.burn_in_steps;

  TrajectorySet set(meta, num, steps, scenario.state_channels);
  const SpectralSolver solver(scenario);
  for (int i = 0; i < num; ++i) {
    const std::uint64_t traj_seed = derive_seed(seed, train ? 0 : 1, static_cast<std::uint64_t>(i));
    RowMatrix u = random_initial_condition(scenario, traj_seed);
    try {
      for (int b = 0; b < scenario.burn_in_steps; ++b) u = solver.data_step(u);
      set.set_frame(i, 0, u);
      for (int t = 1; t < steps; ++t) {
        u = solver.data_step(u);
        set.set_frame(i, t, u);
      }
    } catch (const SolverDivergence& e) {
      throw SolverDivergence(std::string(e.what()) + " (trajectory " + std::to_string(i) +
                                 ", seed " + std::to_string(traj_seed) + ")",
                             e.step());
    }
  }
  return set;
}

}  // namespace sgno
