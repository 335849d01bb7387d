#include "sgno/model.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <random>

#include "sgno/errors.hpp"
#include "sgno/phi.hpp"

namespace sgno {

namespace {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double spectral_norm(const CMatrix& m) {
  Eigen::JacobiSVD<CMatrix> svd(m);
  return svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
}

}  // namespace

std::string to_string(MaskPlacement p) { return p == MaskPlacement::all ? "all" : "forcing"; }

MaskPlacement mask_placement_from_string(const std::string& name) {
  if (name == "forcing") return MaskPlacement::forcing;
  if (name == "all") return MaskPlacement::all;
  throw ConfigError("unknown mask placement '" + name + "' (expected forcing or all)");
}

double softplus(double x) {
  if (x > 30.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

void SgnoConfig::validate() const {
  if (width < 1) throw ConfigError("width must be positive");
  if (num_blocks < 1) throw ConfigError("number of blocks must be positive");
  if (!(dt_data > 0.0)) throw ConfigError("data step must be positive");
  if (alpha_g < 0.0 || alpha_w < 0.0) throw ConfigError("alpha_g and alpha_w must be nonnegative");
  if (history != 1) throw ConfigError("only history length 1 is supported");
  if (padding < 0) throw ConfigError("padding must be nonnegative");
  if (lambda_margin < 0.0) throw ConfigError("lambda margin must be nonnegative");
  if (mixing_norm_cap && !(*mixing_norm_cap > 0.0)) throw ConfigError("mixing norm cap must be positive");
  if (state_channels < 1) throw ConfigError("state channels must be positive");
  if (modes_per_axis.empty()) throw ConfigError("modes_per_axis is empty");
  filter.validate();
}

SgnoConfig SgnoConfig::defaults_for_dimension(int dim) {
  SgnoConfig c;
  switch (dim) {
    case 1:
      c.width = 28;
      c.modes_per_axis = {28};
      c.num_blocks = 1;
      c.filter = {FilterKind::none, 1.0, 8};
      c.alpha_w = 0.6;
      c.alpha_g = 1.0;
      break;
    case 2:
      c.width = 20;
      c.modes_per_axis = {8, 8};
      c.num_blocks = 1;
      c.filter = {FilterKind::smooth, 1.0, 8};
      c.alpha_w = 1.0;
      c.alpha_g = 10.0;
      break;
    case 3:
      c.width = 4;
      c.modes_per_axis = {8, 8, 8};
      c.num_blocks = 5;
      c.filter = {FilterKind::none, 1.0, 8};
      c.alpha_w = 1.0;
      c.alpha_g = 10.0;
      break;
    default:
      throw ConfigError("no default configuration for dimension " + std::to_string(dim));
  }
  return c;
}

CMatrix MixingParams::matrix(Eigen::Index mode, Eigen::Index channels) const {
  CMatrix m(channels, channels);
  for (Eigen::Index i = 0; i < channels; ++i)
    for (Eigen::Index j = 0; j < channels; ++j)
      m(i, j) = Complex(real(mode, i * channels + j), imag(mode, i * channels + j));
  return m;
}

SgnoParams SgnoParams::zeros_like() const {
  SgnoParams z = *this;
  z.set_zero();
  return z;
}

void SgnoParams::set_zero() {
  visit([](const std::string&, const std::vector<std::size_t>&, std::span<double> d) {
    std::fill(d.begin(), d.end(), 0.0);
  });
}

std::size_t SgnoParams::size() const {
  std::size_t n = 0;
  visit([&](const std::string&, const std::vector<std::size_t>&, std::span<const double> d) {
    n += d.size();
  });
  return n;
}

std::size_t retained_mode_count(const std::vector<int>& modes_per_axis, int dim) {
  std::vector<int> m = modes_per_axis;
  if (m.size() == 1 && dim > 1) m.assign(dim, m.front());
  if (static_cast<int>(m.size()) != dim) throw DimensionError("modes_per_axis does not match dimension");
  std::size_t k = 1;
  for (int a = 0; a + 1 < dim; ++a) k *= static_cast<std::size_t>(2 * m[a] - 1);
  return k * static_cast<std::size_t>(m.back());
}

ParameterCount count_parameters(const SgnoConfig& config, int dim) {
  const std::size_t k = retained_mode_count(config.modes_per_axis, dim);
  const std::size_t c = config.width;
  const std::size_t h = config.hidden_width();
  const std::size_t cu = config.state_channels;
  const std::size_t lift_in = cu * config.history + dim;
  auto net = [](std::size_t in, std::size_t hid, std::size_t out) {
    return in * hid + hid + hid * out + out;
  };
  ParameterCount p;
  p.generator = k * c * (config.use_beta ? 2 : 1);
  p.mixing = 2 * k * c * c;
  p.lift = net(lift_in, h, c);
  p.proj = net(c, h, cu);
  p.forcing = net(c, h, c);
  p.correction = net(c, h, c);
  return p;
}

SgnoModel::SgnoModel(SgnoConfig config, GridSpec grid)
    : config_(std::move(config)), grid_(std::move(grid)) {
  config_.validate();
  grid_.validate();
  layout_ = SpectrumLayout(padded_grid(grid_, config_.padding), config_.modes_per_axis);
  coordinates_ = grid_coordinates(grid_);
  const Eigen::Index k = static_cast<Eigen::Index>(layout_.num_retained());
  const Eigen::Index c = config_.width;
  const Eigen::Index h = config_.hidden_width();
  const Eigen::Index cu = config_.state_channels;
  params_.generator.eta = RowMatrix::Zero(k, c);
  if (config_.use_beta) params_.generator.beta = RowMatrix::Zero(k, c);
  params_.mixing.real = RowMatrix::Zero(k, c * c);
  params_.mixing.imag = RowMatrix::Zero(k, c * c);
  params_.lift = PointwiseNet::zeros(cu * config_.history + grid_.dim(), h, c);
  params_.proj = PointwiseNet::zeros(c, h, cu);
  params_.forcing = PointwiseNet::zeros(c, h, c);
  params_.correction = PointwiseNet::zeros(c, h, c);
}

SgnoModel SgnoModel::initialize(SgnoConfig config, GridSpec grid, std::uint64_t seed) {
  SgnoModel model(std::move(config), std::move(grid));
  std::mt19937_64 rng(seed);
  const auto& cfg = model.config_;
  const Eigen::Index c = cfg.width;
  const Eigen::Index h = cfg.hidden_width();
  const Eigen::Index cu = cfg.state_channels;
  auto& p = model.params_;

  std::normal_distribution<double> eta_dist(0.0, 0.5);
  for (Eigen::Index i = 0; i < p.generator.eta.size(); ++i) p.generator.eta.data()[i] = eta_dist(rng);

  std::normal_distribution<double> mix_dist(0.0, 0.02 / std::sqrt(static_cast<double>(c)));
  for (Eigen::Index m = 0; m < p.mixing.real.rows(); ++m) {
    for (Eigen::Index i = 0; i < c; ++i) {
      for (Eigen::Index j = 0; j < c; ++j) {
        p.mixing.real(m, i * c + j) = (i == j ? 1.0 : 0.0) + mix_dist(rng);
        p.mixing.imag(m, i * c + j) = mix_dist(rng);
      }
    }
  }
  p.lift = PointwiseNet::random(cu * cfg.history + model.grid_.dim(), h, c, rng);
  p.forcing = PointwiseNet::random(c, h, c, rng);
  p.correction = PointwiseNet::random(c, h, c, rng);
  p.proj = PointwiseNet::random(c, h, cu, rng, /*zero_output=*/true);
  return model;
}

CRowMatrix SgnoModel::stabilized_lambda() const {
  const auto& eta = params_.generator.eta;
  CRowMatrix lambda(eta.rows(), eta.cols());
  const bool beta = config_.use_beta && params_.generator.beta.size() == eta.size();
  for (Eigen::Index k = 0; k < eta.rows(); ++k) {
    for (Eigen::Index c = 0; c < eta.cols(); ++c) {
      const double re = -softplus(eta(k, c)) - config_.lambda_margin;
      lambda(k, c) = Complex(re, beta ? params_.generator.beta(k, c) : 0.0);
    }
  }
  return lambda;
}

double SgnoModel::max_real_lambda() const {
  return stabilized_lambda().real().maxCoeff();
}

std::vector<CMatrix> SgnoModel::capped_mixing() const {
  const Eigen::Index c = config_.width;
  std::vector<CMatrix> out;
  out.reserve(layout_.num_retained());
  for (std::size_t k = 0; k < layout_.num_retained(); ++k) {
    CMatrix m = params_.mixing.matrix(static_cast<Eigen::Index>(k), c);
    if (config_.mixing_norm_cap) {
      const double norm = spectral_norm(m);
      if (norm > *config_.mixing_norm_cap) m *= *config_.mixing_norm_cap / norm;
    }
    out.push_back(std::move(m));
  }
  return out;
}

Vector SgnoModel::forcing_mask() const { return smooth_mask(layout_, config_.filter); }

BlockOperators SgnoModel::operators() const {
  BlockOperators ops;
  ops.lambda = stabilized_lambda();
  const double dt = config_.internal_dt();
  ops.propagator.resize(ops.lambda.rows(), ops.lambda.cols());
  ops.forcing_gain.resize(ops.lambda.rows(), ops.lambda.cols());
  for (Eigen::Index i = 0; i < ops.lambda.size(); ++i) {
    const Complex z = dt * ops.lambda.data()[i];
    ops.propagator.data()[i] = std::exp(z);
    ops.forcing_gain.data()[i] = dt * phi1(z);
  }
  const Eigen::Index c = config_.width;
  ops.mixing.reserve(layout_.num_retained());
  ops.mixing_scale.assign(layout_.num_retained(), 1.0);
  for (std::size_t k = 0; k < layout_.num_retained(); ++k) {
    CMatrix m = params_.mixing.matrix(static_cast<Eigen::Index>(k), c);
    if (config_.mixing_norm_cap) {
      const double norm = spectral_norm(m);
      if (norm > *config_.mixing_norm_cap) {
        ops.mixing_scale[k] = *config_.mixing_norm_cap / norm;
        m *= ops.mixing_scale[k];
      }
    }
    ops.mixing.push_back(std::move(m));
  }
  ops.mask = forcing_mask();
  return ops;
}

RowMatrix SgnoModel::lift_input(const RowMatrix& state) const {
  if (state.rows() != config_.state_channels ||
      static_cast<std::size_t>(state.cols()) != grid_.points()) {
    throw DimensionError("state has shape " + std::to_string(state.rows()) + "x" +
                         std::to_string(state.cols()) + ", model expects " +
                         std::to_string(config_.state_channels) + "x" + std::to_string(grid_.points()));
  }
  RowMatrix in(state.rows() + coordinates_.rows(), state.cols());
  in.topRows(state.rows()) = state;
  in.bottomRows(coordinates_.rows()) = coordinates_;
  return in;
}

RowMatrix SgnoModel::lift(const RowMatrix& state) const {
  return params_.lift.forward(lift_input(state));
}

RowMatrix SgnoModel::project(const RowMatrix& latent) const { return params_.proj.forward(latent); }

RowMatrix SgnoModel::to_spectral_grid(const RowMatrix& field) const {
  return pad_field(field, grid_, config_.padding);
}

RowMatrix SgnoModel::from_spectral_grid(const RowMatrix& field) const {
  return crop_field(field, grid_, config_.padding);
}

RowMatrix SgnoModel::block_forward(const BlockOperators& ops, const RowMatrix& v, bool is_final,
                                   BlockTape* tape) const {
  const Eigen::Index c = config_.width;
  if (v.rows() != c || static_cast<std::size_t>(v.cols()) != grid_.points()) {
    throw DimensionError("latent field has wrong shape for this model");
  }
  const Eigen::Index nk = static_cast<Eigen::Index>(layout_.num_retained());
  const bool forcing_on = config_.alpha_g != 0.0;
  const bool correction_on = config_.alpha_w != 0.0;

  PointwiseNet::Cache scratch_g, scratch_w;
  auto& g_cache = tape ? tape->forcing_cache : scratch_g;
  auto& w_cache = tape ? tape->correction_cache : scratch_w;

  const CRowMatrix v_hat = gather_retained(forward_transform(to_spectral_grid(v), layout_), layout_);
  CRowMatrix g_hat = CRowMatrix::Zero(c, nk);
  CRowMatrix mixed = CRowMatrix::Zero(c, nk);
  if (forcing_on) {
    const RowMatrix g = config_.alpha_g * params_.forcing.forward(v, g_cache);
    g_hat = gather_retained(forward_transform(to_spectral_grid(g), layout_), layout_);
    for (Eigen::Index k = 0; k < nk; ++k) mixed.col(k) = ops.mixing[k] * g_hat.col(k);
  }

  CRowMatrix out_hat(c, nk);
  const bool mask_all = config_.mask_placement == MaskPlacement::all;
  for (Eigen::Index k = 0; k < nk; ++k) {
    const double f = ops.mask[k];
    for (Eigen::Index ch = 0; ch < c; ++ch) {
      const Complex lin = ops.propagator(k, ch) * v_hat(ch, k);
      const Complex force = ops.forcing_gain(k, ch) * mixed(ch, k);
      out_hat(ch, k) = mask_all ? f * (lin + force) : lin + f * force;
    }
  }
  RowMatrix pre = from_spectral_grid(inverse_transform(scatter_retained(out_hat, layout_), layout_));
  if (correction_on) pre += config_.alpha_w * params_.correction.forward(v, w_cache);

  for (Eigen::Index i = 0; i < pre.size(); ++i) {
    if (!std::isfinite(pre.data()[i])) throw NumericError("non-finite value in time-advance block");
  }

  RowMatrix out;
  if (is_final) {
    out = pre;
  } else {
    apply_activation(config_.sigma, pre, out);
  }
  if (tape) {
    tape->input = v;
    tape->v_hat = v_hat;
    tape->g_hat = std::move(g_hat);
    tape->mixed = std::move(mixed);
    tape->pre = std::move(pre);
    tape->is_final = is_final;
  }
  return out;
}

RowMatrix SgnoModel::time_advance_block(const RowMatrix& latent, bool is_final) const {
  return block_forward(operators(), latent, is_final, nullptr);
}

RowMatrix SgnoModel::time_advance_block(const BlockOperators& ops, const RowMatrix& latent,
                                        bool is_final) const {
  return block_forward(ops, latent, is_final, nullptr);
}

RowMatrix SgnoModel::advance(const RowMatrix& latent) const {
  const BlockOperators ops = operators();
  RowMatrix v = latent;
  for (int l = 0; l < config_.num_blocks; ++l) {
    try {
      v = block_forward(ops, v, l + 1 == config_.num_blocks, nullptr);
    } catch (const NumericError& e) {
      throw NumericError(std::string(e.what()) + " (block " + std::to_string(l) + ")");
    }
  }
  return v;
}

RowMatrix SgnoModel::one_step(const RowMatrix& state) const {
  return state + project(advance(lift(state)));
}

RowMatrix SgnoModel::forward(const RowMatrix& state, Tape& tape) const {
  tape.ops = operators();
  tape.blocks.assign(config_.num_blocks, BlockTape{});
  RowMatrix v = params_.lift.forward(lift_input(state), tape.lift_cache);
  for (int l = 0; l < config_.num_blocks; ++l) {
    try {
      v = block_forward(tape.ops, v, l + 1 == config_.num_blocks, &tape.blocks[l]);
    } catch (const NumericError& e) {
      throw NumericError(std::string(e.what()) + " (block " + std::to_string(l) + ")");
    }
  }
  return state + params_.proj.forward(v, tape.proj_cache);
}

RowMatrix SgnoModel::block_backward(const BlockOperators& ops, const BlockTape& tape,
                                    const RowMatrix& d_out, SgnoParams& grad, CRowMatrix& d_lambda,
                                    std::vector<CMatrix>& d_mixing) const {
  const Eigen::Index c = config_.width;
  const Eigen::Index nk = static_cast<Eigen::Index>(layout_.num_retained());
  const double dt = config_.internal_dt();
  const bool forcing_on = config_.alpha_g != 0.0;
  const bool mask_all = config_.mask_placement == MaskPlacement::all;

  const RowMatrix d_pre = tape.is_final ? d_out : activation_backward(config_.sigma, tape.pre, d_out);

  RowMatrix d_v = RowMatrix::Zero(c, d_pre.cols());
  if (config_.alpha_w != 0.0) {
    d_v += params_.correction.backward(tape.correction_cache, config_.alpha_w * d_pre, grad.correction);
  }

  // Packed (real-pair) gradient of the stored retained coefficients.
  CRowMatrix d_hat = gather_retained(forward_transform(to_spectral_grid(d_pre), layout_), layout_);
  const auto& w = layout_.retained_weights();
  for (Eigen::Index k = 0; k < nk; ++k) d_hat.col(k) *= w[k];

  CRowMatrix d_v_hat(c, nk);
  CRowMatrix d_mixed(c, nk);
  for (Eigen::Index k = 0; k < nk; ++k) {
    const double f = ops.mask[k];
    for (Eigen::Index ch = 0; ch < c; ++ch) {
      const Complex d_lin = mask_all ? f * d_hat(ch, k) : d_hat(ch, k);
      const Complex d_force = f * d_hat(ch, k);
      const Complex e = ops.propagator(k, ch);
      const Complex p = ops.forcing_gain(k, ch);
      const Complex z = dt * ops.lambda(k, ch);
      d_v_hat(ch, k) = std::conj(e) * d_lin;
      Complex dl = std::conj(dt * e) * (d_lin * std::conj(tape.v_hat(ch, k)));
      if (forcing_on) {
        const Complex dphi = dt * dt * (phi1(z) - phi2(z));
        dl += std::conj(dphi) * (d_force * std::conj(tape.mixed(ch, k)));
        d_mixed(ch, k) = std::conj(p) * d_force;
      }
      d_lambda(k, ch) += dl;
    }
  }

  // Back to physical space: adjoint of the weighted c2r is c2r(D / w).
  for (Eigen::Index k = 0; k < nk; ++k) d_v_hat.col(k) /= w[k];
  d_v += from_spectral_grid(inverse_transform(scatter_retained(d_v_hat, layout_), layout_));

  if (forcing_on) {
    CRowMatrix d_g_hat(c, nk);
    for (Eigen::Index k = 0; k < nk; ++k) {
      d_mixing[k] += d_mixed.col(k) * tape.g_hat.col(k).adjoint();
      d_g_hat.col(k) = ops.mixing[k].adjoint() * d_mixed.col(k) / w[k];
    }
    const RowMatrix d_g =
        from_spectral_grid(inverse_transform(scatter_retained(d_g_hat, layout_), layout_));
    d_v += params_.forcing.backward(tape.forcing_cache, config_.alpha_g * d_g, grad.forcing);
  }
  return d_v;
}

void SgnoModel::backward(const Tape& tape, const RowMatrix& d_next, SgnoParams& grad) const {
  const Eigen::Index c = config_.width;
  const std::size_t nk = layout_.num_retained();
  RowMatrix d_v = params_.proj.backward(tape.proj_cache, d_next, grad.proj);

  CRowMatrix d_lambda = CRowMatrix::Zero(static_cast<Eigen::Index>(nk), c);
  std::vector<CMatrix> d_mixing(nk, CMatrix::Zero(c, c));
  for (int l = config_.num_blocks - 1; l >= 0; --l) {
    d_v = block_backward(tape.ops, tape.blocks[l], d_v, grad, d_lambda, d_mixing);
  }
  params_.lift.backward(tape.lift_cache, d_v, grad.lift);

  // lambda = -softplus(eta) - margin + i beta
  for (Eigen::Index k = 0; k < d_lambda.rows(); ++k) {
    for (Eigen::Index ch = 0; ch < c; ++ch) {
      grad.generator.eta(k, ch) += -d_lambda(k, ch).real() * sigmoid(params_.generator.eta(k, ch));
      if (config_.use_beta && grad.generator.beta.size() > 0) {
        grad.generator.beta(k, ch) += d_lambda(k, ch).imag();
      }
    }
  }

  for (std::size_t k = 0; k < nk; ++k) {
    CMatrix g = d_mixing[k];
    const double s = tape.ops.mixing_scale[k];
    if (s < 1.0) {
      // M = cap * Mbar / sigma_max(Mbar)
      const CMatrix raw = params_.mixing.matrix(static_cast<Eigen::Index>(k), c);
      Eigen::JacobiSVD<CMatrix> svd(raw, Eigen::ComputeFullU | Eigen::ComputeFullV);
      const double sigma = svd.singularValues()(0);
      const CMatrix uv = svd.matrixU().col(0) * svd.matrixV().col(0).adjoint();
      const double inner = (g.adjoint() * raw).trace().real();
      g = s * g - (s / sigma) * inner * uv;
    }
    for (Eigen::Index i = 0; i < c; ++i) {
      for (Eigen::Index j = 0; j < c; ++j) {
        grad.mixing.real(static_cast<Eigen::Index>(k), i * c + j) += g(i, j).real();
        grad.mixing.imag(static_cast<Eigen::Index>(k), i * c + j) += g(i, j).imag();
      }
    }
  }
}

}  // namespace sgno
