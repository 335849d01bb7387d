#pragma once

// The learned one-step operator
//
//   f(u) = u + Proj( Psi^L( Lift([u; x]) ) ),
//
// where every time-advance block Psi advances latent features with an
// exponential (ETD Euler) update in Fourier space: a diagonal generator with
// nonpositive real part propagates the retained modes, and a phi1-weighted,
// per-mode channel-mixed forcing term injects the nonlinear residual.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sgno/pointwise_net.hpp"
#include "sgno/spectral.hpp"
#include "sgno/types.hpp"

namespace sgno {

/// Where the smooth mask is applied. `all` exists only for ablations.
enum class MaskPlacement { forcing, all };

std::string to_string(MaskPlacement p);
MaskPlacement mask_placement_from_string(const std::string& name);

struct SgnoConfig {
  int width = 28;                      // latent channels C
  std::vector<int> modes_per_axis{28};
  int num_blocks = 1;                  // L
  double dt_data = 1.0;                // data step; blocks use dt_data / L
  double alpha_g = 1.0;
  double alpha_w = 0.6;
  FilterSpec filter{};
  MaskPlacement mask_placement = MaskPlacement::forcing;
  Activation sigma = Activation::silu;  // non-final blocks; the final block is identity
  int history = 1;
  int padding = 0;
  int hidden = 0;                      // pointwise hidden width, 0 means `width`
  bool use_beta = false;
  double lambda_margin = 0.0;          // epsilon_lambda
  std::optional<double> mixing_norm_cap;
  int state_channels = 1;
  // Carried for completeness of the default table; no behavior attached.
  int initial_step = 1;
  int inner_steps = 1;

  double internal_dt() const { return dt_data / num_blocks; }
  int hidden_width() const { return hidden > 0 ? hidden : width; }
  /// Throws ConfigError on invalid knobs.
  void validate() const;

  /// Default configuration per spatial dimension (width, modes, L, filter, gains).
  static SgnoConfig defaults_for_dimension(int dim);

  bool operator==(const SgnoConfig&) const = default;
};

/// Raw generator parameters over the retained modes: [K, C].
struct GeneratorParams {
  RowMatrix eta;
  RowMatrix beta;  // empty unless use_beta
};

/// Per-mode complex mixing matrices stored as real/imaginary parts [K, C*C].
struct MixingParams {
  RowMatrix real;
  RowMatrix imag;

  CMatrix matrix(Eigen::Index mode, Eigen::Index channels) const;
};

struct SgnoParams {
  GeneratorParams generator;
  MixingParams mixing;
  PointwiseNet lift;
  PointwiseNet proj;
  PointwiseNet forcing;     // G
  PointwiseNet correction;  // W

  /// Calls f(name, shape, span) for every parameter tensor in a fixed order.
  template <class F>
  void visit(F&& f);
  template <class F>
  void visit(F&& f) const;

  SgnoParams zeros_like() const;
  std::size_t size() const;
  void set_zero();
};

struct ParameterCount {
  std::size_t generator = 0;
  std::size_t mixing = 0;
  std::size_t lift = 0;
  std::size_t proj = 0;
  std::size_t forcing = 0;
  std::size_t correction = 0;

  std::size_t total() const { return generator + mixing + lift + proj + forcing + correction; }
};

/// Number of retained modes for a cutoff vector (independent of the grid size).
std::size_t retained_mode_count(const std::vector<int>& modes_per_axis, int dim);
ParameterCount count_parameters(const SgnoConfig& config, int dim);

/// softplus(x) = log(1 + e^x), evaluated without overflow.
double softplus(double x);

/// Per-call spectral operators shared by all L blocks of one step.
struct BlockOperators {
  CRowMatrix lambda;       // [K, C]
  CRowMatrix propagator;   // exp(dt lambda)
  CRowMatrix forcing_gain; // dt phi1(dt lambda)
  std::vector<CMatrix> mixing;  // capped M(k)
  std::vector<double> mixing_scale;  // cap scale applied per mode (1 if inactive)
  Vector mask;             // F(k)
};

class SgnoModel {
 public:
  SgnoModel() = default;
  /// Zero-initialized parameters.
  SgnoModel(SgnoConfig config, GridSpec grid);
  /// Seeded initialization with a zeroed projection output layer, so the
  /// model starts as the identity map.
  static SgnoModel initialize(SgnoConfig config, GridSpec grid, std::uint64_t seed);

  const SgnoConfig& config() const noexcept { return config_; }
  SgnoConfig& mutable_config() noexcept { return config_; }
  const GridSpec& grid() const noexcept { return grid_; }
  /// Mode bookkeeping on the (possibly padded) transform grid.
  const SpectrumLayout& layout() const noexcept { return layout_; }
  SgnoParams& params() noexcept { return params_; }
  const SgnoParams& params() const noexcept { return params_; }

  /// lambda = -softplus(eta) - margin + i beta, shape [K, C].
  CRowMatrix stabilized_lambda() const;
  double max_real_lambda() const;
  /// Mixing matrices after the optional spectral-norm cap.
  std::vector<CMatrix> capped_mixing() const;
  Vector forcing_mask() const;
  BlockOperators operators() const;

  RowMatrix lift(const RowMatrix& state) const;
  RowMatrix project(const RowMatrix& latent) const;
  RowMatrix time_advance_block(const RowMatrix& latent, bool is_final) const;
  RowMatrix time_advance_block(const BlockOperators& ops, const RowMatrix& latent,
                               bool is_final) const;
  /// L blocks with shared parameters.
  RowMatrix advance(const RowMatrix& latent) const;
  RowMatrix one_step(const RowMatrix& state) const;

  struct BlockTape {
    RowMatrix input;
    PointwiseNet::Cache forcing_cache;
    PointwiseNet::Cache correction_cache;
    CRowMatrix v_hat;   // [C, K]
    CRowMatrix g_hat;   // [C, K]
    CRowMatrix mixed;   // [C, K]
    RowMatrix pre;
    bool is_final = true;
  };

  struct Tape {
    BlockOperators ops;
    PointwiseNet::Cache lift_cache;
    PointwiseNet::Cache proj_cache;
    std::vector<BlockTape> blocks;
  };

  RowMatrix forward(const RowMatrix& state, Tape& tape) const;
  /// Accumulates dL/dparams into `grad` given dL/d(next state).
  void backward(const Tape& tape, const RowMatrix& d_next, SgnoParams& grad) const;

 private:
  RowMatrix lift_input(const RowMatrix& state) const;
  RowMatrix block_forward(const BlockOperators& ops, const RowMatrix& v, bool is_final,
                          BlockTape* tape) const;
  RowMatrix block_backward(const BlockOperators& ops, const BlockTape& tape, const RowMatrix& d_out,
                           SgnoParams& grad, CRowMatrix& d_lambda,
                           std::vector<CMatrix>& d_mixing) const;
  RowMatrix to_spectral_grid(const RowMatrix& field) const;
  RowMatrix from_spectral_grid(const RowMatrix& field) const;

  SgnoConfig config_;
  GridSpec grid_;
  SpectrumLayout layout_;
  RowMatrix coordinates_;
  SgnoParams params_;
};

template <class F>
void SgnoParams::visit(F&& f) {
  auto mat = [&](const std::string& name, RowMatrix& m) {
    f(name, std::vector<std::size_t>{static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())},
      std::span<double>(m.data(), static_cast<std::size_t>(m.size())));
  };
  auto vec = [&](const std::string& name, Vector& v) {
    f(name, std::vector<std::size_t>{static_cast<std::size_t>(v.size())},
      std::span<double>(v.data(), static_cast<std::size_t>(v.size())));
  };
  auto net = [&](const std::string& prefix, PointwiseNet& n) {
    mat(prefix + ".first.weight", n.first.weight);
    vec(prefix + ".first.bias", n.first.bias);
    mat(prefix + ".second.weight", n.second.weight);
    vec(prefix + ".second.bias", n.second.bias);
  };
  mat("generator.eta", generator.eta);
  if (generator.beta.size() > 0) mat("generator.beta", generator.beta);
  mat("mixing.real", mixing.real);
  mat("mixing.imag", mixing.imag);
  net("lift", lift);
  net("proj", proj);
  net("forcing", forcing);
  net("correction", correction);
}

template <class F>
void SgnoParams::visit(F&& f) const {
  const_cast<SgnoParams*>(this)->visit(
      [&](const std::string& name, const std::vector<std::size_t>& shape, std::span<double> data) {
        f(name, shape, std::span<const double>(data.data(), data.size()));
      });
}

}  // namespace sgno
