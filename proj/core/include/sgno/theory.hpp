#pragma once

// Numerical checks of the block stability bound
//
//   q(dt) = L_sigma (e^{omega dt} + dt phi1(omega dt) alpha_g M L_G + alpha_w L_W),
//   q_data = 1 + L_proj L_lift q(dt_data / L)^L,
//
// and of the error recursion E_{n+1} <= q_data E_n + e(u_n). All Lipschitz
// constants are sampled suprema, hence lower bounds of the true constants.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sgno/evaluation.hpp"
#include "sgno/model.hpp"
#include "sgno/solver.hpp"

namespace sgno {

inline constexpr int kBoundReportSchemaVersion = 1;

struct SpectralNormEstimate {
  double value = 0.0;
  bool converged = true;
  int iterations = 0;
};

/// Largest singular value of `a` by power iteration on A^T A.
SpectralNormEstimate power_iteration_norm(const Eigen::MatrixXd& a, int max_iterations = 50,
                                          double tolerance = 1e-6);

/// Pointwise vectors (one column per sample) at which a net is probed.
struct NetLipschitz {
  double value = 0.0;
  std::size_t samples = 0;
  bool all_converged = true;
  std::string method;  // "jacobian-power" or "jacobian-power+pairwise"
};

/// Sup over the samples of the Jacobian spectral norm. Columns [first_col,
/// first_col + width) of the Jacobian are the probed inputs (width < 0: all).
NetLipschitz estimate_lipschitz(const PointwiseNet& net, const Eigen::MatrixXd& samples, std::uint64_t seed,
                                Eigen::Index first_col = 0, Eigen::Index width = -1);

struct LipschitzEstimates {
  double omega = 0.0;
  double L_G = 0.0;
  double L_W = 0.0;
  double L_lift = 0.0;
  double L_proj = 0.0;
  double L_sigma = 1.0;
  double M = 0.0;
  double alpha_g = 0.0;
  double alpha_w = 0.0;
  double R = 0.0;
  std::size_t num_samples = 0;
  std::string method;
};

/// q(dt) for the given constants.
double compute_q(const LipschitzEstimates& e, double dt);
double compute_q_data(const LipschitzEstimates& e, double dt_data, int blocks);

/// Latent block inputs harvested from teacher-forced frames plus Gaussian
/// perturbations at {1e-3, 1e-2, 1e-1} R.
struct SampleSet {
  std::vector<RowMatrix> states;   // physical states that produced the latents
  std::vector<RowMatrix> latents;  // block inputs [C, points]
  std::vector<RowMatrix> outputs;  // latents after all blocks, probed by the projection
  double R = 0.0;
};

SampleSet build_sample_set(const SgnoModel& model, const TrajectorySet& data, std::size_t max_frames,
                           std::uint64_t seed);

/// Slope bound used in q: identity when every block is the final one.
double block_slope_bound(const SgnoConfig& config);

LipschitzEstimates estimate_constants(const SgnoModel& model, const SampleSet& samples, std::uint64_t seed);

struct GainCheck {
  double q = 0.0;
  double max_block_gain = 0.0;
  double q_pow_L = 0.0;
  double max_composed_gain = 0.0;
  std::size_t pairs = 0;
  double tolerance = 1e-3;
  bool passed = false;
  std::size_t argmax_pair = 0;
  std::string detail;
};

/// Empirical ||Psi(v) - Psi(w)|| / ||v - w|| over far pairs of samples and
/// perturbation pairs at five magnitudes, against q(dt) (1 + tol); the L-fold
/// composition is checked against q^L (1 + tol).
GainCheck check_one_step_bound(const SgnoModel& model, const LipschitzEstimates& estimates,
                               const SampleSet& samples, std::size_t num_pairs, std::uint64_t seed,
                               double tolerance = 1e-3);

struct LemmaCheck {
  double exp_bound = 0.0;   // e^{omega dt}
  double phi_bound = 0.0;   // phi1(omega dt)
  double max_exp_ratio = 0.0;
  double max_phi_ratio = 0.0;
  double extremal_exp_ratio = 0.0;  // one-hot spectrum on the max Re(lambda) entry
  double extremal_phi_ratio = 0.0;
  std::size_t probes = 0;
  bool passed = false;
  std::string detail;
};

/// ||S s|| <= e^{omega dt} ||s|| and ||Phi s|| <= phi1(omega dt) ||s|| on
/// random spectra, with S = e^{dt Lambda} and Phi = phi1(dt Lambda).
LemmaCheck check_lemma_a1(const CRowMatrix& lambda, double dt, std::size_t probes, std::uint64_t seed,
                          double tolerance = 1e-10);

struct RecursionReport {
  double q_data = 0.0;
  std::vector<double> defects;  // e(u_n), n = 0..N-1
  std::vector<double> errors;   // E_n, n = 0..N
  std::vector<double> bound;    // unrolled bound, n = 0..N
  std::vector<double> tightness;
  double tolerance = 1e-3;
  bool passed = false;
  long first_violation = -1;
};

/// Teacher-forced defects e(u_n) = ||u_{n+1} - f(u_n)|| against the stored
/// reference frames, measured rollout errors E_n, and the unrolled bound
/// E_n <= q^n E_0 + sum_j q^{n-1-j} e(u_j).
RecursionReport check_error_recursion(const OneStepMap& f, double q_data, const TrajectorySet& truth,
                                      int trajectory, int steps, double tolerance = 1e-3);

struct LinearExactness {
  double max_rel_error = 0.0;
  bool passed = false;
  long first_bad_mode = -1;
};

/// With alpha_g = alpha_w = 0 and sigma = identity, the L-block latent map
/// must equal multiplication by e^{dt_data Lambda} on K and zero elsewhere.
LinearExactness linear_exactness_probe(const SgnoModel& model, const RowMatrix& latent, double tolerance = 1e-10);

struct RefinementRow {
  int blocks = 1;
  double q = 0.0;
  double q_pow_L = 0.0;
};
/// q(dt_data / L)^L for each L, holding the constants fixed.
std::vector<RefinementRow> substep_refinement(const LipschitzEstimates& e, double dt_data,
                                              const std::vector<int>& blocks = {1, 2, 4, 8});

struct BoundReport {
  LipschitzEstimates estimates;
  GainCheck gain;
  LemmaCheck lemma;
  std::vector<RecursionReport> recursion;
  std::vector<RefinementRow> refinement;
  double q_dt = 0.0;
  double q_dt_pow_L = 0.0;
  double q_data = 0.0;
};

nlohmann::json to_json(const BoundReport& report);
std::string summary_table(const BoundReport& report);

}  // namespace sgno
