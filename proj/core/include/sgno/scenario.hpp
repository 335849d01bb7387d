#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "sgno/spectral.hpp"
#include "sgno/types.hpp"

namespace sgno {

enum class NonlinearityKind {
  none,
  burgers,    // -1/2 d/dx (u^2), conservative form
  advection,  // -u du/dx
  reaction,   // r(u) = sum_i c_i u^i, pointwise
};

std::string to_string(NonlinearityKind kind);

struct Nonlinearity {
  NonlinearityKind kind = NonlinearityKind::none;
  /// Multiplies the derivative for burgers/advection (1/domain length).
  double scale = 1.0;
  /// Polynomial coefficients c_0, c_1, ... for reaction terms.
  std::vector<double> reaction;
};

/// Random initial conditions: Fourier magnitudes ~ exp(-decay |k|), random
/// phases, zero mean, normalized to unit RMS.
struct InitialConditionSpec {
  double decay = 0.5;
  double rms = 1.0;
};

/// Semilinear PDE u_t = L u + N(u) on the unit torus with a diagonal Fourier
/// symbol for L.
struct Scenario {
  std::string name;
  std::string description;
  GridSpec grid;
  std::function<Complex(const Wavevector&)> linear_symbol;
  Nonlinearity nonlinearity;
  double dt = 0.1;
  int t_train = 51;
  int t_test = 201;
  int num_train = 10;
  int num_test = 8;
  int substeps = 8;       // ETDRK4 substeps per data step for nonlinear scenarios
  int burn_in_steps = 0;  // data steps discarded before the first stored frame
  bool dealias = true;    // 2/3 rule on quadratic nonlinearities
  InitialConditionSpec ic{};
  int state_channels = 1;

  bool is_linear() const { return nonlinearity.kind == NonlinearityKind::none; }
  /// Throws ConfigError if the symbol has unbounded growth or dt <= 0.
  void validate() const;
};

/// Registered desk-scale scenarios.
std::vector<std::string> scenario_names();
/// Throws ConfigError listing the available names for unknown scenarios.
Scenario make_scenario(const std::string& name);
/// Same scenario on a different grid (resolution-shift test sets).
Scenario with_grid(Scenario scenario, GridSpec grid);

/// Heat equation u_t = nu u_xx on n points (diagnostic scenario).
Scenario heat_scenario(double nu, int n, double dt);

}  // namespace sgno
