#include "sgno/scenario.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "sgno/errors.hpp"

namespace sgno {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Largest allowed growth per data step, Re(lambda) * dt.
constexpr double kMaxGrowthPerStep = 5.0;

Scenario diffusion1d() {
  Scenario s;
  s.name = "diffusion1d";
  s.description = "u_t = nu u_xx, nu = 0.01, n = 64, dt = 0.1 (exact propagator)";
  s.grid = GridSpec({64});
  constexpr double nu = 0.01;
  s.linear_symbol = [](const Wavevector& k) {
    const double kk = kTwoPi * k[0];
    return Complex(-nu * kk * kk, 0.0);
  };
  s.dt = 0.1;
  s.substeps = 1;
  return s;
}

Scenario dispersion1d() {
  Scenario s;
  s.name = "dispersion1d";
  s.description = "u_t = -c u_xxx, c = 1e-4, lambda = i c (2 pi k)^3, n = 64, dt = 0.5 (exact propagator)";
  s.grid = GridSpec({64});
  constexpr double c = 1e-4;
  s.linear_symbol = [](const Wavevector& k) {
    const double kk = kTwoPi * k[0];
    return Complex(0.0, c * kk * kk * kk);
  };
  s.dt = 0.5;
  s.substeps = 1;
  return s;
}

Scenario kdv1d() {
  Scenario s;
  s.name = "kdv1d";
  s.description =
      "u_t = -u u_x - delta^2 u_xxx, delta = 0.022, n = 64, dt = 0.01, ETDRK4 with 8 substeps, 2/3 dealiasing, "
      "initial RMS 0.5";
  s.grid = GridSpec({64});
  constexpr double delta = 0.022;
  s.linear_symbol = [](const Wavevector& k) {
    const double kk = kTwoPi * k[0];
    return Complex(0.0, delta * delta * kk * kk * kk);
  };
  s.nonlinearity = {NonlinearityKind::burgers, 1.0, {}};
  s.dt = 0.01;
  s.substeps = 8;
  s.ic.rms = 0.5;
  return s;
}

Scenario ks1d() {
  Scenario s;
  constexpr double length = 22.0;
  s.name = "ks1d";
  s.description =
      "u_t = -u u_x' - u_x'x' - u_x'x'x'x' on x' in [0, 22) mapped to the unit torus, "
      "lambda = kappa^2 - kappa^4 with kappa = 2 pi k / 22, n = 64, dt = 0.2, ETDRK4 with 8 "
      "substeps, 2/3 dealiasing, 500 burn-in steps";
  s.grid = GridSpec({64});
  s.linear_symbol = [](const Wavevector& k) {
    const double kappa = kTwoPi * k[0] / length;
    const double k2 = kappa * kappa;
    return Complex(k2 - k2 * k2, 0.0);
  };
  s.nonlinearity = {NonlinearityKind::advection, 1.0 / length, {}};
  s.dt = 0.2;
  s.substeps = 8;
  s.burn_in_steps = 500;
  return s;
}

Scenario aniso_diffusion2d() {
  Scenario s;
  s.name = "aniso_diffusion2d";
  s.description =
      "u_t = div(A grad u), lambda = -(2 pi)^2 k^T A k, A = [[1, 0.3], [0.3, 0.5]], n = 32x32, dt = 0.001 (exact)";
  s.grid = GridSpec({32, 32});
  s.linear_symbol = [](const Wavevector& k) {
    const double q = 1.0 * k[0] * k[0] + 2.0 * 0.3 * k[0] * k[1] + 0.5 * k[1] * k[1];
    return Complex(-kTwoPi * kTwoPi * q, 0.0);
  };
  s.dt = 0.001;
  s.substeps = 1;
  return s;
}

Scenario advection3d() {
  Scenario s;
  s.name = "advection3d";
  s.description =
      "u_t + c . grad u = 0, c = (1, 0.5, 0.25), n = 16^3, dt = 0.01 (exact); exercises d = 3 "
      "code paths only";
  s.grid = GridSpec({16, 16, 16});
  s.linear_symbol = [](const Wavevector& k) {
    const double dot = 1.0 * k[0] + 0.5 * k[1] + 0.25 * k[2];
    return Complex(0.0, -kTwoPi * dot);
  };
  s.dt = 0.01;
  s.substeps = 1;
  s.num_train = 4;
  s.t_train = 21;
  s.num_test = 2;
  s.t_test = 41;
  return s;
}

Scenario allen_cahn1d() {
  Scenario s;
  s.name = "allen_cahn1d";
  s.description = "u_t = nu u_xx + u - u^3, nu = 0.001, n = 64, dt = 0.1, ETDRK4 with 8 substeps";
  s.grid = GridSpec({64});
  constexpr double nu = 0.001;
  s.linear_symbol = [](const Wavevector& k) {
    const double kk = kTwoPi * k[0];
    return Complex(-nu * kk * kk, 0.0);
  };
  s.nonlinearity = {NonlinearityKind::reaction, 1.0, {0.0, 1.0, 0.0, -1.0}};
  s.dt = 0.1;
  s.substeps = 8;
  return s;
}

}  // namespace

std::string to_string(NonlinearityKind kind) {
  switch (kind) {
    case NonlinearityKind::none: return "none";
    case NonlinearityKind::burgers: return "burgers";
    case NonlinearityKind::advection: return "advection";
    case NonlinearityKind::reaction: return "reaction";
  }
  return "unknown";
}

void Scenario::validate() const {
  grid.validate();
  if (!(dt > 0.0)) throw ConfigError("scenario " + name + ": dt must be positive");
  if (!linear_symbol) throw ConfigError("scenario " + name + ": missing linear symbol");
  if (t_train < 1 || t_test < 1) throw ConfigError("scenario " + name + ": trajectory lengths must be positive");
  if (num_train < 0 || num_test < 0) throw ConfigError("scenario " + name + ": negative trajectory count");
  if (substeps < 1) throw ConfigError("scenario " + name + ": substeps must be positive");
  const SpectrumLayout layout(grid, std::vector<int>(grid.dim(), 1));
  double growth = -1e300;
  for (std::size_t f = 0; f < grid.spectral_points(); ++f) {
    growth = std::max(growth, linear_symbol(layout.wavevector(f)).real());
  }
  if (growth * dt > kMaxGrowthPerStep) {
    std::ostringstream os;
    os << "scenario " << name << ": linear symbol grows by exp(" << growth * dt << ") per step";
    throw ConfigError(os.str());
  }
}

std::vector<std::string> scenario_names() {
  return {"diffusion1d", "dispersion1d", "kdv1d", "ks1d", "aniso_diffusion2d", "advection3d",
          "allen_cahn1d"};
}

Scenario make_scenario(const std::string& name) {
  Scenario s;
  if (name == "diffusion1d") s = diffusion1d();
  else if (name == "dispersion1d") s = dispersion1d();
  else if (name == "kdv1d") s = kdv1d();
  else if (name == "ks1d") s = ks1d();
  else if (name == "aniso_diffusion2d") s = aniso_diffusion2d();
  else if (name == "advection3d") s = advection3d();
  else if (name == "allen_cahn1d") s = allen_cahn1d();
  else {
    std::ostringstream os;
    os << "unknown scenario '" << name << "'; available:";
    for (const auto& n : scenario_names()) os << ' ' << n;
    throw ConfigError(os.str());
  }
  s.validate();
  return s;
}

Scenario with_grid(Scenario scenario, GridSpec grid) {
  if (grid.dim() != scenario.grid.dim()) throw DimensionError("with_grid: dimension mismatch");
  scenario.grid = std::move(grid);
  scenario.validate();
  return scenario;
}

Scenario heat_scenario(double nu, int n, double dt) {
  Scenario s;
  s.name = "heat";
  s.description = "u_t = nu u_xx";
  s.grid = GridSpec({n});
  s.linear_symbol = [nu](const Wavevector& k) {
    const double kk = kTwoPi * k[0];
    return Complex(-nu * kk * kk, 0.0);
  };
  s.dt = dt;
  s.substeps = 1;
  s.validate();
  return s;
}

}  // namespace sgno
