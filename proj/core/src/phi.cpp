#include "sgno/phi.hpp"

#include <cmath>

namespace sgno {

namespace {

constexpr double kPhi1SeriesRadius = 1e-3;
// phi2/phi3 lose roughly one digit per power of 1/|z| in the direct form, so
// the series branch covers the whole unit disc.
constexpr double kHighOrderSeriesRadius = 1.0;

// sum_{j>=0} z^j / (j + offset)!
Complex phi_series(Complex z, int offset) {
  double fact = 1.0;
  for (int j = 2; j <= offset; ++j) fact *= j;
  Complex term = 1.0 / fact;
  Complex sum = term;
  for (int j = 1; j < 40; ++j) {
    term *= z / static_cast<double>(j + offset);
    sum += term;
    if (std::abs(term) <= 1e-18 * std::abs(sum)) break;
  }
  return sum;
}

}  // namespace

Complex expm1(Complex z) {
  const double x = z.real();
  const double y = z.imag();
  const double s = std::sin(0.5 * y);
  const double re = std::expm1(x) * std::cos(y) - 2.0 * s * s;
  const double im = std::exp(x) * std::sin(y);
  return {re, im};
}

Complex phi1(Complex z) {
  if (z == Complex(0.0, 0.0)) return 1.0;
  if (std::abs(z) < kPhi1SeriesRadius) {
    return 1.0 + z * (1.0 / 2.0 + z * (1.0 / 6.0 + z * (1.0 / 24.0 + z / 120.0)));
  }
  return expm1(z) / z;
}

double phi1(double x) {
  if (x == 0.0) return 1.0;
  if (std::abs(x) < kPhi1SeriesRadius) {
    return 1.0 + x * (1.0 / 2.0 + x * (1.0 / 6.0 + x * (1.0 / 24.0 + x / 120.0)));
  }
  return std::expm1(x) / x;
}

Complex phi2(Complex z) {
  if (std::abs(z) < kHighOrderSeriesRadius) return phi_series(z, 2);
  return (expm1(z) - z) / (z * z);
}

Complex phi3(Complex z) {
  if (std::abs(z) < kHighOrderSeriesRadius) return phi_series(z, 3);
  return (expm1(z) - z - 0.5 * z * z) / (z * z * z);
}

PhiCoefficients stable_phi_coefficients(Complex lambda, double h) {
  const Complex z = h * lambda;
  PhiCoefficients c;
  c.exp_full = std::exp(z);
  c.exp_half = std::exp(0.5 * z);
  c.phi1_half = phi1(0.5 * z);
  c.phi1 = phi1(z);
  c.phi2 = phi2(z);
  c.phi3 = phi3(z);
  return c;
}

}  // namespace sgno
