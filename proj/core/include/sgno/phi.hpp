#pragma once

#include "sgno/types.hpp"

namespace sgno {

/// phi1(z) = (e^z - 1) / z with phi1(0) = 1.
Complex phi1(Complex z);
/// phi2(z) = (e^z - 1 - z) / z^2 with phi2(0) = 1/2.
Complex phi2(Complex z);
/// phi3(z) = (e^z - 1 - z - z^2/2) / z^3 with phi3(0) = 1/6.
Complex phi3(Complex z);

double phi1(double x);

/// e^z - 1 without cancellation for small |z| or Re(z) ~ 0.
Complex expm1(Complex z);

/// Coefficients of one exponential-integrator step of size h for rate lambda.
struct PhiCoefficients {
  Complex exp_full;  // e^{h lambda}
  Complex exp_half;  // e^{h lambda / 2}
  Complex phi1_half; // phi1(h lambda / 2)
  Complex phi1;
  Complex phi2;
  Complex phi3;
};

PhiCoefficients stable_phi_coefficients(Complex lambda, double h);

}  // namespace sgno
