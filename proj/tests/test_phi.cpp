#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "phi_oracle.hpp"
#include "sgno/phi.hpp"

using namespace sgno;
using sgno::testing::phi_oracle;

namespace {

double rel(Complex a, Complex b) { return std::abs(a - b) / std::abs(b); }

}  // namespace

TEST(Phi, TaylorConstantsAtZero) {
  EXPECT_EQ(phi1(Complex(0.0)), Complex(1.0));
  EXPECT_EQ(phi1(0.0), 1.0);
  EXPECT_NEAR(std::abs(phi2(Complex(0.0)) - 0.5), 0.0, 1e-16);
  EXPECT_NEAR(std::abs(phi3(Complex(0.0)) - 1.0 / 6.0), 0.0, 1e-16);
}

TEST(Phi, MinusOne) {
  EXPECT_NEAR(phi1(-1.0), 0.6321205588285577, 1e-15);
  EXPECT_NEAR(phi1(Complex(-1.0)).real(), 0.6321205588285577, 1e-15);
}

TEST(Phi, MinusTwenty) {
  // (1 - e^{-20}) / 20
  EXPECT_NEAR(phi1(-20.0), 0.049999999896942, 1e-14);
}

TEST(Phi, ConjugateSymmetry) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-30.0, 30.0);
  for (int i = 0; i < 200; ++i) {
    const Complex z(u(rng), u(rng));
    EXPECT_EQ(phi1(std::conj(z)), std::conj(phi1(z)));
    EXPECT_EQ(phi2(std::conj(z)), std::conj(phi2(z)));
    EXPECT_EQ(phi3(std::conj(z)), std::conj(phi3(z)));
  }
}

TEST(Phi, MatchesSeriesOracle) {
  const std::vector<Complex> points = {{1e-9, 0.0}, {-5e-4, 2e-4}, {0.3, -0.9}, {-1.0, 1.0},   {1.0, 0.0},
                                       {-7.5, 3.0}, {12.0, -4.0}, {-49.0, 0.0}, {0.0, 33.0}, {35.0, 35.0}};
  for (const Complex z : points) {
    EXPECT_LT(rel(phi1(z), phi_oracle(z, 1)), 1e-12) << z;
    EXPECT_LT(rel(phi2(z), phi_oracle(z, 2)), 1e-12) << z;
    EXPECT_LT(rel(phi3(z), phi_oracle(z, 3)), 1e-12) << z;
  }
}

TEST(Phi, ScalarBoundInLeftHalfPlane) {
  // |phi1(z)| <= phi1(Re z) for Re z <= 0.
  for (double x = -40.0; x <= 0.0; x += 0.37) {
    for (double y = -40.0; y <= 40.0; y += 0.41) {
      EXPECT_LE(std::abs(phi1(Complex(x, y))), phi1(x) * (1.0 + 1e-14));
    }
  }
}

TEST(Phi, Expm1AccurateNearZero) {
  const Complex z(1e-10, 2e-10);
  EXPECT_LT(rel(expm1(z), phi_oracle(z, 1) * z), 1e-14);
}

TEST(Phi, CoefficientsBundle) {
  const Complex lambda(-2.0, 3.0);
  const double h = 0.25;
  const PhiCoefficients c = stable_phi_coefficients(lambda, h);
  EXPECT_LT(rel(c.exp_full, std::exp(h * lambda)), 1e-15);
  EXPECT_LT(rel(c.exp_half, std::exp(0.5 * h * lambda)), 1e-15);
  EXPECT_LT(rel(c.phi1_half, phi_oracle(0.5 * h * lambda, 1)), 1e-13);
  EXPECT_LT(rel(c.phi3, phi_oracle(h * lambda, 3)), 1e-13);
}
