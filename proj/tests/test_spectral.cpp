#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "sgno/errors.hpp"
#include "sgno/spectral.hpp"
#include "support.hpp"

using namespace sgno;
using sgno::testing::cosine_mode;
using sgno::testing::random_field;
using sgno::testing::rel_error;

TEST(Transform, ConstantFieldIsDcOnly) {
  const GridSpec grid({16});
  const RowMatrix u = RowMatrix::Constant(1, 16, 0.7);
  const CRowMatrix s = forward_transform(u, grid);
  EXPECT_NEAR(std::norm(s(0, 0)), 16 * 0.49, 1e-12);
  for (Eigen::Index j = 1; j < s.cols(); ++j) EXPECT_LT(std::abs(s(0, j)), 1e-14);
}

TEST(Transform, CosineEnergyOnSingleStoredMode) {
  const GridSpec grid({64});
  const SpectrumLayout layout(grid, {8});
  const CRowMatrix s = forward_transform(cosine_mode(64, 1), grid);
  EXPECT_DOUBLE_EQ(layout.parseval_weight(1), 2.0);
  EXPECT_NEAR(layout.parseval_weight(1) * std::norm(s(0, 1)), 32.0, 1e-10);
  EXPECT_NEAR(spectral_energy(s, grid), 32.0, 1e-10);
}

TEST(Transform, ParsevalAndRoundTrip) {
  std::mt19937_64 rng(1);
  for (const GridSpec& grid : {GridSpec({64}), GridSpec({16, 12}), GridSpec({8, 10, 12})}) {
    const RowMatrix u = random_field(3, static_cast<Eigen::Index>(grid.points()), rng);
    const CRowMatrix s = forward_transform(u, grid);
    EXPECT_EQ(s.cols(), static_cast<Eigen::Index>(grid.spectral_points()));
    EXPECT_NEAR(spectral_energy(s, grid), u.squaredNorm(), 1e-10 * u.squaredNorm()) << grid.to_string();
    EXPECT_LT(rel_error(inverse_transform(s, grid), u), 1e-12) << grid.to_string();
  }
}

TEST(Transform, RealFieldsHaveHermitianSpectra) {
  std::mt19937_64 rng(2);
  const GridSpec grid({12, 16});
  const CRowMatrix s = forward_transform(random_field(1, 192, rng), grid);
  EXPECT_LT(hermitian_residual(s, grid), 1e-12);
}

TEST(Layout, RetainedSetExcludesNyquist) {
  const SpectrumLayout layout(GridSpec({16}), {8});
  EXPECT_EQ(layout.num_retained(), 8u);
  for (std::size_t i = 0; i < layout.num_retained(); ++i) EXPECT_LT(layout.retained_wavevector(i)[0], 8);
  EXPECT_EQ(layout.k_max_inf(), 7);
}

TEST(Layout, TwoDimensionalCount) {
  // |k0| < 4 gives 7 rows, 0 <= k1 < 4 gives 4 columns.
  const SpectrumLayout layout(GridSpec({16, 16}), {4, 4});
  EXPECT_EQ(layout.num_retained(), 28u);
}

TEST(Layout, RejectsTooManyModes) {
  EXPECT_THROW(SpectrumLayout(GridSpec({16}), {9}), DimensionError);
  EXPECT_THROW(GridSpec({4}).validate(), DimensionError);
}

TEST(Truncate, IdempotentAndZeroOutside) {
  std::mt19937_64 rng(3);
  const GridSpec grid({32});
  const SpectrumLayout layout(grid, {6});
  const CRowMatrix s = forward_transform(random_field(2, 32, rng), grid);
  const CRowMatrix t = truncate(s, layout);
  EXPECT_EQ(truncate(t, layout), t);
  const CRowMatrix outside = s - t;
  EXPECT_EQ(truncate(outside, layout).norm(), 0.0);
  EXPECT_LE(spectral_energy(t, grid), spectral_energy(s, grid));
  EXPECT_EQ(scatter_retained(gather_retained(s, layout), layout), t);
  EXPECT_NEAR(retained_energy(gather_retained(s, layout), layout), spectral_energy(t, grid), 1e-12);
}

TEST(Mask, EndpointsAndMidpoint) {
  const SpectrumLayout layout(GridSpec({64}), {17});
  const Vector f = smooth_mask(layout, {FilterKind::smooth, 1.0, 8});
  for (std::size_t i = 0; i < layout.num_retained(); ++i) {
    const int k = std::abs(layout.retained_wavevector(i)[0]);
    if (k == 0) {
      EXPECT_DOUBLE_EQ(f(i), 1.0);
    } else if (k == 16) {
      EXPECT_NEAR(f(i), std::exp(-1.0), 1e-15);
    } else if (k == 8) {
      EXPECT_NEAR(f(i), 0.996101369470118, 1e-14);
    }
  }
  const Vector ones = smooth_mask(layout, {FilterKind::none, 1.0, 8});
  EXPECT_EQ(ones, Vector::Ones(static_cast<Eigen::Index>(layout.num_retained())));
}

TEST(Mask, RejectsOddOrderAndNegativeStrength) {
  EXPECT_THROW((FilterSpec{FilterKind::smooth, 1.0, 3}).validate(), ConfigError);
  EXPECT_THROW((FilterSpec{FilterKind::smooth, -1.0, 8}).validate(), ConfigError);
  EXPECT_THROW(filter_kind_from_string("gaussian"), ConfigError);
}

TEST(Padding, CropInvertsPad) {
  std::mt19937_64 rng(4);
  const GridSpec grid({10, 12});
  const RowMatrix u = random_field(2, 120, rng);
  const RowMatrix p = pad_field(u, grid, 3);
  EXPECT_EQ(p.cols(), static_cast<Eigen::Index>(padded_grid(grid, 3).points()));
  EXPECT_EQ(crop_field(p, grid, 3), u);
  EXPECT_NEAR(p.squaredNorm(), u.squaredNorm(), 1e-12);
}

TEST(Downsample, BandLimitedIsLossless) {
  const GridSpec fine({64}), coarse({32});
  RowMatrix u = cosine_mode(64, 3) + 0.5 * cosine_mode(64, 7, 0.4);
  const RowMatrix expected = cosine_mode(32, 3) + 0.5 * cosine_mode(32, 7, 0.4);
  const RowMatrix d = spectral_downsample(u, fine, coarse);
  EXPECT_LT(rel_error(d, expected), 1e-12);
  EXPECT_EQ(spectral_downsample(u, fine, fine), u);
}

TEST(Downsample, EnergyDoesNotGrow) {
  std::mt19937_64 rng(6);
  const GridSpec fine({16, 16}), coarse({8, 8});
  for (int i = 0; i < 20; ++i) {
    const RowMatrix u = random_field(1, 256, rng);
    const RowMatrix d = spectral_downsample(u, fine, coarse);
    // Unitary scaling: compare mean squares.
    EXPECT_LE(d.squaredNorm() / 64.0, u.squaredNorm() / 256.0 * (1 + 1e-12));
  }
  EXPECT_THROW(spectral_downsample(RowMatrix::Zero(1, 24), GridSpec({24}), GridSpec({16})), DimensionError);
}

TEST(Coordinates, UnitTorus) {
  const RowMatrix x = grid_coordinates(GridSpec({4, 8}));
  EXPECT_EQ(x.rows(), 2);
  EXPECT_DOUBLE_EQ(x(0, 8), 0.25);
  EXPECT_DOUBLE_EQ(x(1, 1), 0.125);
}
