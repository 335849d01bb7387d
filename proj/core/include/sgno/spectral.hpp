#pragma once

// Fourier-domain plumbing shared by the model, the reference solvers and the
// verification suite. All transforms are unitary: a real field and its stored
// half-spectrum have the same energy once the stored modes are weighted by
// parseval_weight().

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "sgno/types.hpp"

namespace sgno {

/// Uniform periodic grid on the unit torus [0,1)^d.
struct GridSpec {
  std::vector<int> n;  // points per axis

  GridSpec() = default;
  explicit GridSpec(std::vector<int> points) : n(std::move(points)) {}

  int dim() const noexcept { return static_cast<int>(n.size()); }
  std::size_t points() const noexcept;
  /// Shape of the stored real-transform spectrum (last axis halved).
  std::vector<int> spectral_shape() const;
  std::size_t spectral_points() const noexcept;
  /// Throws DimensionError unless 1 <= d <= 3 and every axis has >= 8 points.
  void validate() const;
  std::string to_string() const;

  bool operator==(const GridSpec&) const = default;
};

using Wavevector = std::array<int, 3>;

/// Retained mode set K together with the half-spectrum bookkeeping.
///
/// K = { k : |k_j| < modes_j for every axis } restricted to the stored half of
/// the spectrum (last axis k >= 0). Because modes_j <= n_j / 2, Nyquist modes
/// are never retained.
class SpectrumLayout {
 public:
  SpectrumLayout() = default;
  SpectrumLayout(GridSpec grid, std::vector<int> modes_per_axis);

  const GridSpec& grid() const noexcept { return grid_; }
  const std::vector<int>& modes_per_axis() const noexcept { return modes_; }
  std::size_t spectral_size() const noexcept { return grid_.spectral_points(); }

  std::size_t num_retained() const noexcept { return retained_.size(); }
  /// Flat half-spectrum index of each retained mode, in storage order.
  const std::vector<std::size_t>& retained() const noexcept { return retained_; }
  const Wavevector& retained_wavevector(std::size_t i) const { return retained_k_[i]; }
  /// Parseval weight of each retained mode (2 unless self-conjugate).
  const std::vector<double>& retained_weights() const noexcept { return retained_w_; }

  /// Signed integer wavevector of a stored half-spectrum entry.
  Wavevector wavevector(std::size_t flat) const;
  /// 1 for entries whose last-axis index is 0 or n/2, 2 otherwise.
  double parseval_weight(std::size_t flat) const;
  bool is_retained(std::size_t flat) const { return retained_mask_[flat] != 0; }

  /// Per-axis largest retained integer wavenumber (modes_j - 1).
  std::vector<int> k_max() const;
  /// max_j k_max_j, used by the smooth mask.
  int k_max_inf() const;

 private:
  GridSpec grid_;
  std::vector<int> modes_;
  std::vector<std::size_t> retained_;
  std::vector<Wavevector> retained_k_;
  std::vector<double> retained_w_;
  std::vector<unsigned char> retained_mask_;
};

enum class FilterKind { none, smooth };

struct FilterSpec {
  FilterKind kind = FilterKind::none;
  double strength = 1.0;  // gamma >= 0
  int order = 8;          // positive even integer

  void validate() const;
  bool operator==(const FilterSpec&) const = default;
};

std::string to_string(FilterKind kind);
FilterKind filter_kind_from_string(const std::string& name);

/// Unitary real-to-complex transform of every row of `field` (C x points).
CRowMatrix forward_transform(const RowMatrix& field, const GridSpec& grid);
/// Inverse of forward_transform. Imaginary parts of self-conjugate entries are
/// ignored, matching the c2r convention.
RowMatrix inverse_transform(const CRowMatrix& spectrum, const GridSpec& grid);

inline CRowMatrix forward_transform(const RowMatrix& field, const SpectrumLayout& layout) {
  return forward_transform(field, layout.grid());
}
inline RowMatrix inverse_transform(const CRowMatrix& spectrum, const SpectrumLayout& layout) {
  return inverse_transform(spectrum, layout.grid());
}

/// Zero every stored coefficient outside K.
CRowMatrix truncate(const CRowMatrix& spectrum, const SpectrumLayout& layout);
/// Compact C x |K| copy of the retained coefficients.
CRowMatrix gather_retained(const CRowMatrix& spectrum, const SpectrumLayout& layout);
/// Expand a C x |K| block to the full stored spectrum, zero outside K.
CRowMatrix scatter_retained(const CRowMatrix& retained, const SpectrumLayout& layout);

/// Parseval-weighted energy of a stored half-spectrum (all channels).
double spectral_energy(const CRowMatrix& spectrum, const GridSpec& grid);
/// Weighted energy of a C x |K| retained block.
double retained_energy(const CRowMatrix& retained, const SpectrumLayout& layout);

/// Smooth low-pass weights F(k) = exp(-gamma (|k|_inf / |k_max|_inf)^p) over K.
/// Returns all ones when the filter is disabled.
Vector smooth_mask(const SpectrumLayout& layout, const FilterSpec& filter);

/// Symmetric zero padding of `pad` points on both sides of every axis.
RowMatrix pad_field(const RowMatrix& field, const GridSpec& grid, int pad);
/// Inverse of pad_field: keeps the interior block of a padded field.
RowMatrix crop_field(const RowMatrix& padded, const GridSpec& grid, int pad);
GridSpec padded_grid(const GridSpec& grid, int pad);

/// Norm of the anti-Hermitian part on self-conjugate planes, i.e. the
/// imaginary residue a full complex inverse would carry.
double hermitian_residual(const CRowMatrix& spectrum, const GridSpec& grid);

/// Spectral resampling to a coarser grid whose axes divide the source axes.
/// Modes above the target Nyquist are dropped.
RowMatrix spectral_downsample(const RowMatrix& field, const GridSpec& from, const GridSpec& to);

/// Coordinates x_j = i_j / n_j as a d x points matrix.
RowMatrix grid_coordinates(const GridSpec& grid);

}  // namespace sgno
