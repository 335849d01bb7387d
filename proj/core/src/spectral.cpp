#include "sgno/spectral.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>

#include "sgno/errors.hpp"

namespace sgno {

namespace {

// FFTW plans keyed by grid shape. Planning is serialized; execution through
// the new-array interface is thread safe.
struct PlanPair {
  fftw_plan r2c = nullptr;
  fftw_plan c2r = nullptr;
  ~PlanPair() {
    if (r2c) fftw_destroy_plan(r2c);
    if (c2r) fftw_destroy_plan(c2r);
  }
};

const PlanPair& plans_for(const GridSpec& grid) {
  static std::mutex mutex;
  static std::map<std::vector<int>, std::unique_ptr<PlanPair>> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find(grid.n);
  if (it != cache.end()) return *it->second;

  auto pair = std::make_unique<PlanPair>();
  const int rank = grid.dim();
  std::vector<double> real(grid.points());
  std::vector<fftw_complex> spec(grid.spectral_points());
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  pair->r2c = fftw_plan_dft_r2c(rank, grid.n.data(), real.data(), spec.data(), flags);
  pair->c2r = fftw_plan_dft_c2r(rank, grid.n.data(), spec.data(), real.data(), flags);
  if (!pair->r2c || !pair->c2r) throw Error("FFTW planning failed for grid " + grid.to_string());
  auto& ref = *pair;
  cache.emplace(grid.n, std::move(pair));
  return ref;
}

std::vector<int> unravel(std::size_t flat, const std::vector<int>& shape) {
  std::vector<int> idx(shape.size());
  for (int a = static_cast<int>(shape.size()) - 1; a >= 0; --a) {
    idx[a] = static_cast<int>(flat % static_cast<std::size_t>(shape[a]));
    flat /= static_cast<std::size_t>(shape[a]);
  }
  return idx;
}

std::size_t ravel(const std::vector<int>& idx, const std::vector<int>& shape) {
  std::size_t flat = 0;
  for (std::size_t a = 0; a < shape.size(); ++a) flat = flat * shape[a] + idx[a];
  return flat;
}

void check_rows(const GridSpec& grid, Eigen::Index cols, std::size_t expected, const char* what) {
  if (static_cast<std::size_t>(cols) != expected) {
    std::ostringstream os;
    os << what << ": expected " << expected << " columns for grid " << grid.to_string() << ", got "
       << cols;
    throw DimensionError(os.str());
  }
}

}  // namespace

std::size_t GridSpec::points() const noexcept {
  std::size_t p = 1;
  for (int v : n) p *= static_cast<std::size_t>(v);
  return n.empty() ? 0 : p;
}

std::vector<int> GridSpec::spectral_shape() const {
  std::vector<int> s = n;
  if (!s.empty()) s.back() = s.back() / 2 + 1;
  return s;
}

std::size_t GridSpec::spectral_points() const noexcept {
  if (n.empty()) return 0;
  std::size_t p = 1;
  for (std::size_t a = 0; a + 1 < n.size(); ++a) p *= static_cast<std::size_t>(n[a]);
  return p * static_cast<std::size_t>(n.back() / 2 + 1);
}

void GridSpec::validate() const {
  if (n.empty() || n.size() > 3) {
    throw DimensionError("grid dimension must be 1, 2 or 3, got " + std::to_string(n.size()));
  }
  for (int v : n) {
    if (v < 8) throw DimensionError("every grid axis needs at least 8 points: " + to_string());
    if (v % 2 != 0) throw DimensionError("grid axes must be even: " + to_string());
  }
}

std::string GridSpec::to_string() const {
  std::ostringstream os;
  for (std::size_t a = 0; a < n.size(); ++a) os << (a ? "x" : "") << n[a];
  return os.str();
}

SpectrumLayout::SpectrumLayout(GridSpec grid, std::vector<int> modes_per_axis)
    : grid_(std::move(grid)), modes_(std::move(modes_per_axis)) {
  grid_.validate();
  if (modes_.size() == 1 && grid_.dim() > 1) modes_.assign(grid_.dim(), modes_.front());
  if (static_cast<int>(modes_.size()) != grid_.dim()) {
    throw DimensionError("modes_per_axis has " + std::to_string(modes_.size()) +
                         " entries for a " + std::to_string(grid_.dim()) + "-d grid");
  }
  for (int a = 0; a < grid_.dim(); ++a) {
    if (modes_[a] < 1 || modes_[a] > grid_.n[a] / 2) {
      throw DimensionError("mode cutoff " + std::to_string(modes_[a]) + " out of range for axis of " +
                           std::to_string(grid_.n[a]) + " points");
    }
  }
  const std::size_t total = grid_.spectral_points();
  retained_mask_.assign(total, 0);
  for (std::size_t f = 0; f < total; ++f) {
    const Wavevector k = wavevector(f);
    bool keep = true;
    for (int a = 0; a < grid_.dim(); ++a) keep = keep && std::abs(k[a]) < modes_[a];
    if (!keep) continue;
    retained_mask_[f] = 1;
    retained_.push_back(f);
    retained_k_.push_back(k);
    retained_w_.push_back(parseval_weight(f));
  }
}

Wavevector SpectrumLayout::wavevector(std::size_t flat) const {
  const auto shape = grid_.spectral_shape();
  const auto idx = unravel(flat, shape);
  Wavevector k{0, 0, 0};
  const int d = grid_.dim();
  for (int a = 0; a + 1 < d; ++a) {
    const int n = grid_.n[a];
    k[a] = idx[a] < n / 2 ? idx[a] : idx[a] - n;
  }
  k[d - 1] = idx[d - 1];
  return k;
}

double SpectrumLayout::parseval_weight(std::size_t flat) const {
  const int last = grid_.n.back();
  const int half = last / 2 + 1;
  const int kl = static_cast<int>(flat % static_cast<std::size_t>(half));
  return (kl == 0 || kl == last / 2) ? 1.0 : 2.0;
}

std::vector<int> SpectrumLayout::k_max() const {
  std::vector<int> out(modes_.size());
  std::transform(modes_.begin(), modes_.end(), out.begin(), [](int m) { return m - 1; });
  return out;
}

int SpectrumLayout::k_max_inf() const {
  const auto km = k_max();
  return *std::max_element(km.begin(), km.end());
}

void FilterSpec::validate() const {
  if (strength < 0.0) throw ConfigError("filter strength must be nonnegative");
  if (order <= 0 || order % 2 != 0) throw ConfigError("filter order must be a positive even integer");
}

std::string to_string(FilterKind kind) { return kind == FilterKind::smooth ? "smooth" : "none"; }

FilterKind filter_kind_from_string(const std::string& name) {
  if (name == "none") return FilterKind::none;
  if (name == "smooth") return FilterKind::smooth;
  throw ConfigError("unknown filter type '" + name + "' (expected none or smooth)");
}

CRowMatrix forward_transform(const RowMatrix& field, const GridSpec& grid) {
  check_rows(grid, field.cols(), grid.points(), "forward_transform");
  const auto& plan = plans_for(grid);
  const std::size_t ns = grid.spectral_points();
  CRowMatrix out(field.rows(), static_cast<Eigen::Index>(ns));
  const double scale = 1.0 / std::sqrt(static_cast<double>(grid.points()));
  for (Eigen::Index c = 0; c < field.rows(); ++c) {
    auto* dst = reinterpret_cast<fftw_complex*>(out.row(c).data());
    fftw_execute_dft_r2c(plan.r2c, const_cast<double*>(field.row(c).data()), dst);
  }
  out *= scale;
  return out;
}

RowMatrix inverse_transform(const CRowMatrix& spectrum, const GridSpec& grid) {
  check_rows(grid, spectrum.cols(), grid.spectral_points(), "inverse_transform");
  const auto& plan = plans_for(grid);
  RowMatrix out(spectrum.rows(), static_cast<Eigen::Index>(grid.points()));
  CRowMatrix scratch = spectrum;  // c2r overwrites its input
  for (Eigen::Index c = 0; c < spectrum.rows(); ++c) {
    auto* src = reinterpret_cast<fftw_complex*>(scratch.row(c).data());
    fftw_execute_dft_c2r(plan.c2r, src, out.row(c).data());
  }
  out *= 1.0 / std::sqrt(static_cast<double>(grid.points()));
  return out;
}

CRowMatrix truncate(const CRowMatrix& spectrum, const SpectrumLayout& layout) {
  check_rows(layout.grid(), spectrum.cols(), layout.spectral_size(), "truncate");
  CRowMatrix out = CRowMatrix::Zero(spectrum.rows(), spectrum.cols());
  for (std::size_t f : layout.retained()) out.col(f) = spectrum.col(f);
  return out;
}

CRowMatrix gather_retained(const CRowMatrix& spectrum, const SpectrumLayout& layout) {
  check_rows(layout.grid(), spectrum.cols(), layout.spectral_size(), "gather_retained");
  const auto& idx = layout.retained();
  CRowMatrix out(spectrum.rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) out.col(i) = spectrum.col(idx[i]);
  return out;
}

CRowMatrix scatter_retained(const CRowMatrix& retained, const SpectrumLayout& layout) {
  const auto& idx = layout.retained();
  if (static_cast<std::size_t>(retained.cols()) != idx.size()) {
    throw DimensionError("scatter_retained: expected " + std::to_string(idx.size()) + " modes");
  }
  CRowMatrix out = CRowMatrix::Zero(retained.rows(), static_cast<Eigen::Index>(layout.spectral_size()));
  for (std::size_t i = 0; i < idx.size(); ++i) out.col(idx[i]) = retained.col(i);
  return out;
}

double spectral_energy(const CRowMatrix& spectrum, const GridSpec& grid) {
  check_rows(grid, spectrum.cols(), grid.spectral_points(), "spectral_energy");
  const int last = grid.n.back();
  const int half = last / 2 + 1;
  double e = 0.0;
  for (Eigen::Index f = 0; f < spectrum.cols(); ++f) {
    const int kl = static_cast<int>(f % half);
    const double w = (kl == 0 || kl == last / 2) ? 1.0 : 2.0;
    e += w * spectrum.col(f).squaredNorm();
  }
  return e;
}

double retained_energy(const CRowMatrix& retained, const SpectrumLayout& layout) {
  const auto& w = layout.retained_weights();
  double e = 0.0;
  for (Eigen::Index i = 0; i < retained.cols(); ++i) e += w[i] * retained.col(i).squaredNorm();
  return e;
}

Vector smooth_mask(const SpectrumLayout& layout, const FilterSpec& filter) {
  filter.validate();
  const std::size_t k = layout.num_retained();
  Vector mask = Vector::Ones(static_cast<Eigen::Index>(k));
  if (filter.kind == FilterKind::none) return mask;
  const int kmax = layout.k_max_inf();
  if (kmax == 0) return mask;  // only the zero mode is retained
  for (std::size_t i = 0; i < k; ++i) {
    const auto& kv = layout.retained_wavevector(i);
    int inf = 0;
    for (int a = 0; a < layout.grid().dim(); ++a) inf = std::max(inf, std::abs(kv[a]));
    const double r = static_cast<double>(inf) / kmax;
    mask[i] = std::exp(-filter.strength * std::pow(r, filter.order));
  }
  return mask;
}

GridSpec padded_grid(const GridSpec& grid, int pad) {
  GridSpec g = grid;
  for (auto& v : g.n) v += 2 * pad;
  return g;
}

RowMatrix pad_field(const RowMatrix& field, const GridSpec& grid, int pad) {
  if (pad == 0) return field;
  check_rows(grid, field.cols(), grid.points(), "pad_field");
  const GridSpec big = padded_grid(grid, pad);
  RowMatrix out = RowMatrix::Zero(field.rows(), static_cast<Eigen::Index>(big.points()));
  for (std::size_t p = 0; p < grid.points(); ++p) {
    auto idx = unravel(p, grid.n);
    for (auto& i : idx) i += pad;
    out.col(ravel(idx, big.n)) = field.col(p);
  }
  return out;
}

RowMatrix crop_field(const RowMatrix& padded, const GridSpec& grid, int pad) {
  if (pad == 0) return padded;
  const GridSpec big = padded_grid(grid, pad);
  check_rows(big, padded.cols(), big.points(), "crop_field");
  RowMatrix out(padded.rows(), static_cast<Eigen::Index>(grid.points()));
  for (std::size_t p = 0; p < grid.points(); ++p) {
    auto idx = unravel(p, grid.n);
    for (auto& i : idx) i += pad;
    out.col(p) = padded.col(ravel(idx, big.n));
  }
  return out;
}

double hermitian_residual(const CRowMatrix& spectrum, const GridSpec& grid) {
  check_rows(grid, spectrum.cols(), grid.spectral_points(), "hermitian_residual");
  const auto shape = grid.spectral_shape();
  const int d = grid.dim();
  const int last = grid.n.back();
  double acc = 0.0;
  for (Eigen::Index f = 0; f < spectrum.cols(); ++f) {
    auto idx = unravel(static_cast<std::size_t>(f), shape);
    if (idx[d - 1] != 0 && idx[d - 1] != last / 2) continue;
    auto mirror = idx;
    for (int a = 0; a + 1 < d; ++a) mirror[a] = (grid.n[a] - idx[a]) % grid.n[a];
    const std::size_t g = ravel(mirror, shape);
    // Entry and its partner should be complex conjugates.
    acc += (spectrum.col(f) - spectrum.col(g).conjugate()).squaredNorm() * 0.25;
  }
  return std::sqrt(acc);
}

RowMatrix spectral_downsample(const RowMatrix& field, const GridSpec& from, const GridSpec& to) {
  from.validate();
  to.validate();
  if (from.dim() != to.dim()) throw DimensionError("spectral_downsample: dimension mismatch");
  for (int a = 0; a < from.dim(); ++a) {
    if (from.n[a] % to.n[a] != 0) {
      throw DimensionError("resolution factor must be an integer: " + from.to_string() + " -> " +
                           to.to_string());
    }
  }
  if (from == to) return field;
  const CRowMatrix fine = forward_transform(field, from);
  CRowMatrix coarse = CRowMatrix::Zero(field.rows(), static_cast<Eigen::Index>(to.spectral_points()));
  const SpectrumLayout coarse_layout(to, std::vector<int>(to.n.size(), 1));
  const auto fine_shape = from.spectral_shape();
  const double scale = std::sqrt(static_cast<double>(to.points()) / static_cast<double>(from.points()));
  for (std::size_t f = 0; f < to.spectral_points(); ++f) {
    const Wavevector k = coarse_layout.wavevector(f);
    bool nyquist = false;
    std::vector<int> idx(from.dim());
    for (int a = 0; a < from.dim(); ++a) {
      if (std::abs(k[a]) >= to.n[a] / 2) nyquist = true;
      idx[a] = (a + 1 < from.dim()) ? (k[a] + from.n[a]) % from.n[a] : k[a];
    }
    if (nyquist) continue;
    coarse.col(f) = fine.col(ravel(idx, fine_shape)) * scale;
  }
  return inverse_transform(coarse, to);
}

RowMatrix grid_coordinates(const GridSpec& grid) {
  const std::size_t np = grid.points();
  RowMatrix x(grid.dim(), static_cast<Eigen::Index>(np));
  for (std::size_t p = 0; p < np; ++p) {
    const auto idx = unravel(p, grid.n);
    for (int a = 0; a < grid.dim(); ++a) x(a, p) = static_cast<double>(idx[a]) / grid.n[a];
  }
  return x;
}

}  // namespace sgno
