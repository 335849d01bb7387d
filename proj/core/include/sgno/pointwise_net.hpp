#pragma once

#include <random>
#include <string>

#include "sgno/types.hpp"

namespace sgno {

/// Elementwise nonlinearity used inside pointwise nets and between blocks.
enum class Activation { identity, silu };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& name);

/// Largest slope of the activation. SiLU peaks at ~1.0998.
double activation_slope_bound(Activation a);

void apply_activation(Activation a, const RowMatrix& pre, RowMatrix& out);
/// d_pre = d_out * activation'(pre)
RowMatrix activation_backward(Activation a, const RowMatrix& pre, const RowMatrix& d_out);

struct AffineLayer {
  RowMatrix weight;  // [out, in]
  Vector bias;       // [out]

  Eigen::Index in_features() const { return weight.cols(); }
  Eigen::Index out_features() const { return weight.rows(); }
};

/// Two affine maps with SiLU in between, applied independently at every grid
/// point: y(x) = A2 silu(A1 u(x) + b1) + b2. Inputs are C_in x points.
struct PointwiseNet {
  AffineLayer first;
  AffineLayer second;

  struct Cache {
    RowMatrix input;
    RowMatrix hidden_pre;
    RowMatrix hidden;
  };

  static PointwiseNet zeros(Eigen::Index in, Eigen::Index hidden, Eigen::Index out);
  /// Fan-in scaled uniform init; `zero_output` zeroes the last layer.
  static PointwiseNet random(Eigen::Index in, Eigen::Index hidden, Eigen::Index out,
                             std::mt19937_64& rng, bool zero_output = false);

  Eigen::Index in_features() const { return first.in_features(); }
  Eigen::Index out_features() const { return second.out_features(); }
  std::size_t parameter_count() const;

  RowMatrix forward(const RowMatrix& x) const;
  RowMatrix forward(const RowMatrix& x, Cache& cache) const;
  /// Accumulates parameter gradients into `grad` and returns dL/dx.
  RowMatrix backward(const Cache& cache, const RowMatrix& d_out, PointwiseNet& grad) const;

  /// Jacobian dy/dx at a single point value x (out x in).
  Eigen::MatrixXd jacobian(const Eigen::VectorXd& x) const;
};

}  // namespace sgno
