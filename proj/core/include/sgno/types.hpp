#pragma once

#include <complex>

#include <Eigen/Core>

namespace sgno {

using Complex = std::complex<double>;

/// Channel-major field storage: row c holds channel c over all grid points.
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using CRowMatrix = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using CMatrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXd;
using CVector = Eigen::VectorXcd;

}  // namespace sgno
