#include "sgno/pointwise_net.hpp"

#include <cmath>

#include "sgno/errors.hpp"

namespace sgno {

namespace {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline double silu(double x) { return x * sigmoid(x); }

inline double silu_grad(double x) {
  const double s = sigmoid(x);
  return s * (1.0 + x * (1.0 - s));
}

void fill_uniform(RowMatrix& m, double bound, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
}

}  // namespace

std::string to_string(Activation a) { return a == Activation::silu ? "silu" : "identity"; }

Activation activation_from_string(const std::string& name) {
  if (name == "silu") return Activation::silu;
  if (name == "identity") return Activation::identity;
  throw ConfigError("unknown activation '" + name + "' (expected silu or identity)");
}

double activation_slope_bound(Activation a) { return a == Activation::silu ? 1.1 : 1.0; }

void apply_activation(Activation a, const RowMatrix& pre, RowMatrix& out) {
  if (a == Activation::identity) {
    out = pre;
    return;
  }
  out = pre.unaryExpr([](double x) { return silu(x); });
}

RowMatrix activation_backward(Activation a, const RowMatrix& pre, const RowMatrix& d_out) {
  if (a == Activation::identity) return d_out;
  return d_out.cwiseProduct(pre.unaryExpr([](double x) { return silu_grad(x); }));
}

PointwiseNet PointwiseNet::zeros(Eigen::Index in, Eigen::Index hidden, Eigen::Index out) {
  PointwiseNet net;
  net.first.weight = RowMatrix::Zero(hidden, in);
  net.first.bias = Vector::Zero(hidden);
  net.second.weight = RowMatrix::Zero(out, hidden);
  net.second.bias = Vector::Zero(out);
  return net;
}

PointwiseNet PointwiseNet::random(Eigen::Index in, Eigen::Index hidden, Eigen::Index out,
                                  std::mt19937_64& rng, bool zero_output) {
  PointwiseNet net = zeros(in, hidden, out);
  fill_uniform(net.first.weight, 1.0 / std::sqrt(static_cast<double>(in)), rng);
  if (!zero_output) {
    fill_uniform(net.second.weight, 1.0 / std::sqrt(static_cast<double>(hidden)), rng);
  }
  return net;
}

std::size_t PointwiseNet::parameter_count() const {
  return static_cast<std::size_t>(first.weight.size() + first.bias.size() + second.weight.size() +
                                  second.bias.size());
}

RowMatrix PointwiseNet::forward(const RowMatrix& x) const {
  RowMatrix h = first.weight * x;
  h.colwise() += first.bias;
  h = h.unaryExpr([](double v) { return silu(v); });
  RowMatrix y = second.weight * h;
  y.colwise() += second.bias;
  return y;
}

RowMatrix PointwiseNet::forward(const RowMatrix& x, Cache& cache) const {
  if (x.rows() != in_features()) {
    throw DimensionError("pointwise net expects " + std::to_string(in_features()) +
                         " input channels, got " + std::to_string(x.rows()));
  }
  cache.input = x;
  cache.hidden_pre = first.weight * x;
  cache.hidden_pre.colwise() += first.bias;
  cache.hidden = cache.hidden_pre.unaryExpr([](double v) { return silu(v); });
  RowMatrix y = second.weight * cache.hidden;
  y.colwise() += second.bias;
  return y;
}

RowMatrix PointwiseNet::backward(const Cache& cache, const RowMatrix& d_out,
                                 PointwiseNet& grad) const {
  grad.second.weight.noalias() += d_out * cache.hidden.transpose();
  grad.second.bias += d_out.rowwise().sum();
  RowMatrix d_hidden = second.weight.transpose() * d_out;
  d_hidden = d_hidden.cwiseProduct(cache.hidden_pre.unaryExpr([](double v) { return silu_grad(v); }));
  grad.first.weight.noalias() += d_hidden * cache.input.transpose();
  grad.first.bias += d_hidden.rowwise().sum();
  return first.weight.transpose() * d_hidden;
}

Eigen::MatrixXd PointwiseNet::jacobian(const Eigen::VectorXd& x) const {
  Eigen::VectorXd pre = first.weight * x + first.bias;
  Eigen::VectorXd slope = pre.unaryExpr([](double v) { return silu_grad(v); });
  return second.weight * slope.asDiagonal() * first.weight;
}

}  // namespace sgno
