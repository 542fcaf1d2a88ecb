#include "dadnn/dense.hpp"

#include <cmath>
#include <string>

#include "dadnn/errors.hpp"

namespace dadnn::nd {

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::kIdentity: return "identity";
    case Activation::kRelu: return "relu";
    case Activation::kSigmoid: return "sigmoid";
  }
  return "?";
}

double sigmoid(double x) noexcept {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double apply_activation(Activation a, double x) noexcept {
  switch (a) {
    case Activation::kRelu: return x > 0.0 ? x : 0.0;
    case Activation::kSigmoid: return sigmoid(x);
    case Activation::kIdentity: break;
  }
  return x;
}

namespace {

void check_input(const DenseLayer& layer, const Matrix& input) {
  if (input.cols() != layer.in_dim())
    throw ConfigError("dense layer expects " + std::to_string(layer.in_dim()) +
                      " input columns, got " + std::to_string(input.cols()));
  if (layer.bias.size() != layer.out_dim())
    throw ConfigError("dense layer bias length does not match weight columns");
}

}  // namespace

Matrix dense_preactivation(const DenseLayer& layer, const Matrix& input) {
  check_input(layer, input);
  Matrix out = matmul(input, layer.weight);
  for (std::size_t i = 0; i < out.rows(); ++i) {
    auto r = out.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) r[j] += layer.bias[j];
  }
  return out;
}

Matrix dense_forward(const DenseLayer& layer, const Matrix& input) {
  Matrix out = dense_preactivation(layer, input);
  if (layer.activation != Activation::kIdentity)
    for (double& v : out.values()) v = apply_activation(layer.activation, v);
  return out;
}

Matrix activation_backward(Activation a, const Matrix& output, const Matrix& upstream) {
  if (output.rows() != upstream.rows() || output.cols() != upstream.cols())
    throw ConfigError("activation_backward: upstream gradient shape mismatch");
  Matrix g(upstream.rows(), upstream.cols());
  auto o = output.values();
  auto u = upstream.values();
  auto d = g.values();
  switch (a) {
    case Activation::kIdentity:
      for (std::size_t i = 0; i < d.size(); ++i) d[i] = u[i];
      break;
    case Activation::kRelu:
      for (std::size_t i = 0; i < d.size(); ++i) d[i] = o[i] > 0.0 ? u[i] : 0.0;
      break;
    case Activation::kSigmoid:
      for (std::size_t i = 0; i < d.size(); ++i) d[i] = u[i] * o[i] * (1.0 - o[i]);
      break;
  }
  return g;
}

Matrix linear_backward_into(const DenseLayer& layer, const Matrix& input,
                            const Matrix& grad_preactivation, DenseLayer& accum) {
  check_input(layer, input);
  if (grad_preactivation.rows() != input.rows() || grad_preactivation.cols() != layer.out_dim())
    throw ConfigError("dense backward: upstream gradient shape mismatch");
  if (accum.weight.rows() != layer.in_dim() || accum.weight.cols() != layer.out_dim() ||
      accum.bias.size() != layer.out_dim())
    throw ConfigError("dense backward: gradient accumulator shape mismatch");

  matmul_at_b_accumulate(input, grad_preactivation, accum.weight);
  for (std::size_t i = 0; i < grad_preactivation.rows(); ++i) {
    auto r = grad_preactivation.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) accum.bias[j] += r[j];
  }
  return matmul_a_bt(grad_preactivation, layer.weight);
}

DenseGradients dense_backward(const DenseLayer& layer, const Matrix& input,
                              const Matrix& output, const Matrix& upstream_grad) {
  DenseLayer accum(layer.in_dim(), layer.out_dim(), layer.activation);
  Matrix grad_pre = activation_backward(layer.activation, output, upstream_grad);
  Matrix grad_input = linear_backward_into(layer, input, grad_pre, accum);
  return {std::move(accum.weight), std::move(accum.bias), std::move(grad_input)};
}

DenseGradients dense_backward(const DenseLayer& layer, const Matrix& input,
                              const Matrix& upstream_grad) {
  return dense_backward(layer, input, dense_forward(layer, input), upstream_grad);
}

}  // namespace dadnn::nd
