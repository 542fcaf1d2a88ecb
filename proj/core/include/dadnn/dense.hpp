#pragma once

#include <string_view>
#include <vector>

#include "dadnn/matrix.hpp"

namespace dadnn::nd {

enum class Activation { kIdentity, kRelu, kSigmoid };

std::string_view to_string(Activation a);

/// Fully connected layer: activation(input * weight + bias).
/// weight is [in x out]; bias has one entry per output unit.
struct DenseLayer {
  Matrix weight;
  std::vector<double> bias;
  Activation activation = Activation::kIdentity;

  DenseLayer() = default;
  DenseLayer(std::size_t in, std::size_t out, Activation act)
      : weight(in, out), bias(out, 0.0), activation(act) {}

  std::size_t in_dim() const noexcept { return weight.rows(); }
  std::size_t out_dim() const noexcept { return weight.cols(); }

  bool operator==(const DenseLayer&) const = default;
};

struct DenseGradients {
  Matrix weight;
  std::vector<double> bias;
  Matrix input;
};

double sigmoid(double x) noexcept;
double apply_activation(Activation a, double x) noexcept;

// input * weight + bias, no activation.
Matrix dense_preactivation(const DenseLayer& layer, const Matrix& input);

Matrix dense_forward(const DenseLayer& layer, const Matrix& input);

// Turns dL/d(output) into dL/d(pre-activation) using the cached forward output.
Matrix activation_backward(Activation a, const Matrix& output, const Matrix& upstream);

// Given dL/d(pre-activation), adds weight/bias gradients into `accum` (same
// shapes as `layer`) and returns dL/d(input).
Matrix linear_backward_into(const DenseLayer& layer, const Matrix& input,
                            const Matrix& grad_preactivation, DenseLayer& accum);

// Exact gradients of dense_forward given dL/d(output).
DenseGradients dense_backward(const DenseLayer& layer, const Matrix& input,
                              const Matrix& upstream_grad);

// Same, reusing an output already computed by dense_forward.
DenseGradients dense_backward(const DenseLayer& layer, const Matrix& input,
                              const Matrix& output, const Matrix& upstream_grad);

}  // namespace dadnn::nd
