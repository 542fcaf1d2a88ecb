#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace dadnn::nd {

/// Per-parameter-block Adagrad state. The accumulator holds the elementwise
/// running sum of squared gradients and starts at zero.
struct AdagradState {
  std::vector<double> accumulator;
  double learning_rate = 0.015;
  double epsilon = 1e-8;

  AdagradState() = default;
  AdagradState(std::size_t size, double lr, double eps = 1e-8)
      : accumulator(size, 0.0), learning_rate(lr), epsilon(eps) {}
};

// accumulator += g^2; param -= lr * g / (sqrt(accumulator) + eps).
void adagrad_step(std::span<double> param, std::span<const double> grad, AdagradState& state);

}  // namespace dadnn::nd
