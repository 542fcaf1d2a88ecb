#include "dadnn/adagrad.hpp"

#include <cmath>

#include "dadnn/errors.hpp"

namespace dadnn::nd {

void adagrad_step(std::span<double> param, std::span<const double> grad, AdagradState& state) {
  if (param.size() != grad.size() || state.accumulator.size() != param.size())
    throw ConfigError("adagrad_step: parameter, gradient and accumulator sizes differ");
  const double lr = state.learning_rate;
  const double eps = state.epsilon;
  double* acc = state.accumulator.data();
  for (std::size_t i = 0; i < param.size(); ++i) {
    const double g = grad[i];
    if (g == 0.0) continue;
    acc[i] += g * g;
    param[i] -= lr * g / (std::sqrt(acc[i]) + eps);
  }
}

}  // namespace dadnn::nd
