#include "dadnn/numeric.hpp"

#include <algorithm>
#include <cmath>

#include "dadnn/errors.hpp"

namespace dadnn::nd {

double clamp_probability(double p) noexcept {
  return std::clamp(p, kProbClamp, 1.0 - kProbClamp);
}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> out(logits.size());
  if (logits.empty()) return out;
  const double m = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - m);
    sum += out[i];
  }
  for (double& v : out) v /= sum;
  return out;
}

std::vector<double> softmax_backward(std::span<const double> probs,
                                     std::span<const double> upstream) {
  if (probs.size() != upstream.size()) throw ConfigError("softmax_backward: size mismatch");
  double dot = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) dot += probs[i] * upstream[i];
  std::vector<double> g(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i) g[i] = probs[i] * (upstream[i] - dot);
  return g;
}

double cross_entropy(double target, double prob) noexcept {
  const double q = clamp_probability(prob);
  return -(target * std::log(q) + (1.0 - target) * std::log(1.0 - q));
}

double bce_loss(std::span<const double> p, std::span<const double> y) {
  if (p.empty()) throw DomainError("bce_loss: empty input");
  if (p.size() != y.size()) throw DomainError("bce_loss: probabilities and labels differ in length");
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) sum += cross_entropy(y[i], p[i]);
  return sum / static_cast<double>(p.size());
}

}  // namespace dadnn::nd
