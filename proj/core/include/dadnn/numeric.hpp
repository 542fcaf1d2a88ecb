#pragma once

#include <span>
#include <vector>

namespace dadnn::nd {

// Probabilities are clamped into [kProbClamp, 1 - kProbClamp] before any log.
inline constexpr double kProbClamp = 1e-7;

double clamp_probability(double p) noexcept;

// Numerically stable softmax (max-subtracted).
std::vector<double> softmax(std::span<const double> logits);

// dL/d(logits) from dL/d(probs) for probs = softmax(logits).
std::vector<double> softmax_backward(std::span<const double> probs,
                                     std::span<const double> upstream);

// -[t log q + (1 - t) log(1 - q)] with q clamped; t may be a soft target.
double cross_entropy(double target, double prob) noexcept;

/// Mean binary cross-entropy of probabilities `p` against labels `y`.
/// Throws DomainError on empty or mismatched input.
double bce_loss(std::span<const double> p, std::span<const double> y);

}  // namespace dadnn::nd
