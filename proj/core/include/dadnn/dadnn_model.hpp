#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "dadnn/instance.hpp"
#include "dadnn/matrix.hpp"
#include "dadnn/model_config.hpp"
#include "dadnn/parameter_store.hpp"

namespace dadnn {

/// Cached activations of one mini-batch, enough for exact backprop.
///
/// Every head is evaluated on every row (knowledge transfer needs head q on
/// scene p's rows); routing only decides which rows enter which loss.
struct ForwardTrace {
  std::size_t batch_size = 0;
  std::vector<std::size_t> scene_index;             // head index (scene id - 1) per row
  std::vector<double> labels;
  std::vector<std::vector<std::size_t>> members;    // rows owned by each scene
  std::vector<std::uint32_t> features;              // [B x f] row-major, for the embedding scatter

  nd::Matrix embedded;                              // E = [e_1 .. e_f], [B x f*D]
  std::vector<std::vector<nd::Matrix>> expert_out;  // [expert][layer] post-activation
  std::vector<nd::Matrix> gates;                    // MMoE: per scene [B x n]
  std::vector<nd::Matrix> mixtures;                 // MMoE: per scene [B x width]
  std::vector<std::vector<nd::Matrix>> head_hidden; // [scene][hidden layer] outputs
  std::vector<std::vector<double>> logits;          // [scene][row]
  std::vector<std::vector<double>> probs;           // [scene][row]

  // Input of head k: the scene-k expert mixture, or the shared MLP output.
  const nd::Matrix& bottom_output(std::size_t scene_index) const;
  double own_probability(std::size_t row) const { return probs[scene_index[row]][row]; }
};

struct LossBreakdown {
  double main = 0.0;                // L_d
  std::vector<double> scene_loss;   // L_dk; 0 for scenes absent from the batch
  std::vector<double> alpha;        // N_k / N for this batch
  double kt = 0.0;                  // L_kt
  nd::Matrix pair_loss;             // [teacher p][student q] -> L_pq
  double total = 0.0;               // main_weight * L_d + L_kt

  bool operator==(const LossBreakdown&) const = default;
};

struct LossOptions {
  double main_weight = 1.0;
  // [K x K] u_pq override (row = teacher, column = student).
  std::optional<nd::Matrix> pair_weights;
  // Teacher targets [scene][row] held fixed instead of the trace's own
  // probabilities; makes the stop-gradient surrogate differentiable by
  // finite differences.
  std::optional<std::vector<std::vector<double>>> frozen_teacher;
};

ForwardTrace forward(const ModelConfig& config, const ParameterStore& params,
                     std::span<const Instance> batch);

// L_d with per-batch alpha_k = N_k / N.
LossBreakdown main_loss(const ForwardTrace& trace);

struct KtLoss {
  double total = 0.0;
  nd::Matrix pair_loss;
};

// Pairwise mimicking loss; teachers with no rows in the batch contribute 0.
KtLoss kt_loss(const ForwardTrace& trace, const nd::Matrix& pair_weights,
               const std::vector<std::vector<double>>* teacher = nullptr);

// u_pq on every off-diagonal pair when KT is enabled, zeros otherwise.
// Throws ConfigError for K = 1 with KT enabled.
nd::Matrix kt_pair_weights(const ModelConfig& config);

LossBreakdown compute_loss(const ModelConfig& config, const ForwardTrace& trace,
                           const LossOptions& options = {});

/// Exact gradients of main_weight * L_d + L_kt. Teacher probabilities in
/// L_kt are constants: no gradient reaches a teacher head through them.
ParameterStore backward(const ModelConfig& config, const ParameterStore& params,
                        const ForwardTrace& trace, const LossOptions& options = {});

LossBreakdown train_step(const ModelConfig& config, ParameterStore& params,
                         OptimizerState& optimizer, std::span<const Instance> batch);

// Serving path: evaluates only the owning scene's gate and head.
double predict(const ModelConfig& config, const ParameterStore& params, const Instance& instance);

}  // namespace dadnn
