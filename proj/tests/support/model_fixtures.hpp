#pragma once

#include <cstdint>
#include <vector>

#include "dadnn/dadnn_model.hpp"
#include "dadnn/grad_check.hpp"
#include "dadnn/rng.hpp"

namespace dadnn::fixtures {

inline ModelConfig tiny_config(BottomKind bottom, std::size_t scenes = 2, std::size_t experts = 2) {
  ModelConfig c;
  c.scenes = scenes;
  c.vocab_sizes = {5, 5, 5};
  c.embedding_dim = 4;
  c.bottom = bottom;
  c.experts = bottom == BottomKind::kMmoe ? experts : 1;
  c.bottom_widths = {6, 5};
  c.kt_enabled = scenes > 1;
  c.seed = 7;
  return c;
}

inline std::vector<Instance> random_batch(const ModelConfig& c, std::size_t n, nd::Rng& rng) {
  std::vector<Instance> batch(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto& x = batch[i];
    // Every scene gets at least one row so all KT pairs are active.
    x.scene_id = static_cast<int>(i < c.scenes ? i + 1 : rng.below(c.scenes) + 1);
    for (auto v : c.vocab_sizes) x.features.push_back(static_cast<std::uint32_t>(rng.below(v)));
    x.label = rng.uniform() < 0.4 ? 1 : 0;
  }
  return batch;
}

// Spreads initial weights so sigmoid outputs are away from 0.5 and ReLUs mix.
inline void perturb(ParameterStore& params, nd::Rng& rng, double scale = 0.3) {
  for (auto& b : blocks(params))
    for (double& v : b.values) v += scale * rng.normal();
}

inline nd::GradCheckReport check_model_gradients(const ModelConfig& c, ParameterStore& params,
                                                  const std::vector<Instance>& batch,
                                                  const LossOptions& opts = {},
                                                  nd::GradCheckOptions gopts = {}) {
  const ParameterStore grads = backward(c, params, forward(c, params, batch), opts);
  auto pb = blocks(params);
  const auto gb = blocks(grads);
  std::vector<nd::CheckedBlock> checked;
  for (std::size_t i = 0; i < pb.size(); ++i)
    checked.push_back({pb[i].name, pb[i].values, gb[i].values});
  // Teacher outputs are constants of the KT term, so differentiate the
  // surrogate with them frozen at the current point.
  LossOptions frozen = opts;
  frozen.frozen_teacher = forward(c, params, batch).probs;
  auto loss = [&] { return compute_loss(c, forward(c, params, batch), frozen).total; };
  return nd::grad_check(loss, checked, gopts);
}

}  // namespace dadnn::fixtures
