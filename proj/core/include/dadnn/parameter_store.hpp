#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "dadnn/adagrad.hpp"
#include "dadnn/dense.hpp"
#include "dadnn/matrix.hpp"
#include "dadnn/model_config.hpp"

namespace dadnn {

struct Tower {
  std::vector<nd::DenseLayer> layers;
  bool operator==(const Tower&) const = default;
};

/// Every trainable array of a DADNN. The same type holds gradients
/// (see zeros_like) so parameters and gradients are visited in lockstep.
///
///   embeddings[j]  field j table, [vocab_j x D]
///   experts[e]     shared bottom; exactly one tower for the MLP variant
///   gates[k]       scene k gate W_gk, [f*D x n]; empty for MLP
///   heads[k]       scene k domain head, last layer is [width x 1] sigmoid
struct ParameterStore {
  std::vector<nd::Matrix> embeddings;
  std::vector<Tower> experts;
  std::vector<nd::Matrix> gates;
  std::vector<Tower> heads;

  bool operator==(const ParameterStore&) const = default;
};

struct BlockRef {
  std::string name;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::span<double> values;
};

struct ConstBlockRef {
  std::string name;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::span<const double> values;
};

// Stable enumeration order: embeddings, experts, gates, heads.
// Names: embedding.<j>, expert.<e>.<l>.{weight,bias}, gate.<scene>,
// head.<scene>.<l>.{weight,bias}; field/expert/layer indices are 0-based,
// scene ids 1-based.
std::vector<BlockRef> blocks(ParameterStore& store);
std::vector<ConstBlockRef> blocks(const ParameterStore& store);

ParameterStore zeros_like(const ParameterStore& store);
std::size_t parameter_count(const ParameterStore& store);

/// Fresh parameters for `config`: Glorot-uniform weights, zero biases. Each
/// block draws from its own stream forked from config.seed by block name, so
/// blocks present in two configs get the same values. Loads pretrained
/// embeddings when config.pretrained_embedding_path is set.
ParameterStore init_params(const ModelConfig& config);

struct OptimizerState {
  std::vector<nd::AdagradState> blocks;
};

OptimizerState make_optimizer(const ParameterStore& params, double learning_rate);

}  // namespace dadnn
