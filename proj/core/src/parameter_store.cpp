#include "dadnn/parameter_store.hpp"

#include <cmath>

#include "dadnn/param_io.hpp"
#include "dadnn/rng.hpp"

namespace dadnn {

namespace {

template <typename Store, typename Ref, typename Fn>
void visit(Store& store, Fn&& emit) {
  for (std::size_t j = 0; j < store.embeddings.size(); ++j) {
    auto& m = store.embeddings[j];
    emit(Ref{"embedding." + std::to_string(j), m.rows(), m.cols(), m.values()});
  }
  auto tower = [&](auto& t, const std::string& prefix) {
    for (std::size_t l = 0; l < t.layers.size(); ++l) {
      auto& layer = t.layers[l];
      const std::string base = prefix + "." + std::to_string(l);
      emit(Ref{base + ".weight", layer.weight.rows(), layer.weight.cols(), layer.weight.values()});
      emit(Ref{base + ".bias", 1, layer.bias.size(), std::span(layer.bias)});
    }
  };
  for (std::size_t e = 0; e < store.experts.size(); ++e)
    tower(store.experts[e], "expert." + std::to_string(e));
  for (std::size_t k = 0; k < store.gates.size(); ++k) {
    auto& m = store.gates[k];
    emit(Ref{"gate." + std::to_string(k + 1), m.rows(), m.cols(), m.values()});
  }
  for (std::size_t k = 0; k < store.heads.size(); ++k)
    tower(store.heads[k], "head." + std::to_string(k + 1));
}

Tower make_tower(std::size_t in, const std::vector<std::size_t>& widths,
                 nd::Activation hidden, std::optional<nd::Activation> last) {
  Tower t;
  for (std::size_t i = 0; i < widths.size(); ++i) {
    const bool is_last = i + 1 == widths.size();
    t.layers.emplace_back(in, widths[i], is_last && last ? *last : hidden);
    in = widths[i];
  }
  return t;
}

void glorot_fill(std::span<double> values, std::size_t fan_in, std::size_t fan_out, nd::Rng rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (double& v : values) v = rng.uniform(-a, a);
}

}  // namespace

std::vector<BlockRef> blocks(ParameterStore& store) {
  std::vector<BlockRef> out;
  visit<ParameterStore, BlockRef>(store, [&](BlockRef r) { out.push_back(std::move(r)); });
  return out;
}

std::vector<ConstBlockRef> blocks(const ParameterStore& store) {
  std::vector<ConstBlockRef> out;
  visit<const ParameterStore, ConstBlockRef>(store,
                                             [&](ConstBlockRef r) { out.push_back(std::move(r)); });
  return out;
}

ParameterStore zeros_like(const ParameterStore& store) {
  ParameterStore z = store;
  for (auto& b : blocks(z))
    for (double& v : b.values) v = 0.0;
  return z;
}

std::size_t parameter_count(const ParameterStore& store) {
  std::size_t n = 0;
  for (const auto& b : blocks(store)) n += b.values.size();
  return n;
}

ParameterStore init_params(const ModelConfig& config) {
  config.validate();
  ParameterStore p;
  for (auto vocab : config.vocab_sizes) p.embeddings.emplace_back(vocab, config.embedding_dim);

  for (std::size_t e = 0; e < config.expert_count(); ++e)
    p.experts.push_back(make_tower(config.input_dim(), config.bottom_widths,
                                   nd::Activation::kRelu, std::nullopt));

  if (config.bottom == BottomKind::kMmoe)
    for (std::size_t k = 0; k < config.scenes; ++k)
      p.gates.emplace_back(config.input_dim(), config.experts);

  std::vector<std::size_t> head_shape = config.head_widths;
  head_shape.push_back(1);
  for (std::size_t k = 0; k < config.scenes; ++k)
    p.heads.push_back(make_tower(config.bottom_output_dim(), head_shape, nd::Activation::kRelu,
                                 nd::Activation::kSigmoid));

  const nd::Rng root(config.seed);
  for (auto& b : blocks(p)) {
    if (b.name.ends_with(".bias")) continue;
    glorot_fill(b.values, b.rows, b.cols, root.fork(b.name));
  }

  if (config.pretrained_embedding_path)
    load_params(read_param_file(*config.pretrained_embedding_path), p, LoadScope::kEmbeddingsOnly);
  return p;
}

OptimizerState make_optimizer(const ParameterStore& params, double learning_rate) {
  OptimizerState s;
  for (const auto& b : blocks(params)) s.blocks.emplace_back(b.values.size(), learning_rate);
  return s;
}

}  // namespace dadnn
