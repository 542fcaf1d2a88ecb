#include "dadnn/model_config.hpp"

#include <string>

#include "dadnn/errors.hpp"

namespace dadnn {

std::string_view to_string(BottomKind kind) {
  return kind == BottomKind::kMmoe ? "mmoe" : "mlp";
}

BottomKind parse_bottom_kind(std::string_view text) {
  if (text == "mlp") return BottomKind::kMlp;
  if (text == "mmoe") return BottomKind::kMmoe;
  throw ConfigError("unknown bottom variant '" + std::string(text) + "' (expected mlp or mmoe)");
}

std::size_t ModelConfig::bottom_output_dim() const {
  return bottom_widths.empty() ? input_dim() : bottom_widths.back();
}

void ModelConfig::validate() const {
  if (scenes < 1) throw ConfigError("model config: scenes (K) must be >= 1");
  if (vocab_sizes.empty()) throw ConfigError("model config: at least one field is required");
  for (std::size_t j = 0; j < vocab_sizes.size(); ++j)
    if (vocab_sizes[j] < 1)
      throw ConfigError("model config: field " + std::to_string(j) + " has an empty vocabulary");
  if (embedding_dim < 1) throw ConfigError("model config: embedding_dim must be >= 1");
  if (bottom == BottomKind::kMmoe && experts < 1)
    throw ConfigError("model config: MMoE requires at least one expert");
  if (bottom_widths.empty()) throw ConfigError("model config: shared bottom needs >= 1 layer");
  for (auto w : bottom_widths)
    if (w < 1) throw ConfigError("model config: bottom widths must be >= 1");
  for (auto w : head_widths)
    if (w < 1) throw ConfigError("model config: head widths must be >= 1");
  if (kt_enabled && scenes < 2)
    throw ConfigError("model config: knowledge transfer needs K >= 2 scenes");
  if (kt_weight < 0.0) throw ConfigError("model config: kt_weight must be >= 0");
  if (learning_rate < 0.0) throw ConfigError("model config: learning_rate must be >= 0");
  if (batch_size < 1) throw ConfigError("model config: batch_size must be >= 1");
}

KeyValues ModelConfig::to_kv() const {
  KeyValues kv;
  kv.set("scenes", static_cast<std::int64_t>(scenes));
  kv.set_list("vocab_sizes", vocab_sizes);
  kv.set("embedding_dim", static_cast<std::int64_t>(embedding_dim));
  kv.set("bottom", std::string(to_string(bottom)));
  kv.set("experts", static_cast<std::int64_t>(experts));
  kv.set_list("bottom_widths", bottom_widths);
  kv.set_list("head_widths", head_widths);
  kv.set("kt_weight", kt_weight);
  kv.set("kt_enabled", kt_enabled);
  kv.set("learning_rate", learning_rate);
  kv.set("batch_size", static_cast<std::int64_t>(batch_size));
  kv.set("seed", std::to_string(seed));
  return kv;
}

ModelConfig ModelConfig::from_kv(const KeyValues& kv) {
  ModelConfig c;
  c.scenes = kv.get_size("scenes", c.scenes);
  c.vocab_sizes = kv.get_size_list("vocab_sizes", c.vocab_sizes);
  c.embedding_dim = kv.get_size("embedding_dim", c.embedding_dim);
  c.bottom = parse_bottom_kind(kv.get_string("bottom", "mlp"));
  c.experts = kv.get_size("experts", c.experts);
  c.bottom_widths = kv.get_size_list("bottom_widths", c.bottom_widths);
  c.head_widths = kv.get_size_list("head_widths", c.head_widths);
  c.kt_weight = kv.get_double("kt_weight", c.kt_weight);
  c.kt_enabled = kv.get_bool("kt_enabled", c.kt_enabled);
  c.learning_rate = kv.get_double("learning_rate", c.learning_rate);
  c.batch_size = kv.get_size("batch_size", c.batch_size);
  if (auto s = kv.get("seed")) c.seed = std::stoull(*s);
  c.validate();
  return c;
}

}  // namespace dadnn
