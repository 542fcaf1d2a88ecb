#include "dadnn/experiment_spec.hpp"

#include <string>

#include "dadnn/errors.hpp"

namespace dadnn::harness {

namespace {

constexpr std::string_view kGenPrefix = "gen.";

}  // namespace

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::kPooledDnn: return "pooled-dnn";
    case Variant::kPerSceneDnn: return "per-scene-dnn";
    case Variant::kDadnnMlp: return "dadnn-mlp";
    case Variant::kDadnnMmoe: return "dadnn-mmoe";
  }
  return "?";
}

Variant parse_variant(std::string_view text) {
  for (Variant v : {Variant::kPooledDnn, Variant::kPerSceneDnn, Variant::kDadnnMlp,
                    Variant::kDadnnMmoe})
    if (to_string(v) == text) return v;
  throw ConfigError("unknown model variant '" + std::string(text) +
                    "' (expected pooled-dnn, per-scene-dnn, dadnn-mlp or dadnn-mmoe)");
}

void ExperimentSpec::validate() const {
  if (name.empty()) throw ConfigError("experiment name is empty");
  if (epochs == 0) throw ConfigError("epochs must be >= 1");
  if (seeds.empty()) throw ConfigError("seed list is empty");
  if (embedding_dim == 0) throw ConfigError("embedding_dim must be >= 1");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
  if (!(kt_weight >= 0.0)) throw ConfigError("kt_weight must be >= 0");
  if (finetune_embeddings && pretrain_epochs == 0)
    throw ConfigError("finetune requires pretrain_epochs >= 1");
  for (std::size_t w : bottom_widths)
    if (w == 0) throw ConfigError("bottom_widths entries must be >= 1");
  for (std::size_t w : head_widths)
    if (w == 0) throw ConfigError("head_widths entries must be >= 1");
  if (!data_dir) gen.validate();
}

std::vector<std::string> ExperimentSpec::warnings() const {
  std::vector<std::string> out;
  if (variant == Variant::kPerSceneDnn && kt_enabled)
    out.push_back(name + ": per-scene-dnn ignores kt = true");
  if (variant == Variant::kPerSceneDnn && finetune_embeddings)
    out.push_back(name + ": per-scene-dnn ignores finetune = true");
  return out;
}

KeyValues ExperimentSpec::to_kv() const {
  KeyValues kv;
  kv.set("name", name);
  kv.set("variant", std::string(to_string(variant)));
  kv.set("kt", kt_enabled);
  kv.set("finetune", finetune_embeddings);
  kv.set("epochs", static_cast<std::int64_t>(epochs));
  kv.set("eval_every", static_cast<std::int64_t>(eval_every));
  std::vector<std::size_t> s(seeds.begin(), seeds.end());
  kv.set_list("seeds", s);
  if (data_dir) {
    kv.set("data", data_dir->string());
  } else {
    const KeyValues gen_kv = gen.to_kv();
    for (const auto& [k, v] : gen_kv.entries())
      if (k != "seed") kv.set(std::string(kGenPrefix) + k, v);
  }
  kv.set("embedding_dim", static_cast<std::int64_t>(embedding_dim));
  if (!bottom_widths.empty()) kv.set_list("bottom_widths", bottom_widths);
  if (experts != 0) kv.set("experts", static_cast<std::int64_t>(experts));
  if (!head_widths.empty()) kv.set_list("head_widths", head_widths);
  kv.set("learning_rate", learning_rate);
  kv.set("kt_weight", kt_weight);
  if (batch_size != 0) kv.set("batch_size", static_cast<std::int64_t>(batch_size));
  kv.set("pretrain_epochs", static_cast<std::int64_t>(pretrain_epochs));
  kv.set("paper_scale", paper_scale);
  return kv;
}

ExperimentSpec ExperimentSpec::from_kv(const KeyValues& kv) {
  ExperimentSpec s;
  s.name = kv.get_string("name", s.name);
  s.variant = parse_variant(kv.get_string("variant", std::string(to_string(s.variant))));
  s.kt_enabled = kv.get_bool("kt", s.kt_enabled);
  s.finetune_embeddings = kv.get_bool("finetune", s.finetune_embeddings);
  s.epochs = kv.get_size("epochs", s.epochs);
  s.eval_every = kv.get_size("eval_every", s.eval_every);
  if (kv.contains("seeds")) {
    s.seeds.clear();
    for (std::size_t v : kv.get_size_list("seeds", {})) s.seeds.push_back(v);
  }
  if (auto d = kv.get("data")) s.data_dir = *d;

  KeyValues gen_kv;
  for (const auto& [k, v] : kv.entries())
    if (k.starts_with(kGenPrefix)) gen_kv.set(k.substr(kGenPrefix.size()), v);
  s.gen = synth::GenConfig::from_kv(gen_kv);

  s.embedding_dim = kv.get_size("embedding_dim", s.embedding_dim);
  s.bottom_widths = kv.get_size_list("bottom_widths", s.bottom_widths);
  s.experts = kv.get_size("experts", s.experts);
  s.head_widths = kv.get_size_list("head_widths", s.head_widths);
  s.learning_rate = kv.get_double("learning_rate", s.learning_rate);
  s.kt_weight = kv.get_double("kt_weight", s.kt_weight);
  s.batch_size = kv.get_size("batch_size", s.batch_size);
  s.pretrain_epochs = kv.get_size("pretrain_epochs", s.pretrain_epochs);
  s.paper_scale = kv.get_bool("paper_scale", s.paper_scale);
  s.validate();
  return s;
}

ExperimentSpec ExperimentSpec::load(const std::filesystem::path& path) {
  return from_kv(KeyValues::load(path));
}

std::vector<std::size_t> effective_bottom_widths(const ExperimentSpec& spec) {
  if (!spec.bottom_widths.empty()) return spec.bottom_widths;
  const bool mmoe = spec.variant == Variant::kDadnnMmoe;
  const std::size_t w = spec.paper_scale ? (mmoe ? 100 : 200) : (mmoe ? 32 : 64);
  return {w, w, w};
}

std::size_t effective_experts(const ExperimentSpec& spec) {
  if (spec.variant != Variant::kDadnnMmoe) return 1;
  return spec.experts != 0 ? spec.experts : 2;
}

std::size_t effective_batch_size(const ExperimentSpec& spec) {
  if (spec.batch_size != 0) return spec.batch_size;
  return spec.paper_scale ? 3000 : 256;
}

ModelConfig model_config_for(const ExperimentSpec& spec, std::size_t scenes,
                             const std::vector<std::size_t>& vocab_sizes, std::uint64_t seed) {
  ModelConfig c;
  const bool single = spec.variant == Variant::kPooledDnn || spec.variant == Variant::kPerSceneDnn;
  c.scenes = single ? 1 : scenes;
  c.vocab_sizes = vocab_sizes;
  c.embedding_dim = spec.embedding_dim;
  c.bottom = spec.variant == Variant::kDadnnMmoe ? BottomKind::kMmoe : BottomKind::kMlp;
  c.experts = effective_experts(spec);
  c.bottom_widths = effective_bottom_widths(spec);
  c.head_widths = spec.head_widths;
  c.kt_weight = spec.kt_weight;
  c.kt_enabled = !single && spec.kt_enabled && c.scenes > 1;
  c.learning_rate = spec.learning_rate;
  c.batch_size = effective_batch_size(spec);
  c.seed = seed;
  c.validate();
  return c;
}

}  // namespace dadnn::harness
