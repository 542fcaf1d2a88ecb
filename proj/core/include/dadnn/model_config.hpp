#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dadnn/kv.hpp"

namespace dadnn {

enum class BottomKind { kMlp, kMmoe };

std::string_view to_string(BottomKind kind);
BottomKind parse_bottom_kind(std::string_view text);

/// Architecture and training description of one DADNN instance.
///
/// `bottom_widths` are the hidden widths of the shared MLP, or of every
/// expert for MMoE. `head_widths` are hidden widths inside each domain head
/// before its single sigmoid output unit; empty means the head is one
/// [bottom_width x 1] layer.
struct ModelConfig {
  std::size_t scenes = 1;
  std::vector<std::size_t> vocab_sizes;
  std::size_t embedding_dim = 5;
  BottomKind bottom = BottomKind::kMlp;
  std::size_t experts = 1;
  std::vector<std::size_t> bottom_widths{64, 64, 64};
  std::vector<std::size_t> head_widths;
  double kt_weight = 0.03;
  bool kt_enabled = true;
  double learning_rate = 0.015;
  std::size_t batch_size = 256;
  std::uint64_t seed = 1;
  std::optional<std::string> pretrained_embedding_path;

  std::size_t fields() const noexcept { return vocab_sizes.size(); }
  std::size_t input_dim() const noexcept { return fields() * embedding_dim; }
  std::size_t expert_count() const noexcept { return bottom == BottomKind::kMmoe ? experts : 1; }
  std::size_t bottom_output_dim() const;

  // Throws ConfigError naming the first violated constraint.
  void validate() const;

  KeyValues to_kv() const;
  static ModelConfig from_kv(const KeyValues& kv);
};

}  // namespace dadnn
