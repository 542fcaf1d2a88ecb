#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "dadnn/kv.hpp"
#include "dadnn/parameter_store.hpp"

namespace dadnn {

/// Parameter container, all integers and floats little-endian:
///
///   "DADNNPRM"            8-byte magic
///   u32 version           currently 1
///   u32 meta_len, bytes   free-form key = value text (model config)
///   u32 block_count
///   per block: u32 name_len, name bytes, u64 rows, u64 cols,
///              rows * cols IEEE-754 binary64 values, row-major
struct NamedBlock {
  std::string name;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;
};

struct ParamFile {
  KeyValues meta;
  std::vector<NamedBlock> blocks;
};

enum class LoadScope { kFull, kEmbeddingsOnly };

void export_params(const ParameterStore& params, const std::filesystem::path& path,
                   const KeyValues& meta = {});
ParamFile read_param_file(const std::filesystem::path& path);
ParamFile to_param_file(const ParameterStore& params, const KeyValues& meta = {});
void write_param_file(const ParamFile& file, const std::filesystem::path& path);

/// Copies blocks from `file` into `params`. Shapes must match exactly;
/// mismatches raise ConfigError naming the block (and the field for
/// embedding tables).
void load_params(const ParamFile& file, ParameterStore& params, LoadScope scope = LoadScope::kFull);

// Convenience: read + load into a store shaped for `config`.
ParameterStore import_params(const std::filesystem::path& path, const ModelConfig& config,
                             LoadScope scope = LoadScope::kFull);

}  // namespace dadnn
