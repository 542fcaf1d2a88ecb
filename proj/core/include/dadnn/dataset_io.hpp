#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

#include "dadnn/instance.hpp"
#include "dadnn/synthgen.hpp"

namespace dadnn::synth {

/// CSV file `scene_id,f1,...,f<f>,label`, one integer row per instance, LF
/// line endings, plus a sidecar `<basename>.meta` key = value file with
/// `scenes`, `fields`, `vocab_sizes`, `rows` and `count.<scene_id>`.
struct InstanceFile {
  std::vector<Instance> instances;
  std::size_t scenes = 0;
  std::vector<std::size_t> vocab_sizes;
};

void write_instances(const std::filesystem::path& csv_path, const InstanceFile& data);
InstanceFile read_instances(const std::filesystem::path& csv_path);

std::filesystem::path meta_path_for(const std::filesystem::path& csv_path);

// <dir>/train.csv, <dir>/test.csv and their .meta files.
void write_dataset(const DatasetSplit& split, const std::filesystem::path& dir);
DatasetSplit read_dataset(const std::filesystem::path& dir);

}  // namespace dadnn::synth
