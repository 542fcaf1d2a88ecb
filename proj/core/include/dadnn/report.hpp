#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "dadnn/experiment.hpp"

namespace dadnn::harness {

/// Method-by-scene comparison built from run records: per-scene AUC and
/// calibration plus GAUC, each the median over the method's seeds.
struct ComparisonTable {
  std::vector<std::string> methods;
  std::vector<int> scene_ids;
  std::string csv;
  std::string summary;
};

ComparisonTable build_comparison(const std::vector<RunRecord>& records);

// Writes <dir>/comparison.csv, <dir>/curves.csv and <dir>/summary.txt.
// Throws ConfigError when `records` is empty.
void write_report(const std::vector<RunRecord>& records, const std::filesystem::path& dir);

void save_record(const RunRecord& record, const std::filesystem::path& path);
std::vector<RunRecord> load_records(const std::filesystem::path& dir);

double median(std::vector<double> values);

}  // namespace dadnn::harness
