#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace dadnn::metrics {

struct ScoredSample {
  int scene_id = 1;
  double score = 0.0;  // predicted click probability
  int label = 0;
};

/// Ranking AUC via the Mann-Whitney rank statistic; tied scores share the
/// average rank (a tied positive/negative pair counts 0.5). Throws
/// UndefinedMetricError unless both classes are present.
double auc(std::span<const ScoredSample> samples);

/// Reference AUC: explicit loop over all positive/negative pairs.
double auc_oracle(std::span<const ScoredSample> samples);

// mean(score) / mean(label); throws UndefinedMetricError without positives.
double calibration(std::span<const ScoredSample> samples);

struct SceneMetrics {
  int scene_id = 0;
  std::size_t impressions = 0;
  std::optional<double> auc;          // missing for single-class scenes
  std::optional<double> calibration;  // missing without positives
  double empirical_ctr = 0.0;
  double mean_pctr = 0.0;

  bool operator==(const SceneMetrics&) const = default;
};

struct MetricsReport {
  std::vector<SceneMetrics> scenes;     // ascending scene id
  double gauc = 0.0;
  double log_loss = 0.0;
  std::vector<int> excluded_scenes;     // left out of GAUC (single class)

  const SceneMetrics* scene(int id) const;

  // One JSON object on a single line, field names as in this struct.
  std::string to_json_line() const;
  static MetricsReport from_json_line(const std::string& line);

  bool operator==(const MetricsReport&) const = default;
};

/// Impression-weighted mean of per-scene AUCs. Scenes lacking a class are
/// excluded (and listed); throws UndefinedMetricError when none remain.
MetricsReport evaluate(std::span<const ScoredSample> samples);

// Shorthand for evaluate(samples).gauc.
double gauc(std::span<const ScoredSample> samples);

}  // namespace dadnn::metrics
