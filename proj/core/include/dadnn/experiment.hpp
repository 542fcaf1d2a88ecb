#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dadnn/dadnn_model.hpp"
#include "dadnn/experiment_spec.hpp"
#include "dadnn/metrics.hpp"
#include "dadnn/param_io.hpp"
#include "dadnn/synthgen.hpp"

namespace dadnn::harness {

struct EvalPoint {
  std::size_t epoch = 0;
  metrics::MetricsReport report;
};

struct RunRecord {
  std::string spec_name;
  std::string variant;
  std::uint64_t seed = 0;
  std::vector<EvalPoint> series;
  metrics::MetricsReport final_report;
  double wall_clock_seconds = 0.0;
  std::size_t parameter_count = 0;

  nlohmann::json to_json() const;
  static RunRecord from_json(const nlohmann::json& j);
};

struct TrainedNetwork {
  ModelConfig config;
  ParameterStore params;
};

/// Networks produced by one run. Pooled and DADNN variants hold a single
/// network; the per-scene baseline holds one network per scene, in scene order.
struct TrainedVariant {
  Variant variant = Variant::kDadnnMlp;
  std::vector<TrainedNetwork> networks;

  std::size_t parameter_count() const;
};

struct ExperimentData {
  synth::DatasetSplit split;
  std::optional<synth::DatasetSplit> pretrain;  // scene-0 rows, for finetuning
};

// Reads spec.data_dir (plus pretrain.csv when present) or generates data for
// `seed`. Generated pretraining data is only produced when `with_pretrain`.
ExperimentData load_data(const ExperimentSpec& spec, std::uint64_t seed, bool with_pretrain);

/// Embeddings pretrained on the auxiliary scene with a pooled network of the
/// spec's embedding size; memoized per (data, seed, schedule) in-process.
ParamFile pretrained_embeddings(const ExperimentSpec& spec, const ExperimentData& data,
                                std::uint64_t seed);

using ProgressFn = std::function<void(const std::string&)>;

struct RunResult {
  RunRecord record;
  TrainedVariant trained;
};

RunResult run_single(const ExperimentSpec& spec, std::uint64_t seed, const ExperimentData& data,
                     const ProgressFn& progress = {});

// Every seed of the spec; data is loaded (or generated) per seed.
std::vector<RunRecord> run_experiment(const ExperimentSpec& spec, const ProgressFn& progress = {});

// Scored test samples carrying the original scene ids.
std::vector<metrics::ScoredSample> score(const TrainedVariant& trained,
                                         std::span<const Instance> rows);

// ---------------------------------------------------------------- ablation

struct AblationRow {
  std::string method;
  std::uint64_t seed = 0;
  metrics::MetricsReport report;
};

struct AblationResult {
  std::vector<std::string> methods;  // table order
  std::vector<AblationRow> rows;     // methods x seeds
  std::size_t scenes = 0;

  // Per-scene AUC + GAUC, one row per method (median over seeds), CSV text.
  std::string table_csv() const;
  double gauc(const std::string& method, std::uint64_t seed) const;
};

/// BASE (DADNN-MLP), BASE With FT NO-KT, MMoE With FT NO-KT, BASE With FT,
/// MMoE With FT; built from `base` by toggling variant / kt / finetune.
std::vector<ExperimentSpec> ablation_specs(const ExperimentSpec& base);
AblationResult ablation_suite(const ExperimentSpec& base, const ProgressFn& progress = {});

// ------------------------------------------------------------ expert sweep

struct SweepRow {
  std::size_t experts = 0;
  std::vector<std::size_t> expert_widths;
  std::uint64_t seed = 0;
  double gauc = 0.0;
  std::size_t parameter_count = 0;
};

/// Per-expert widths for `n` experts: the base widths scaled uniformly so the
/// parameter count stays as close as possible to the single-expert model.
/// Throws ConfigError when no width >= 1 fits the budget.
std::vector<std::size_t> widths_for_experts(const ExperimentSpec& base, std::size_t scenes,
                                            const std::vector<std::size_t>& vocab_sizes,
                                            std::size_t n);

std::vector<SweepRow> expert_sweep(const ExperimentSpec& base,
                                   const std::vector<std::size_t>& expert_counts,
                                   const ProgressFn& progress = {});
std::string sweep_csv(const std::vector<SweepRow>& rows);

// -------------------------------------------------------------- gate dump

struct GateTable {
  std::vector<int> scene_ids;
  std::vector<std::size_t> counts;
  nd::Matrix means;  // [scene x expert] mean gate over that scene's rows

  double max_pairwise_l1() const;
  std::string to_csv() const;
};

// Mean softmax gate per scene over `rows`. Throws ConfigError for non-MMoE models.
GateTable gate_dump(const ModelConfig& config, const ParameterStore& params,
                    std::span<const Instance> rows);

}  // namespace dadnn::harness
