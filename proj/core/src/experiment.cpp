#include "dadnn/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iostream>
#include <map>
#include <mutex>
#include <sstream>

#include "dadnn/batching.hpp"
#include "dadnn/dataset_io.hpp"
#include "dadnn/errors.hpp"
#include "dadnn/report.hpp"
#include "dadnn/rng.hpp"

namespace dadnn::harness {

namespace {

constexpr std::size_t kScoreChunk = 2048;

std::uint64_t derived_seed(std::uint64_t seed, std::string_view tag) {
  return nd::splitmix64(seed ^ nd::fnv1a64(tag));
}

std::vector<Instance> gather(std::span<const Instance> rows, std::span<const std::size_t> idx,
                             bool single_head) {
  std::vector<Instance> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) {
    out.push_back(rows[i]);
    if (single_head) out.back().scene_id = 1;
  }
  return out;
}

std::vector<Instance> to_single_head(std::span<const Instance> rows) {
  std::vector<Instance> out(rows.begin(), rows.end());
  for (auto& r : out) r.scene_id = 1;
  return out;
}

void train_epoch(const ModelConfig& config, ParameterStore& params, OptimizerState& opt,
                 std::span<const Instance> rows, std::uint64_t batch_seed, std::size_t epoch,
                 bool single_head) {
  const std::size_t bs = std::min(config.batch_size, rows.size());
  for (const auto& idx : synth::compose_batches(rows, bs, batch_seed, epoch)) {
    const auto batch = gather(rows, idx, single_head);
    train_step(config, params, opt, batch);
  }
}

std::vector<double> own_probabilities(const TrainedNetwork& net, std::span<const Instance> rows) {
  std::vector<double> out;
  out.reserve(rows.size());
  for (std::size_t start = 0; start < rows.size(); start += kScoreChunk) {
    const auto chunk = rows.subspan(start, std::min(kScoreChunk, rows.size() - start));
    const ForwardTrace t = forward(net.config, net.params, chunk);
    for (std::size_t i = 0; i < chunk.size(); ++i) out.push_back(t.own_probability(i));
  }
  return out;
}

void check_scene_ids(const std::vector<Instance>& rows, std::size_t scenes, const char* what) {
  for (std::size_t i = 0; i < rows.size(); ++i)
    if (rows[i].scene_id < 1 || static_cast<std::size_t>(rows[i].scene_id) > scenes)
      throw ConfigError(std::string(what) + " row " + std::to_string(i) + ": scene_id " +
                        std::to_string(rows[i].scene_id) + " outside 1.." +
                        std::to_string(scenes));
}

std::string network_label(const ExperimentSpec& spec, std::uint64_t seed) {
  return "[" + spec.name + " seed " + std::to_string(seed) + "]";
}

std::string format_fixed(double v, int digits) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(digits);
  os << v;
  return os.str();
}

}  // namespace

// ------------------------------------------------------------------ records

nlohmann::json RunRecord::to_json() const {
  nlohmann::json j;
  j["spec_name"] = spec_name;
  j["variant"] = variant;
  j["seed"] = seed;
  j["series"] = nlohmann::json::array();
  for (const auto& p : series)
    j["series"].push_back({{"epoch", p.epoch},
                           {"report", nlohmann::json::parse(p.report.to_json_line())}});
  j["final_report"] = nlohmann::json::parse(final_report.to_json_line());
  j["wall_clock_seconds"] = wall_clock_seconds;
  j["parameter_count"] = parameter_count;
  return j;
}

RunRecord RunRecord::from_json(const nlohmann::json& j) {
  try {
    RunRecord r;
    r.spec_name = j.at("spec_name").get<std::string>();
    r.variant = j.at("variant").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& p : j.at("series"))
      r.series.push_back({p.at("epoch").get<std::size_t>(),
                          metrics::MetricsReport::from_json_line(p.at("report").dump())});
    r.final_report = metrics::MetricsReport::from_json_line(j.at("final_report").dump());
    r.wall_clock_seconds = j.at("wall_clock_seconds").get<double>();
    r.parameter_count = j.at("parameter_count").get<std::size_t>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed run record: ") + e.what());
  }
}

std::size_t TrainedVariant::parameter_count() const {
  std::size_t n = 0;
  for (const auto& net : networks) n += dadnn::parameter_count(net.params);
  return n;
}

// --------------------------------------------------------------------- data

ExperimentData load_data(const ExperimentSpec& spec, std::uint64_t seed, bool with_pretrain) {
  ExperimentData data;
  if (spec.data_dir) {
    data.split = synth::read_dataset(*spec.data_dir);
    if (with_pretrain) {
      const auto path = *spec.data_dir / "pretrain.csv";
      if (!std::filesystem::exists(path))
        throw ConfigError(spec.name + ": finetune requested but " + path.string() +
                          " does not exist");
      auto file = synth::read_instances(path);
      synth::DatasetSplit p;
      p.train = std::move(file.instances);
      p.scenes = file.scenes;
      p.vocab_sizes = std::move(file.vocab_sizes);
      data.pretrain = std::move(p);
    }
  } else {
    synth::GenConfig gen = spec.gen;
    gen.seed = seed;
    synth::SyntheticWorld world(gen);
    data.split = world.sample();
    if (with_pretrain) data.pretrain = world.sample_pretrain();
  }
  if (data.split.train.empty()) throw ConfigError(spec.name + ": training split is empty");
  if (data.split.test.empty()) throw ConfigError(spec.name + ": test split is empty");
  check_scene_ids(data.split.train, data.split.scenes, "train");
  check_scene_ids(data.split.test, data.split.scenes, "test");
  if (data.pretrain && data.pretrain->vocab_sizes != data.split.vocab_sizes)
    throw ConfigError(spec.name + ": pretraining data vocab sizes differ from the main dataset");
  return data;
}

ParamFile pretrained_embeddings(const ExperimentSpec& spec, const ExperimentData& data,
                                std::uint64_t seed) {
  if (!data.pretrain || data.pretrain->train.empty())
    throw ConfigError(spec.name + ": finetune requested without pretraining data");

  static std::mutex mu;
  static std::map<std::string, ParamFile> cache;
  std::ostringstream key;
  key << (spec.data_dir ? spec.data_dir->string() : spec.gen.to_kv().dump()) << '|' << seed
      << '|' << spec.embedding_dim << '|' << spec.pretrain_epochs << '|'
      << format_double(spec.learning_rate) << '|' << effective_batch_size(spec) << '|'
      << spec.paper_scale;
  {
    std::lock_guard lock(mu);
    if (auto it = cache.find(key.str()); it != cache.end()) return it->second;
  }

  ExperimentSpec pooled = spec;
  pooled.variant = Variant::kPooledDnn;
  pooled.bottom_widths.clear();
  pooled.head_widths.clear();
  const ModelConfig cfg = model_config_for(pooled, 1, data.pretrain->vocab_sizes,
                                           derived_seed(seed, "pretrain"));
  ParameterStore params = init_params(cfg);
  OptimizerState opt = make_optimizer(params, cfg.learning_rate);
  const auto rows = to_single_head(data.pretrain->train);
  for (std::size_t e = 0; e < spec.pretrain_epochs; ++e)
    train_epoch(cfg, params, opt, rows, cfg.seed, e, false);

  ParamFile file;
  file.meta = cfg.to_kv();
  for (auto& b : to_param_file(params).blocks)
    if (b.name.starts_with("embedding.")) file.blocks.push_back(std::move(b));

  std::lock_guard lock(mu);
  cache.emplace(key.str(), file);
  return file;
}

// ------------------------------------------------------------------ running

std::vector<metrics::ScoredSample> score(const TrainedVariant& trained,
                                         std::span<const Instance> rows) {
  std::vector<metrics::ScoredSample> out(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out[i].scene_id = rows[i].scene_id;
    out[i].label = rows[i].label;
  }
  if (trained.variant == Variant::kPerSceneDnn) {
    const std::size_t k_max = trained.networks.size();
    std::vector<std::vector<std::size_t>> by_scene(k_max);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto s = static_cast<std::size_t>(rows[i].scene_id);
      if (s < 1 || s > k_max)
        throw DataError("row " + std::to_string(i) + ": scene_id " + std::to_string(s) +
                        " has no per-scene network");
      by_scene[s - 1].push_back(i);
    }
    for (std::size_t k = 0; k < k_max; ++k) {
      const auto subset = gather(rows, by_scene[k], true);
      const auto p = own_probabilities(trained.networks[k], subset);
      for (std::size_t j = 0; j < p.size(); ++j) out[by_scene[k][j]].score = p[j];
    }
    return out;
  }
  const TrainedNetwork& net = trained.networks.at(0);
  std::vector<double> p;
  if (trained.variant == Variant::kPooledDnn)
    p = own_probabilities(net, to_single_head(rows));
  else
    p = own_probabilities(net, rows);
  for (std::size_t i = 0; i < rows.size(); ++i) out[i].score = p[i];
  return out;
}

RunResult run_single(const ExperimentSpec& spec, std::uint64_t seed, const ExperimentData& data,
                     const ProgressFn& progress) {
  spec.validate();
  const auto& split = data.split;
  const std::size_t K = split.scenes;
  const bool per_scene = spec.variant == Variant::kPerSceneDnn;
  const bool single_head = per_scene || spec.variant == Variant::kPooledDnn;
  const bool finetune = spec.finetune_embeddings && !per_scene;

  // Everything that can be rejected is rejected before any training starts.
  std::vector<std::vector<Instance>> scene_rows;
  if (per_scene) {
    scene_rows.resize(K);
    for (const auto& r : split.train) scene_rows[static_cast<std::size_t>(r.scene_id) - 1].push_back(r);
    for (std::size_t k = 0; k < K; ++k)
      if (scene_rows[k].empty())
        throw ConfigError(spec.name + ": scene " + std::to_string(k + 1) +
                          " has no training rows for its per-scene network");
    for (auto& rows : scene_rows)
      for (auto& r : rows) r.scene_id = 1;
  }
  if (!single_head && spec.kt_enabled && K < 2)
    throw ConfigError(spec.name + ": knowledge transfer needs at least 2 scenes");

  const auto start = std::chrono::steady_clock::now();
  std::optional<ParamFile> embeddings;
  if (finetune) embeddings = pretrained_embeddings(spec, data, seed);

  RunResult result;
  result.trained.variant = spec.variant;
  const std::size_t networks = per_scene ? K : 1;
  std::vector<OptimizerState> opts;
  for (std::size_t k = 0; k < networks; ++k) {
    const std::uint64_t model_seed =
        per_scene ? derived_seed(seed, "scene." + std::to_string(k + 1)) : seed;
    TrainedNetwork net{model_config_for(spec, K, split.vocab_sizes, model_seed), {}};
    net.params = init_params(net.config);
    if (embeddings) load_params(*embeddings, net.params, LoadScope::kEmbeddingsOnly);
    opts.push_back(make_optimizer(net.params, net.config.learning_rate));
    result.trained.networks.push_back(std::move(net));
  }

  RunRecord& rec = result.record;
  rec.spec_name = spec.name;
  rec.variant = std::string(to_string(spec.variant));
  rec.seed = seed;
  rec.parameter_count = result.trained.parameter_count();

  for (std::size_t epoch = 0; epoch < spec.epochs; ++epoch) {
    for (std::size_t k = 0; k < networks; ++k) {
      auto& net = result.trained.networks[k];
      if (per_scene)
        train_epoch(net.config, net.params, opts[k], scene_rows[k], net.config.seed, epoch, false);
      else
        train_epoch(net.config, net.params, opts[k], split.train, seed, epoch, single_head);
    }
    const bool last = epoch + 1 == spec.epochs;
    const bool scheduled = spec.eval_every != 0 && (epoch + 1) % spec.eval_every == 0;
    if (last || scheduled) {
      const auto scored = score(result.trained, split.test);
      auto report = metrics::evaluate(scored);
      if (progress)
        progress(network_label(spec, seed) + " epoch " + std::to_string(epoch + 1) + "/" +
                 std::to_string(spec.epochs) + " gauc " + format_fixed(report.gauc, 5) +
                 " logloss " + format_fixed(report.log_loss, 5));
      rec.series.push_back({epoch + 1, report});
      if (last) rec.final_report = std::move(report);
    }
  }
  rec.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

std::vector<RunRecord> run_experiment(const ExperimentSpec& spec, const ProgressFn& progress) {
  spec.validate();
  for (const auto& w : spec.warnings()) std::cerr << "warning: " << w << '\n';
  const bool with_pretrain = spec.finetune_embeddings && spec.variant != Variant::kPerSceneDnn;
  std::vector<RunRecord> out;
  for (std::uint64_t seed : spec.seeds) {
    const auto data = load_data(spec, seed, with_pretrain);
    out.push_back(run_single(spec, seed, data, progress).record);
  }
  return out;
}

// ----------------------------------------------------------------- ablation

std::vector<ExperimentSpec> ablation_specs(const ExperimentSpec& base) {
  struct Row {
    const char* name;
    Variant variant;
    bool kt;
    bool ft;
  };
  static constexpr Row kRows[] = {
      {"BASE", Variant::kDadnnMlp, true, false},
      {"BASE With FT NO-KT", Variant::kDadnnMlp, false, true},
      {"MMoE With FT NO-KT", Variant::kDadnnMmoe, false, true},
      {"BASE With FT", Variant::kDadnnMlp, true, true},
      {"MMoE With FT", Variant::kDadnnMmoe, true, true},
  };
  std::vector<std::size_t> mlp_widths = base.bottom_widths;
  if (base.variant == Variant::kDadnnMmoe) mlp_widths.clear();
  std::vector<std::size_t> mmoe_widths;
  if (!mlp_widths.empty())
    for (std::size_t w : mlp_widths) mmoe_widths.push_back(std::max<std::size_t>(1, w / 2));
  if (base.variant == Variant::kDadnnMmoe) mmoe_widths = base.bottom_widths;

  std::vector<ExperimentSpec> out;
  for (const Row& r : kRows) {
    ExperimentSpec s = base;
    s.name = r.name;
    s.variant = r.variant;
    s.kt_enabled = r.kt;
    s.finetune_embeddings = r.ft;
    s.bottom_widths = r.variant == Variant::kDadnnMmoe ? mmoe_widths : mlp_widths;
    out.push_back(std::move(s));
  }
  return out;
}

AblationResult ablation_suite(const ExperimentSpec& base, const ProgressFn& progress) {
  base.validate();
  const auto specs = ablation_specs(base);
  AblationResult result;
  for (const auto& s : specs) result.methods.push_back(s.name);
  for (std::uint64_t seed : base.seeds) {
    const auto data = load_data(base, seed, true);
    result.scenes = data.split.scenes;
    for (const auto& s : specs) {
      auto run = run_single(s, seed, data, progress);
      result.rows.push_back({s.name, seed, std::move(run.record.final_report)});
    }
  }
  return result;
}

double AblationResult::gauc(const std::string& method, std::uint64_t seed) const {
  for (const auto& r : rows)
    if (r.method == method && r.seed == seed) return r.report.gauc;
  throw ConfigError("no ablation row for '" + method + "' seed " + std::to_string(seed));
}

std::string AblationResult::table_csv() const {
  std::ostringstream os;
  os << "method";
  for (std::size_t k = 1; k <= scenes; ++k) os << ",auc_scene" << k;
  os << ",gauc\n";
  for (const auto& m : methods) {
    os << m;
    for (std::size_t k = 1; k <= scenes; ++k) {
      std::vector<double> v;
      for (const auto& r : rows)
        if (r.method == m)
          if (const auto* sm = r.report.scene(static_cast<int>(k)); sm && sm->auc)
            v.push_back(*sm->auc);
      os << ',';
      if (!v.empty()) os << format_fixed(median(v), 6);
    }
    std::vector<double> g;
    for (const auto& r : rows)
      if (r.method == m) g.push_back(r.report.gauc);
    os << ',' << format_fixed(median(g), 6) << '\n';
  }
  return os.str();
}

// ------------------------------------------------------------- expert sweep

namespace {

std::vector<std::size_t> sweep_base_widths(const ExperimentSpec& base) {
  if (!base.bottom_widths.empty() && base.variant != Variant::kDadnnMmoe) return base.bottom_widths;
  ExperimentSpec mlp = base;
  mlp.variant = Variant::kDadnnMlp;
  mlp.bottom_widths.clear();
  return effective_bottom_widths(mlp);
}

ExperimentSpec sweep_spec(const ExperimentSpec& base, std::size_t n,
                          std::vector<std::size_t> widths) {
  ExperimentSpec s = base;
  s.variant = Variant::kDadnnMmoe;
  s.experts = n;
  s.bottom_widths = std::move(widths);
  s.name = base.name + ".experts" + std::to_string(n);
  return s;
}

std::size_t count_for(const ExperimentSpec& spec, std::size_t scenes,
                      const std::vector<std::size_t>& vocab) {
  return parameter_count(init_params(model_config_for(spec, scenes, vocab, 1)));
}

}  // namespace

std::vector<std::size_t> widths_for_experts(const ExperimentSpec& base, std::size_t scenes,
                                            const std::vector<std::size_t>& vocab_sizes,
                                            std::size_t n) {
  if (n == 0) throw ConfigError("expert count must be >= 1");
  const auto widths = sweep_base_widths(base);
  if (n == 1) return widths;
  const std::size_t budget = count_for(sweep_spec(base, 1, widths), scenes, vocab_sizes);
  const double w0 = static_cast<double>(widths.front());

  auto scaled = [&](std::size_t w) {
    std::vector<std::size_t> out;
    for (std::size_t b : widths)
      out.push_back(static_cast<std::size_t>(std::llround(static_cast<double>(b) * w / w0)));
    return out;
  };
  std::optional<std::vector<std::size_t>> best;
  std::size_t best_gap = 0;
  for (std::size_t w = 1; w <= widths.front(); ++w) {
    const auto cand = scaled(w);
    if (std::find(cand.begin(), cand.end(), 0u) != cand.end()) continue;
    const std::size_t count = count_for(sweep_spec(base, n, cand), scenes, vocab_sizes);
    const std::size_t gap = count > budget ? count - budget : budget - count;
    if (!best || gap < best_gap) {
      best = cand;
      best_gap = gap;
    }
  }
  if (!best || static_cast<double>(best_gap) > 0.05 * static_cast<double>(budget))
    throw ConfigError("width underflow: " + std::to_string(n) +
                      " experts cannot fit the single-expert parameter budget of " +
                      std::to_string(budget));
  return *best;
}

std::vector<SweepRow> expert_sweep(const ExperimentSpec& base,
                                   const std::vector<std::size_t>& expert_counts,
                                   const ProgressFn& progress) {
  base.validate();
  if (expert_counts.empty()) throw ConfigError("expert sweep needs at least one expert count");
  for (std::size_t n : expert_counts)
    if (n == 0) throw ConfigError("expert counts must be >= 1");

  const bool with_pretrain = base.finetune_embeddings;
  std::vector<SweepRow> rows;
  std::vector<std::vector<std::size_t>> widths;
  for (std::uint64_t seed : base.seeds) {
    const auto data = load_data(base, seed, with_pretrain);
    if (widths.empty())
      for (std::size_t n : expert_counts)
        widths.push_back(widths_for_experts(base, data.split.scenes, data.split.vocab_sizes, n));
    for (std::size_t i = 0; i < expert_counts.size(); ++i) {
      const auto spec = sweep_spec(base, expert_counts[i], widths[i]);
      auto run = run_single(spec, seed, data, progress);
      rows.push_back({expert_counts[i], widths[i], seed, run.record.final_report.gauc,
                      run.record.parameter_count});
    }
  }
  return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream os;
  os << "experts,expert_widths,seed,gauc,parameter_count\n";
  for (const auto& r : rows) {
    os << r.experts << ',';
    for (std::size_t i = 0; i < r.expert_widths.size(); ++i)
      os << (i ? "x" : "") << r.expert_widths[i];
    os << ',' << r.seed << ',' << format_double(r.gauc) << ',' << r.parameter_count << '\n';
  }
  return os.str();
}

// ---------------------------------------------------------------- gate dump

GateTable gate_dump(const ModelConfig& config, const ParameterStore& params,
                    std::span<const Instance> rows) {
  if (config.bottom != BottomKind::kMmoe)
    throw ConfigError("gate dump needs an MMoE model, got bottom = " +
                      std::string(to_string(config.bottom)));
  const std::size_t K = config.scenes;
  const std::size_t n = config.expert_count();
  GateTable table;
  table.means = nd::Matrix(K, n);
  table.counts.assign(K, 0);
  for (std::size_t k = 0; k < K; ++k) table.scene_ids.push_back(static_cast<int>(k + 1));

  for (std::size_t start = 0; start < rows.size(); start += kScoreChunk) {
    const auto chunk = rows.subspan(start, std::min(kScoreChunk, rows.size() - start));
    const ForwardTrace t = forward(config, params, chunk);
    for (std::size_t i = 0; i < chunk.size(); ++i) {
      const std::size_t k = t.scene_index[i];
      ++table.counts[k];
      for (std::size_t e = 0; e < n; ++e) table.means(k, e) += t.gates[k](i, e);
    }
  }
  for (std::size_t k = 0; k < K; ++k)
    if (table.counts[k] > 0)
      for (std::size_t e = 0; e < n; ++e)
        table.means(k, e) /= static_cast<double>(table.counts[k]);
  return table;
}

double GateTable::max_pairwise_l1() const {
  double best = 0.0;
  for (std::size_t a = 0; a < scene_ids.size(); ++a)
    for (std::size_t b = a + 1; b < scene_ids.size(); ++b) {
      if (counts[a] == 0 || counts[b] == 0) continue;
      double d = 0.0;
      for (std::size_t e = 0; e < means.cols(); ++e) d += std::abs(means(a, e) - means(b, e));
      best = std::max(best, d);
    }
  return best;
}

std::string GateTable::to_csv() const {
  std::ostringstream os;
  os << "scene_id,rows";
  for (std::size_t e = 0; e < means.cols(); ++e) os << ",gate_" << e + 1;
  os << '\n';
  for (std::size_t k = 0; k < scene_ids.size(); ++k) {
    os << scene_ids[k] << ',' << counts[k];
    for (std::size_t e = 0; e < means.cols(); ++e) os << ',' << format_fixed(means(k, e), 6);
    os << '\n';
  }
  return os.str();
}

}  // namespace dadnn::harness
