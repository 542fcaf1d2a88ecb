#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dadnn/dataset_io.hpp"
#include "dadnn/errors.hpp"
#include "dadnn/experiment.hpp"
#include "dadnn/param_io.hpp"
#include "dadnn/report.hpp"
#include "dadnn/synthgen.hpp"

namespace fs = std::filesystem;
using namespace dadnn;
using namespace dadnn::harness;

namespace {

struct Common {
  std::string spec;
  std::string data;
  std::string out;
  bool paper_scale = false;
  std::size_t epochs = 0;
  std::vector<std::uint64_t> seeds;
  bool quiet = false;
};

void add_common(CLI::App* cmd, Common& c, bool need_out) {
  cmd->add_option("--spec", c.spec, "experiment spec (key = value)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--data", c.data, "dataset directory (default: generate from the spec)")
      ->check(CLI::ExistingDirectory);
  auto* out = cmd->add_option("--out", c.out, "output directory");
  if (need_out) out->required();
  cmd->add_flag("--paper-scale", c.paper_scale, "original widths and batch size");
  cmd->add_option("--epochs", c.epochs, "override the spec's epoch count");
  cmd->add_option("--seeds", c.seeds, "override the spec's seed list")->delimiter(',');
  cmd->add_flag("-q,--quiet", c.quiet, "no progress output");
}

ExperimentSpec load_spec(const Common& c) {
  ExperimentSpec s = ExperimentSpec::load(c.spec);
  if (!c.data.empty()) s.data_dir = c.data;
  if (c.paper_scale) s.paper_scale = true;
  if (c.epochs) s.epochs = c.epochs;
  if (!c.seeds.empty()) s.seeds = c.seeds;
  s.validate();
  return s;
}

ProgressFn progress_for(const Common& c) {
  if (c.quiet) return {};
  return [](const std::string& msg) { std::cerr << msg << '\n'; };
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
}

int cmd_generate(const std::string& config, const std::string& out_dir, bool pretrain,
                 std::optional<std::uint64_t> seed) {
  auto gen = synth::GenConfig::from_kv(KeyValues::load(config));
  if (seed) gen.seed = *seed;
  synth::SyntheticWorld world(gen);
  const auto split = world.sample();
  fs::create_directories(out_dir);
  synth::write_dataset(split, out_dir);
  if (pretrain) {
    const auto aux = world.sample_pretrain();
    synth::write_instances(fs::path(out_dir) / "pretrain.csv",
                           {aux.train, split.scenes, split.vocab_sizes});
  }
  gen.to_kv().save(fs::path(out_dir) / "generator.kv");
  std::cerr << "wrote " << split.train.size() << " train / " << split.test.size()
            << " test rows to " << out_dir << '\n';
  return 0;
}

int cmd_train(const Common& c) {
  const ExperimentSpec spec = load_spec(c);
  for (const auto& w : spec.warnings()) std::cerr << "warning: " << w << '\n';
  fs::create_directories(c.out);
  const fs::path records = fs::path(c.out) / (spec.name + ".jsonl");
  fs::remove(records);
  const bool with_pretrain = spec.finetune_embeddings && spec.variant != Variant::kPerSceneDnn;

  std::vector<RunRecord> all;
  for (std::uint64_t seed : spec.seeds) {
    const auto data = load_data(spec, seed, with_pretrain);
    auto run = run_single(spec, seed, data, progress_for(c));
    save_record(run.record, records);
    const auto& nets = run.trained.networks;
    for (std::size_t k = 0; k < nets.size(); ++k) {
      std::string file = spec.name + ".seed" + std::to_string(seed);
      if (nets.size() > 1) file += ".scene" + std::to_string(k + 1);
      export_params(nets[k].params, fs::path(c.out) / (file + ".params"), nets[k].config.to_kv());
    }
    all.push_back(std::move(run.record));
  }
  write_report(all, c.out);
  std::cout << build_comparison(all).summary;
  return 0;
}

int cmd_ablate(const Common& c) {
  const ExperimentSpec spec = load_spec(c);
  const auto result = ablation_suite(spec, progress_for(c));
  const std::string table = result.table_csv();
  if (!c.out.empty()) {
    fs::create_directories(c.out);
    write_file(fs::path(c.out) / "ablation.csv", table);
    std::string seeds = "method,seed,gauc\n";
    for (const auto& r : result.rows)
      seeds += r.method + "," + std::to_string(r.seed) + "," + format_double(r.report.gauc) + "\n";
    write_file(fs::path(c.out) / "ablation_seeds.csv", seeds);
  }
  std::cout << table;
  return 0;
}

int cmd_sweep(const Common& c, const std::vector<std::size_t>& experts) {
  const ExperimentSpec spec = load_spec(c);
  const auto rows = expert_sweep(spec, experts, progress_for(c));
  const std::string csv = sweep_csv(rows);
  if (!c.out.empty()) {
    fs::create_directories(c.out);
    write_file(fs::path(c.out) / "sweep.csv", csv);
  }
  std::cout << csv;
  return 0;
}

int cmd_gates(const std::string& model, const std::string& data, const std::string& out) {
  const ParamFile file = read_param_file(model);
  const ModelConfig config = ModelConfig::from_kv(file.meta);
  ModelConfig plain = config;
  plain.pretrained_embedding_path.reset();
  ParameterStore params = init_params(plain);
  load_params(file, params);
  const auto split = synth::read_dataset(data);
  const auto table = gate_dump(config, params, split.test);
  if (!out.empty()) write_file(out, table.to_csv());
  std::cout << table.to_csv();
  std::cerr << "max pairwise L1 distance: " << format_double(table.max_pairwise_l1()) << '\n';
  return 0;
}

int cmd_report(const std::string& runs, const std::string& out) {
  const auto records = load_records(runs);
  write_report(records, out.empty() ? runs : out);
  std::cout << build_comparison(records).summary;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-scene CTR models: data generation, training and analysis"};
  app.require_subcommand(1);

  std::string gen_config, gen_out;
  bool no_pretrain = false;
  std::optional<std::uint64_t> gen_seed;
  auto* gen = app.add_subcommand("generate", "write a synthetic multi-scene dataset");
  gen->add_option("--config", gen_config, "generator config (key = value)")->required()->check(CLI::ExistingFile);
  gen->add_option("--out", gen_out, "output directory")->required();
  gen->add_option("--seed", gen_seed, "override the config seed");
  gen->add_flag("--no-pretrain", no_pretrain, "skip the auxiliary pretraining scene");

  Common train_opts, ablate_opts, sweep_opts;
  auto* train = app.add_subcommand("train", "train one experiment spec over its seeds");
  add_common(train, train_opts, true);
  auto* ablate = app.add_subcommand("ablate", "five-row FT / KT / MMoE ablation grid");
  add_common(ablate, ablate_opts, false);
  std::vector<std::size_t> experts{1, 2, 4, 8};
  auto* sweep = app.add_subcommand("sweep", "expert-count sweep at a fixed parameter budget");
  add_common(sweep, sweep_opts, false);
  sweep->add_option("--experts", experts, "expert counts")->delimiter(',');

  std::string model, gate_data, gate_out;
  auto* gates = app.add_subcommand("gates", "mean gate distribution per scene");
  gates->add_option("--model", model, "MMoE parameter file")->required()->check(CLI::ExistingFile);
  gates->add_option("--data", gate_data, "dataset directory")->required()->check(CLI::ExistingDirectory);
  gates->add_option("--out", gate_out, "CSV output file");

  std::string runs, report_out;
  auto* report = app.add_subcommand("report", "comparison tables from run records");
  report->add_option("--runs", runs, "directory of *.jsonl run records")->required();
  report->add_option("--out", report_out, "output directory (default: --runs)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) return cmd_generate(gen_config, gen_out, !no_pretrain, gen_seed);
    if (*train) return cmd_train(train_opts);
    if (*ablate) return cmd_ablate(ablate_opts);
    if (*sweep) return cmd_sweep(sweep_opts, experts);
    if (*gates) return cmd_gates(model, gate_data, gate_out);
    if (*report) return cmd_report(runs, report_out);
  } catch (const std::exception& e) {
    std::cerr << "dadnn: error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
