#include <benchmark/benchmark.h>

#include <vector>

#include "dadnn/dadnn_model.hpp"
#include "dadnn/dense.hpp"
#include "dadnn/metrics.hpp"
#include "dadnn/rng.hpp"
#include "dadnn/synthgen.hpp"

using namespace dadnn;

namespace {

nd::Matrix random_matrix(std::size_t r, std::size_t c, nd::Rng& rng) {
  nd::Matrix m(r, c);
  for (double& v : m.values()) v = rng.normal();
  return m;
}

ModelConfig bench_config(BottomKind bottom, std::size_t experts, std::size_t width) {
  ModelConfig c;
  c.scenes = 6;
  c.vocab_sizes.assign(8, 50);
  c.bottom = bottom;
  c.experts = experts;
  c.bottom_widths = {width, width, width};
  return c;
}

std::vector<Instance> bench_batch(std::size_t n) {
  auto gen = synth::default_profile(1.0, 3, 3000, 600);
  auto split = synth::generate(gen);
  split.train.resize(n);
  return split.train;
}

}  // namespace

static void BM_DenseForward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  nd::Rng rng(1);
  nd::DenseLayer layer(64, 64, nd::Activation::kRelu);
  layer.weight = random_matrix(64, 64, rng);
  const auto x = random_matrix(n, 64, rng);
  for (auto _ : state) benchmark::DoNotOptimize(nd::dense_forward(layer, x));
}
BENCHMARK(BM_DenseForward)->Arg(256)->Arg(3000);

static void BM_DenseBackward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  nd::Rng rng(2);
  nd::DenseLayer layer(64, 64, nd::Activation::kRelu);
  layer.weight = random_matrix(64, 64, rng);
  const auto x = random_matrix(n, 64, rng);
  const auto y = nd::dense_forward(layer, x);
  const auto up = random_matrix(n, 64, rng);
  for (auto _ : state) benchmark::DoNotOptimize(nd::dense_backward(layer, x, y, up));
}
BENCHMARK(BM_DenseBackward)->Arg(256)->Arg(3000);

static void BM_TrainStep(benchmark::State& state) {
  const bool mmoe = state.range(0) == 1;
  const auto cfg = mmoe ? bench_config(BottomKind::kMmoe, 2, 32) : bench_config(BottomKind::kMlp, 1, 64);
  auto params = init_params(cfg);
  auto opt = make_optimizer(params, cfg.learning_rate);
  const auto batch = bench_batch(256);
  for (auto _ : state) benchmark::DoNotOptimize(train_step(cfg, params, opt, batch));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(batch.size()));
}
BENCHMARK(BM_TrainStep)->Arg(0)->Arg(1)->ArgNames({"mmoe"});

static void BM_Auc(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  nd::Rng rng(4);
  std::vector<metrics::ScoredSample> s(n);
  for (auto& x : s) {
    x.score = rng.uniform();
    x.label = rng.uniform() < 0.1 ? 1 : 0;
  }
  s[0].label = 1;
  s[1].label = 0;
  for (auto _ : state) benchmark::DoNotOptimize(metrics::auc(s));
}
BENCHMARK(BM_Auc)->Arg(1000)->Arg(100000);

BENCHMARK_MAIN();
