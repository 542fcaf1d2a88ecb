#include "dadnn/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "dadnn/dense.hpp"
#include "dadnn/errors.hpp"
#include "dadnn/numeric.hpp"
#include "dadnn/rng.hpp"

namespace dadnn::synth {

std::size_t GenConfig::train_total() const {
  return std::accumulate(train_sizes.begin(), train_sizes.end(), std::size_t{0});
}

std::size_t GenConfig::test_total() const {
  return std::accumulate(test_sizes.begin(), test_sizes.end(), std::size_t{0});
}

void GenConfig::validate() const {
  if (scenes < 1) throw ConfigError("generator: scenes must be >= 1");
  if (vocab_sizes.empty()) throw ConfigError("generator: at least one field is required");
  for (auto v : vocab_sizes)
    if (v < 1) throw ConfigError("generator: vocabulary sizes must be >= 1");
  if (latent_dim < 1) throw ConfigError("generator: latent_dim must be >= 1");
  if (!(shift >= 0.0)) throw ConfigError("generator: shift must be >= 0");
  if (train_sizes.size() != scenes || test_sizes.size() != scenes || target_ctrs.size() != scenes)
    throw ConfigError("generator: train_sizes, test_sizes and target_ctrs need one entry per scene");
  for (std::size_t k = 0; k < scenes; ++k) {
    if (train_sizes[k] < 1)
      throw ConfigError("generator: scene " + std::to_string(k + 1) + " has no training rows");
    if (!(target_ctrs[k] > 0.0 && target_ctrs[k] < 1.0))
      throw ConfigError("generator: target CTR of scene " + std::to_string(k + 1) +
                        " must lie in (0, 1)");
  }
}

KeyValues GenConfig::to_kv() const {
  KeyValues kv;
  kv.set("scenes", static_cast<std::int64_t>(scenes));
  kv.set_list("vocab_sizes", vocab_sizes);
  kv.set("latent_dim", static_cast<std::int64_t>(latent_dim));
  kv.set("shift", shift);
  kv.set_list("train_sizes", train_sizes);
  kv.set_list("test_sizes", test_sizes);
  kv.set_list("target_ctrs", target_ctrs);
  kv.set("seed", std::to_string(seed));
  return kv;
}

GenConfig GenConfig::from_kv(const KeyValues& kv) {
  const double shift = kv.get_double("shift", 1.0);
  const std::uint64_t seed = kv.contains("seed") ? std::stoull(kv.require("seed")) : 1;
  GenConfig c = default_profile(shift, seed, kv.get_size("train_total", 60000),
                                kv.get_size("test_total", 6000));
  c.scenes = kv.get_size("scenes", c.scenes);
  if (kv.contains("fields") && !kv.contains("vocab_sizes"))
    c.vocab_sizes.assign(kv.get_size("fields", 8), kv.get_size("vocab", 50));
  else if (kv.contains("vocab") && !kv.contains("vocab_sizes"))
    c.vocab_sizes.assign(c.vocab_sizes.size(), kv.get_size("vocab", 50));
  c.vocab_sizes = kv.get_size_list("vocab_sizes", c.vocab_sizes);
  c.latent_dim = kv.get_size("latent_dim", c.latent_dim);
  c.train_sizes = kv.get_size_list("train_sizes", c.train_sizes);
  c.test_sizes = kv.get_size_list("test_sizes", c.test_sizes);
  c.target_ctrs = kv.get_double_list("target_ctrs", c.target_ctrs);
  c.validate();
  return c;
}

std::vector<std::size_t> proportional_counts(std::span<const double> weights, std::size_t total) {
  const double sum = std::accumulate(weights.begin(), weights.end(), 0.0);
  std::vector<std::size_t> counts(weights.size(), 0);
  if (weights.empty() || !(sum > 0.0)) return counts;
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    const double exact = static_cast<double>(total) * weights[k] / sum;
    counts[k] = static_cast<std::size_t>(std::floor(exact));
    assigned += counts[k];
    remainders.emplace_back(exact - std::floor(exact), k);
  }
  // Ties go to the lower index.
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t r = 0; assigned < total; ++r, ++assigned) ++counts[remainders[r].second];
  return counts;
}

GenConfig default_profile(double shift, std::uint64_t seed, std::size_t train_total,
                          std::size_t test_total) {
  GenConfig c;
  c.scenes = 6;
  c.shift = shift;
  c.seed = seed;
  c.train_sizes = proportional_counts(kProfileSizes, train_total);
  c.test_sizes = proportional_counts(kProfileSizes, test_total);
  c.target_ctrs.clear();
  for (double r : kProfileRelativeCtr) c.target_ctrs.push_back(r * kProfileBaseCtr);
  return c;
}

SyntheticWorld::SyntheticWorld(GenConfig config) : config_(std::move(config)) {
  config_.validate();
  const nd::Rng root(config_.seed);
  const std::size_t L = config_.latent_dim;
  const double scale = 1.0 / std::sqrt(static_cast<double>(L));

  nd::Rng latent_rng = root.fork("latent");
  for (auto vocab : config_.vocab_sizes) {
    std::vector<double> z(vocab * L);
    for (double& v : z) v = latent_rng.normal();
    latents_.push_back(std::move(z));
  }

  nd::Rng shared_rng = root.fork("w_shared");
  w_shared_.resize(L);
  for (double& v : w_shared_) v = shared_rng.normal() * scale;

  const nd::Rng spec_root = root.fork("w_scene");
  for (std::size_t k = 0; k < config_.scenes; ++k) {
    nd::Rng r = spec_root.fork(k);
    std::vector<double> w(L);
    for (std::size_t l = 0; l < L; ++l) w[l] = w_shared_[l] + config_.shift * (r.normal() * scale);
    w_scene_.push_back(std::move(w));
  }

  nd::Rng pop_rng = root.fork("popularity");
  std::vector<std::vector<double>> pop_logits;
  for (auto vocab : config_.vocab_sizes) {
    std::vector<double> a(vocab);
    for (double& v : a) v = pop_rng.normal();
    pop_shared_.push_back(nd::softmax(a));
    pop_logits.push_back(std::move(a));
  }
  const nd::Rng pop_scene_root = root.fork("popularity_scene");
  for (std::size_t k = 0; k < config_.scenes; ++k) {
    nd::Rng r = pop_scene_root.fork(k);
    std::vector<std::vector<double>> per_field;
    for (std::size_t j = 0; j < config_.fields(); ++j) {
      std::vector<double> a = pop_logits[j];
      for (double& v : a) v += config_.shift * r.normal();
      per_field.push_back(nd::softmax(a));
    }
    pop_scene_.push_back(std::move(per_field));
  }
}

std::span<const double> SyntheticWorld::latent(std::size_t field, std::size_t value) const {
  const std::size_t L = config_.latent_dim;
  return std::span<const double>(latents_.at(field)).subspan(value * L, L);
}

double SyntheticWorld::feature_probability(std::size_t scene, std::size_t field,
                                           std::size_t value) const {
  return pop_scene_.at(scene).at(field).at(value);
}

double SyntheticWorld::score(std::span<const double> weights,
                             std::span<const std::uint32_t> features) const {
  double s = 0.0;
  for (std::size_t j = 0; j < features.size(); ++j) {
    const auto z = latent(j, features[j]);
    for (std::size_t l = 0; l < z.size(); ++l) s += z[l] * weights[l];
  }
  return s;
}

std::vector<std::vector<double>> SyntheticWorld::cumulative_tables(std::size_t scene,
                                                                   bool shared_only) const {
  std::vector<std::vector<double>> cdf;
  for (std::size_t j = 0; j < config_.fields(); ++j) {
    const auto& p = shared_only ? pop_shared_[j] : pop_scene_[scene][j];
    std::vector<double> c(p.size());
    std::partial_sum(p.begin(), p.end(), c.begin());
    cdf.push_back(std::move(c));
  }
  return cdf;
}

SyntheticWorld::SceneDraw SyntheticWorld::draw(std::span<const double> weights,
                                               const std::vector<std::vector<double>>& cdf,
                                               std::size_t rows, std::uint64_t stream) const {
  nd::Rng rng = nd::Rng(config_.seed).fork("rows").fork(stream);
  SceneDraw d;
  d.features.reserve(rows);
  d.scores.reserve(rows);
  d.uniforms.reserve(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    std::vector<std::uint32_t> x(config_.fields());
    for (std::size_t j = 0; j < x.size(); ++j)
      x[j] = static_cast<std::uint32_t>(rng.categorical(cdf[j]));
    d.scores.push_back(score(weights, x));
    d.uniforms.push_back(rng.uniform());
    d.features.push_back(std::move(x));
  }
  return d;
}

double bisect_intercept(std::span<const double> scores, std::span<const double> uniforms,
                        double target) {
  if (scores.empty()) throw GeneratorError("bisect_intercept: no rows");
  auto ctr = [&](double b) {
    std::size_t clicks = 0;
    for (std::size_t i = 0; i < scores.size(); ++i)
      if (uniforms[i] < nd::sigmoid(b + scores[i])) ++clicks;
    return static_cast<double>(clicks) / static_cast<double>(scores.size());
  };
  double lo = -60.0, hi = 60.0;
  if (ctr(lo) > target * 1.05 || ctr(hi) < target * 0.95)
    throw GeneratorError("cannot bracket an intercept for target CTR " + format_double(target));
  for (int it = 0; it < 200 && hi - lo > 1e-12; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (ctr(mid) >= target) hi = mid;
    else lo = mid;
  }
  const double achieved = ctr(hi);
  const double below = ctr(lo);
  // The realized CTR is a step function; take whichever side is closer.
  const double b = std::abs(below - target) < std::abs(achieved - target) ? lo : hi;
  const double got = ctr(b);
  if (std::abs(got - target) > 0.05 * target)
    throw GeneratorError("target CTR " + format_double(target) + " not reachable within 5% (got " +
                         format_double(got) + " over " + std::to_string(scores.size()) + " rows)");
  return b;
}

DatasetSplit SyntheticWorld::sample() {
  DatasetSplit split;
  split.scenes = config_.scenes;
  split.vocab_sizes = config_.vocab_sizes;
  biases_.assign(config_.scenes, 0.0);
  for (std::size_t k = 0; k < config_.scenes; ++k) {
    const auto cdf = cumulative_tables(k, false);
    SceneDraw train = draw(w_scene_[k], cdf, config_.train_sizes[k], 2 * (k + 1));
    SceneDraw test = draw(w_scene_[k], cdf, config_.test_sizes[k], 2 * (k + 1) + 1);
    const double b = bisect_intercept(train.scores, train.uniforms, config_.target_ctrs[k]);
    biases_[k] = b;
    const int id = static_cast<int>(k + 1);
    for (std::size_t i = 0; i < train.scores.size(); ++i)
      split.train.push_back({id, std::move(train.features[i]),
                             train.uniforms[i] < nd::sigmoid(b + train.scores[i]) ? 1 : 0});
    for (std::size_t i = 0; i < test.scores.size(); ++i)
      split.test.push_back({id, std::move(test.features[i]),
                            test.uniforms[i] < nd::sigmoid(b + test.scores[i]) ? 1 : 0});
  }
  return split;
}

DatasetSplit SyntheticWorld::sample_pretrain() {
  DatasetSplit split;
  split.scenes = config_.scenes;
  split.vocab_sizes = config_.vocab_sizes;

  double weighted = 0.0;
  for (std::size_t k = 0; k < config_.scenes; ++k)
    weighted += config_.target_ctrs[k] * static_cast<double>(config_.train_sizes[k]);
  const double target = weighted / static_cast<double>(config_.train_total());

  const auto cdf = cumulative_tables(0, true);
  SceneDraw train = draw(w_shared_, cdf, 3 * config_.train_total(), 0);
  SceneDraw test = draw(w_shared_, cdf, std::max<std::size_t>(config_.test_total(), 1), 1);
  const double b = bisect_intercept(train.scores, train.uniforms, target);
  biases_ = {b};
  for (std::size_t i = 0; i < train.scores.size(); ++i)
    split.train.push_back({0, std::move(train.features[i]),
                           train.uniforms[i] < nd::sigmoid(b + train.scores[i]) ? 1 : 0});
  for (std::size_t i = 0; i < test.scores.size(); ++i)
    split.test.push_back({0, std::move(test.features[i]),
                          test.uniforms[i] < nd::sigmoid(b + test.scores[i]) ? 1 : 0});
  return split;
}

DatasetSplit generate(const GenConfig& config) { return SyntheticWorld(config).sample(); }

DatasetSplit pretrain_scene(const GenConfig& config) {
  return SyntheticWorld(config).sample_pretrain();
}

}  // namespace dadnn::synth
