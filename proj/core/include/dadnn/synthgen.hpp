#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "dadnn/instance.hpp"
#include "dadnn/kv.hpp"

namespace dadnn::synth {

/// Multi-scene generator settings. `shift` (delta) scales both the
/// scene-specific part of the click function and the scene-specific part of
/// the feature distributions; at 0 every scene shares both and differs only
/// in the intercept that sets its CTR.
struct GenConfig {
  std::size_t scenes = 6;
  std::vector<std::size_t> vocab_sizes = std::vector<std::size_t>(8, 50);
  std::size_t latent_dim = 4;
  double shift = 1.0;
  std::vector<std::size_t> train_sizes;
  std::vector<std::size_t> test_sizes;
  std::vector<double> target_ctrs;
  std::uint64_t seed = 1;

  std::size_t fields() const noexcept { return vocab_sizes.size(); }
  std::size_t train_total() const;
  std::size_t test_total() const;

  void validate() const;
  KeyValues to_kv() const;
  static GenConfig from_kv(const KeyValues& kv);

  bool operator==(const GenConfig&) const = default;
};

// Six scenes with relative sizes 29.9 : 122.0 : 40.5 : 16.2 : 77.5 : 184.1 and
// relative CTRs 3.63 : 1.53 : 1.93 : 9.66 : 1 : 2.34 on a 0.02 base CTR.
inline constexpr double kProfileSizes[6] = {29.9, 122.0, 40.5, 16.2, 77.5, 184.1};
inline constexpr double kProfileRelativeCtr[6] = {3.63, 1.53, 1.93, 9.66, 1.00, 2.34};
inline constexpr double kProfileBaseCtr = 0.02;

GenConfig default_profile(double shift, std::uint64_t seed, std::size_t train_total = 60000,
                          std::size_t test_total = 6000);

// Largest-remainder apportionment of `total` by `weights`; sums to `total`.
std::vector<std::size_t> proportional_counts(std::span<const double> weights, std::size_t total);

struct DatasetSplit {
  std::vector<Instance> train;
  std::vector<Instance> test;
  std::size_t scenes = 0;
  std::vector<std::size_t> vocab_sizes;
};

/// The latent ground truth behind a GenConfig: per field-value latent vectors
/// z ~ N(0, I), scene click weights w_k = w_shared + shift * w_k_spec and
/// per-scene categorical feature distributions softmax(a_j + shift * c_kj).
class SyntheticWorld {
 public:
  explicit SyntheticWorld(GenConfig config);

  const GenConfig& config() const noexcept { return config_; }

  std::span<const double> latent(std::size_t field, std::size_t value) const;
  const std::vector<double>& shared_weights() const noexcept { return w_shared_; }
  // Scene indices are 0-based here (scene id - 1).
  const std::vector<double>& scene_weights(std::size_t scene) const { return w_scene_.at(scene); }
  double feature_probability(std::size_t scene, std::size_t field, std::size_t value) const;

  // w . sum_j z_{j, x_j}
  double score(std::span<const double> weights, std::span<const std::uint32_t> features) const;

  /// Draws train and test rows; intercepts are bisected on the train rows so
  /// every scene's realized CTR lands within 5% of its target.
  DatasetSplit sample();

  /// One large auxiliary scene (id 0) drawn from the shared component only,
  /// three times the size of the main training set.
  DatasetSplit sample_pretrain();

  // Intercepts found by the last sample()/sample_pretrain(); empty before.
  const std::vector<double>& scene_biases() const noexcept { return biases_; }

 private:
  struct SceneDraw {
    std::vector<std::vector<std::uint32_t>> features;
    std::vector<double> scores;
    std::vector<double> uniforms;
  };
  SceneDraw draw(std::span<const double> weights, const std::vector<std::vector<double>>& cdf,
                 std::size_t rows, std::uint64_t stream) const;
  std::vector<std::vector<double>> cumulative_tables(std::size_t scene, bool shared_only) const;

  GenConfig config_;
  std::vector<std::vector<double>> latents_;  // [field][value * latent_dim + l]
  std::vector<double> w_shared_;
  std::vector<std::vector<double>> w_scene_;
  std::vector<std::vector<double>> pop_shared_;              // [field][value]
  std::vector<std::vector<std::vector<double>>> pop_scene_;  // [scene][field][value]
  std::vector<double> biases_;
};

DatasetSplit generate(const GenConfig& config);
DatasetSplit pretrain_scene(const GenConfig& config);

// Smallest intercept whose realized CTR reaches `target`; throws
// GeneratorError if the target cannot be bracketed or hit within 5%.
double bisect_intercept(std::span<const double> scores, std::span<const double> uniforms,
                        double target);

}  // namespace dadnn::synth
