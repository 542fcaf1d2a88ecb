#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "dadnn/errors.hpp"
#include "dadnn/metrics.hpp"
#include "dadnn/rng.hpp"

using namespace dadnn;
using namespace dadnn::metrics;

namespace {

std::vector<ScoredSample> make(std::initializer_list<double> scores, std::initializer_list<int> labels,
                               int scene = 1) {
  std::vector<ScoredSample> out;
  auto l = labels.begin();
  for (double s : scores) out.push_back({scene, s, *l++});
  return out;
}

std::vector<ScoredSample> random_samples(nd::Rng& rng, std::size_t n, int scenes, int levels) {
  std::vector<ScoredSample> s(n);
  for (auto& x : s) {
    x.scene_id = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(scenes)));
    // Coarse score grid so ties are common.
    x.score = static_cast<double>(rng.below(static_cast<std::uint64_t>(levels))) / levels;
    x.label = rng.uniform() < 0.3 ? 1 : 0;
  }
  return s;
}

}  // namespace

TEST(Auc, Examples) {
  EXPECT_DOUBLE_EQ(auc(make({0.1, 0.4, 0.35, 0.8}, {0, 0, 1, 1})), 0.75);
  EXPECT_DOUBLE_EQ(auc(make({0.1, 0.2, 0.8, 0.9}, {0, 0, 1, 1})), 1.0);
  EXPECT_DOUBLE_EQ(auc(make({0.3, 0.3, 0.3, 0.3}, {0, 1, 0, 1})), 0.5);
  EXPECT_DOUBLE_EQ(auc_oracle(make({0.2, 0.9}, {0, 1})), 1.0);
  EXPECT_DOUBLE_EQ(auc_oracle(make({0.5, 0.5}, {0, 1})), 0.5);
  EXPECT_DOUBLE_EQ(auc(make({0.5, 0.5}, {1, 0})), 0.5);
}

TEST(Auc, SingleClassIsUndefined) {
  EXPECT_THROW(auc(make({0.1, 0.2}, {1, 1})), UndefinedMetricError);
  EXPECT_THROW(auc(make({0.1, 0.2}, {0, 0})), UndefinedMetricError);
  EXPECT_THROW(auc_oracle(make({0.1}, {0})), UndefinedMetricError);
  EXPECT_THROW(auc({}), UndefinedMetricError);
}

TEST(Auc, EqualsOracleExactlyOnRandomData) {
  nd::Rng rng(1);
  int checked = 0;
  while (checked < 100) {
    auto s = random_samples(rng, 2 + rng.below(199), 1, 2 + static_cast<int>(rng.below(30)));
    if (std::none_of(s.begin(), s.end(), [](auto& x) { return x.label == 1; }) ||
        std::all_of(s.begin(), s.end(), [](auto& x) { return x.label == 1; }))
      continue;
    EXPECT_EQ(auc(s), auc_oracle(s));
    ++checked;
  }
}

TEST(Auc, InvariantUnderIncreasingTransform) {
  nd::Rng rng(2);
  auto s = random_samples(rng, 150, 1, 20);
  s[0].label = 0;
  s[1].label = 1;
  const double a = auc(s);
  for (auto& x : s) x.score = std::exp(3.0 * x.score) - 7.0;
  EXPECT_EQ(auc(s), a);
}

TEST(Gauc, SingleSceneEqualsAuc) {
  nd::Rng rng(3);
  auto s = random_samples(rng, 120, 1, 50);
  s[0].label = 0;
  s[1].label = 1;
  EXPECT_EQ(gauc(s), auc(s));
}

TEST(Gauc, ImpressionWeightedMean) {
  std::vector<ScoredSample> s;
  for (int i = 0; i < 20; ++i) s.push_back({1, 0.1 * (i % 10), 0});
  for (int i = 0; i < 75; ++i) s.push_back({1, 0.0, 0});
  for (int i = 0; i < 5; ++i) s.push_back({1, 0.0, 1});
  const double a1 = auc(std::vector<ScoredSample>(s.begin(), s.end()));
  std::vector<ScoredSample> two;
  for (int i = 0; i < 240; ++i) two.push_back({2, static_cast<double>(i % 5), 0});
  for (int i = 0; i < 60; ++i) two.push_back({2, static_cast<double>(i % 5) + 0.5, 1});
  const double a2 = auc(two);
  s.insert(s.end(), two.begin(), two.end());
  const auto r = evaluate(s);
  EXPECT_NEAR(r.gauc, (100 * a1 + 300 * a2) / 400, 1e-15);
  ASSERT_EQ(r.scenes.size(), 2u);
  EXPECT_EQ(r.scenes[0].impressions, 100u);
  EXPECT_EQ(r.scenes[1].impressions, 300u);
}

TEST(Gauc, WeightedArithmetic) {
  // Scene 1: 100 impressions with AUC 0.6; scene 2: 300 impressions with AUC 0.8.
  std::vector<ScoredSample> s;
  for (int i = 0; i < 90; ++i) s.push_back({1, static_cast<double>(i), 0});
  for (int i = 0; i < 10; ++i) s.push_back({1, 53.5, 1});  // beats 54 of 90 -> 0.6
  for (int i = 0; i < 250; ++i) s.push_back({2, static_cast<double>(i), 0});
  for (int i = 0; i < 50; ++i) s.push_back({2, 199.5, 1});  // beats 200 of 250 -> 0.8
  const auto r = evaluate(s);
  EXPECT_NEAR(*r.scene(1)->auc, 0.6, 1e-15);
  EXPECT_NEAR(*r.scene(2)->auc, 0.8, 1e-15);
  EXPECT_NEAR(r.gauc, 0.75, 1e-15);
}

TEST(Gauc, SceneOrderDoesNotMatter) {
  nd::Rng rng(4);
  auto s = random_samples(rng, 400, 4, 40);
  const double g = gauc(s);
  std::reverse(s.begin(), s.end());
  EXPECT_EQ(gauc(s), g);
  for (auto& x : s) x.scene_id = 5 - x.scene_id;
  EXPECT_NEAR(gauc(s), g, 1e-15);
}

TEST(Gauc, SingleClassScenesAreExcludedAndReported) {
  auto s = make({0.1, 0.9, 0.4}, {0, 1, 0}, 1);
  auto only_neg = make({0.2, 0.3}, {0, 0}, 2);
  s.insert(s.end(), only_neg.begin(), only_neg.end());
  const auto r = evaluate(s);
  EXPECT_EQ(r.excluded_scenes, (std::vector<int>{2}));
  EXPECT_DOUBLE_EQ(r.gauc, 1.0);
  EXPECT_FALSE(r.scene(2)->auc.has_value());
  EXPECT_FALSE(r.scene(2)->calibration.has_value());
  EXPECT_THROW(evaluate(only_neg), UndefinedMetricError);
}

TEST(Calibration, Properties) {
  std::vector<ScoredSample> s;
  for (int i = 0; i < 50; ++i) s.push_back({1, 0.022, i == 0 ? 1 : 0});
  EXPECT_NEAR(calibration(s), 1.1, 1e-12);

  const auto exact = make({1, 0, 0, 1}, {1, 0, 0, 1});
  EXPECT_DOUBLE_EQ(calibration(exact), 1.0);

  nd::Rng rng(5);
  auto r = random_samples(rng, 200, 1, 100);
  r[0].label = 1;
  const double c = calibration(r);
  for (double k : {1.0, 0.5, 0.25, 0.1}) {
    auto scaled = r;
    for (auto& x : scaled) x.score *= k;
    EXPECT_NEAR(calibration(scaled), k * c, 1e-12);
  }
  EXPECT_THROW(calibration(make({0.3, 0.4}, {0, 0})), UndefinedMetricError);
}

TEST(MetricsReport, JsonLineRoundTrip) {
  nd::Rng rng(6);
  const auto r = evaluate(random_samples(rng, 300, 3, 1000));
  const std::string line = r.to_json_line();
  EXPECT_EQ(line.find('\n'), std::string::npos);
  for (const char* key : {"scenes", "gauc", "log_loss", "excluded_scenes", "scene_id", "impressions",
                          "auc", "calibration", "empirical_ctr", "mean_pctr"})
    EXPECT_NE(line.find(std::string("\"") + key + "\""), std::string::npos) << key;
  EXPECT_EQ(MetricsReport::from_json_line(line), r);
  EXPECT_THROW(MetricsReport::from_json_line("{not json"), DataError);
}
