#include <gtest/gtest.h>

#include <cmath>

#include "dadnn/dadnn_model.hpp"
#include "dadnn/errors.hpp"
#include "dadnn/numeric.hpp"
#include "model_fixtures.hpp"

using namespace dadnn;
using dadnn::fixtures::check_model_gradients;
using dadnn::fixtures::perturb;
using dadnn::fixtures::random_batch;
using dadnn::fixtures::tiny_config;

namespace {

bool all_zero_bits(const Tower& t) {
  for (const auto& l : t.layers) {
    for (double v : l.weight.values())
      if (std::signbit(v) || v != 0.0) return false;
    for (double v : l.bias)
      if (std::signbit(v) || v != 0.0) return false;
  }
  return true;
}

nd::Matrix single_pair(std::size_t K, std::size_t p, std::size_t q, double u) {
  nd::Matrix w(K, K);
  w(p, q) = u;
  return w;
}

}  // namespace

TEST(Forward, ShapesAndEveryHeadOnEveryRow) {
  nd::Rng rng(1);
  const auto c = tiny_config(BottomKind::kMmoe, 3, 2);
  const auto params = init_params(c);
  const auto batch = random_batch(c, 9, rng);
  const auto t = forward(c, params, batch);
  EXPECT_EQ(t.embedded.rows(), 9u);
  EXPECT_EQ(t.embedded.cols(), 12u);
  ASSERT_EQ(t.probs.size(), 3u);
  for (const auto& p : t.probs) {
    ASSERT_EQ(p.size(), 9u);
    for (double v : p) EXPECT_TRUE(v > 0.0 && v < 1.0);
  }
  for (const auto& g : t.gates)
    for (std::size_t i = 0; i < g.rows(); ++i) EXPECT_NEAR(g(i, 0) + g(i, 1), 1.0, 1e-12);
}

TEST(Forward, EmbeddingIsFieldConcatenation) {
  nd::Rng rng(2);
  const auto c = tiny_config(BottomKind::kMlp);
  const auto params = init_params(c);
  const auto batch = random_batch(c, 4, rng);
  const auto t = forward(c, params, batch);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      for (std::size_t d = 0; d < 4; ++d)
        EXPECT_EQ(t.embedded(i, j * 4 + d), params.embeddings[j](batch[i].features[j], d));
}

TEST(Forward, OutOfVocabularyNamesRowAndField) {
  const auto c = tiny_config(BottomKind::kMlp);
  const auto params = init_params(c);
  std::vector<Instance> batch{{1, {0, 1, 2}, 0}, {2, {0, 5, 1}, 1}};
  try {
    forward(c, params, batch);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("row 1"), std::string::npos) << msg;
    EXPECT_NE(msg.find("field 1"), std::string::npos) << msg;
  }
  batch[1] = {3, {0, 0, 0}, 0};
  EXPECT_THROW(forward(c, params, batch), DataError);
}

TEST(Forward, MmoeWithOneExpertEqualsMlpExactly) {
  nd::Rng rng(3);
  const auto mlp = tiny_config(BottomKind::kMlp, 3);
  auto mmoe = mlp;
  mmoe.bottom = BottomKind::kMmoe;
  mmoe.experts = 1;
  auto pm = init_params(mlp);
  perturb(pm, rng);
  auto pe = init_params(mmoe);
  pe.embeddings = pm.embeddings;
  pe.experts = pm.experts;
  pe.heads = pm.heads;
  const auto batch = random_batch(mlp, 16, rng);
  const auto tm = forward(mlp, pm, batch);
  const auto te = forward(mmoe, pe, batch);
  EXPECT_EQ(tm.probs, te.probs);

  const auto gm = backward(mlp, pm, tm);
  const auto ge = backward(mmoe, pe, te);
  EXPECT_EQ(gm.embeddings, ge.embeddings);
  EXPECT_EQ(gm.experts, ge.experts);
  EXPECT_EQ(gm.heads, ge.heads);
  for (const auto& g : ge.gates)
    for (double v : g.values()) EXPECT_EQ(v, 0.0);
}

TEST(Forward, SameBlockNamesGetSameInitialWeights) {
  const auto mlp = tiny_config(BottomKind::kMlp, 3);
  auto mmoe = mlp;
  mmoe.bottom = BottomKind::kMmoe;
  mmoe.experts = 1;
  const auto a = init_params(mlp);
  const auto b = init_params(mmoe);
  EXPECT_EQ(a.embeddings, b.embeddings);
  EXPECT_EQ(a.experts, b.experts);
  EXPECT_EQ(a.heads, b.heads);
}

TEST(Forward, ZeroGatesAverageExperts) {
  nd::Rng rng(4);
  const auto c = tiny_config(BottomKind::kMmoe, 2, 3);
  auto params = init_params(c);
  for (auto& g : params.gates) g.fill(0.0);
  const auto batch = random_batch(c, 5, rng);
  const auto t = forward(c, params, batch);
  const std::size_t last = c.bottom_widths.size() - 1;
  for (std::size_t k = 0; k < 2; ++k)
    for (std::size_t i = 0; i < 5; ++i)
      for (std::size_t u = 0; u < c.bottom_widths.back(); ++u) {
        double avg = 0.0;
        for (std::size_t e = 0; e < 3; ++e) avg += t.expert_out[e][last](i, u);
        EXPECT_NEAR(t.mixtures[k](i, u), avg / 3.0, 1e-15);
      }
}

TEST(Forward, SingleSceneModelIsAPlainDnn) {
  nd::Rng rng(5);
  auto c = tiny_config(BottomKind::kMlp, 1);
  c.kt_enabled = false;
  auto params = init_params(c);
  perturb(params, rng);
  auto batch = random_batch(c, 6, rng);
  const auto t = forward(c, params, batch);
  // Manual MLP: embed -> dense stack -> head.
  for (std::size_t i = 0; i < batch.size(); ++i) {
    nd::Matrix x(1, c.input_dim());
    for (std::size_t j = 0; j < 3; ++j)
      for (std::size_t d = 0; d < 4; ++d) x(0, j * 4 + d) = params.embeddings[j](batch[i].features[j], d);
    for (const auto& l : params.experts[0].layers) x = nd::dense_forward(l, x);
    for (const auto& l : params.heads[0].layers) x = nd::dense_forward(l, x);
    EXPECT_NEAR(t.probs[0][i], x(0, 0), 1e-15);
  }
}

TEST(MainLoss, EqualsPooledOwnHeadBce) {
  nd::Rng rng(6);
  for (auto bottom : {BottomKind::kMlp, BottomKind::kMmoe}) {
    const auto c = tiny_config(bottom, 4);
    auto params = init_params(c);
    perturb(params, rng);
    const auto batch = random_batch(c, 37, rng);
    const auto t = forward(c, params, batch);
    const auto l = main_loss(t);
    std::vector<double> p, y;
    for (std::size_t i = 0; i < batch.size(); ++i) {
      p.push_back(t.own_probability(i));
      y.push_back(batch[i].label);
    }
    EXPECT_NEAR(l.main, nd::bce_loss(p, y), 1e-12);
    double asum = 0.0;
    for (double a : l.alpha) asum += a;
    EXPECT_NEAR(asum, 1.0, 1e-15);
  }
}

TEST(MainLoss, AlphaFollowsBatchComposition) {
  const auto c = tiny_config(BottomKind::kMlp, 3);
  const auto params = init_params(c);
  std::vector<Instance> only3(4, Instance{3, {1, 2, 3}, 1});
  const auto l = main_loss(forward(c, params, only3));
  EXPECT_EQ(l.alpha, (std::vector<double>{0.0, 0.0, 1.0}));
  EXPECT_EQ(l.scene_loss[0], 0.0);

  std::vector<Instance> mixed;
  for (int i = 0; i < 2; ++i) mixed.push_back({1, {0, 0, 0}, 0});
  for (int i = 0; i < 6; ++i) mixed.push_back({2, {1, 1, 1}, 1});
  const auto m = main_loss(forward(c, params, mixed));
  EXPECT_EQ(m.alpha, (std::vector<double>{0.25, 0.75, 0.0}));
}

TEST(KtLoss, PairCountAndZeroWeights) {
  nd::Rng rng(7);
  auto c = tiny_config(BottomKind::kMlp, 6);
  auto params = init_params(c);
  perturb(params, rng);
  const auto batch = random_batch(c, 30, rng);
  const auto t = forward(c, params, batch);
  const auto u = kt_pair_weights(c);
  std::size_t pairs = 0;
  for (std::size_t p = 0; p < 6; ++p)
    for (std::size_t q = 0; q < 6; ++q)
      if (u(p, q) != 0.0) {
        ++pairs;
        EXPECT_EQ(u(p, q), 0.03);
        EXPECT_NE(p, q);
      }
  EXPECT_EQ(pairs, 30u);
  const auto kt = kt_loss(t, u);
  double sum = 0.0;
  for (std::size_t p = 0; p < 6; ++p)
    for (std::size_t q = 0; q < 6; ++q) sum += u(p, q) * kt.pair_loss(p, q);
  EXPECT_NEAR(kt.total, sum, 1e-15);

  LossOptions zero;
  zero.pair_weights = nd::Matrix(6, 6);
  const auto l = compute_loss(c, t, zero);
  EXPECT_EQ(l.total, l.main);
  EXPECT_EQ(l.kt, 0.0);

  c.kt_enabled = false;
  const auto off = compute_loss(c, t);
  EXPECT_EQ(off.total, off.main);
}

TEST(KtLoss, StudentEqualToTeacherGivesEntropyAndZeroStudentGradient) {
  nd::Rng rng(8);
  auto c = tiny_config(BottomKind::kMlp, 2);
  auto params = init_params(c);
  perturb(params, rng);
  params.heads[1] = params.heads[0];  // identical heads: q(x) = p(x) on every row
  const auto batch = random_batch(c, 10, rng);
  const auto t = forward(c, params, batch);
  const auto kt = kt_loss(t, kt_pair_weights(c));
  double entropy = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < batch.size(); ++i)
    if (batch[i].scene_id == 1) {
      const double p = t.probs[0][i];
      entropy += -(p * std::log(p) + (1 - p) * std::log(1 - p));
      ++n;
    }
  EXPECT_NEAR(kt.pair_loss(0, 1), entropy / static_cast<double>(n), 1e-12);

  LossOptions only;
  only.main_weight = 0.0;
  only.pair_weights = single_pair(2, 0, 1, 0.03);
  const auto g = backward(c, params, t, only);
  for (const auto& l : g.heads[1].layers) {
    for (double v : l.weight.values()) EXPECT_NEAR(v, 0.0, 1e-17);
    for (double v : l.bias) EXPECT_NEAR(v, 0.0, 1e-17);
  }
}

TEST(KtLoss, SingleSceneWithKtIsConfigError) {
  auto c = tiny_config(BottomKind::kMlp, 1);
  c.kt_enabled = true;
  EXPECT_THROW(kt_pair_weights(c), ConfigError);
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Backward, TeacherHeadIsGradientBlocked) {
  nd::Rng rng(9);
  for (auto bottom : {BottomKind::kMlp, BottomKind::kMmoe}) {
    const auto c = tiny_config(bottom, 2);
    auto params = init_params(c);
    perturb(params, rng);
    const auto batch = random_batch(c, 12, rng);
    LossOptions only;
    only.main_weight = 0.0;
    only.pair_weights = single_pair(2, 0, 1, 0.03);
    const auto g = backward(c, params, forward(c, params, batch), only);
    EXPECT_TRUE(all_zero_bits(g.heads[0]));
    EXPECT_FALSE(all_zero_bits(g.heads[1]));
    if (bottom == BottomKind::kMmoe) {
      for (double v : g.gates[0].values()) EXPECT_EQ(v, 0.0);
    }
  }
}

TEST(Backward, RoutingIsolatesAbsentScenes) {
  nd::Rng rng(10);
  for (auto bottom : {BottomKind::kMlp, BottomKind::kMmoe}) {
    auto c = tiny_config(bottom, 3);
    c.kt_enabled = false;
    auto params = init_params(c);
    perturb(params, rng);
    std::vector<Instance> batch;
    for (int i = 0; i < 8; ++i)
      batch.push_back({2, {static_cast<std::uint32_t>(i % 5), 1, 2}, i % 2});
    const auto g = backward(c, params, forward(c, params, batch));
    EXPECT_TRUE(all_zero_bits(g.heads[0]));
    EXPECT_TRUE(all_zero_bits(g.heads[2]));
    EXPECT_FALSE(all_zero_bits(g.heads[1]));
  }
}

TEST(Backward, FullLossMatchesFiniteDifferences) {
  nd::Rng rng(12);
  for (auto bottom : {BottomKind::kMlp, BottomKind::kMmoe}) {
    const auto c = tiny_config(bottom, 2);
    auto params = init_params(c);
    perturb(params, rng);
    const auto batch = random_batch(c, 16, rng);
    nd::GradCheckOptions o;
    o.tolerance = 1e-4;
    const auto report = check_model_gradients(c, params, batch, {}, o);
    for (const auto& b : report.blocks)
      EXPECT_LE(b.max_rel_error, 1e-4) << to_string(bottom) << " " << b.name;
  }
}

TEST(Backward, RandomArchitecturesMatchFiniteDifferences) {
  nd::Rng rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    ModelConfig c;
    c.scenes = 1 + rng.below(4);
    const std::size_t fields = 1 + rng.below(3);
    for (std::size_t j = 0; j < fields; ++j) c.vocab_sizes.push_back(2 + rng.below(5));
    c.embedding_dim = 1 + rng.below(4);
    c.bottom = rng.below(2) ? BottomKind::kMmoe : BottomKind::kMlp;
    c.experts = 1 + rng.below(3);
    c.bottom_widths.clear();
    for (std::size_t l = 0, n = 1 + rng.below(3); l < n; ++l) c.bottom_widths.push_back(2 + rng.below(5));
    if (rng.below(2)) c.head_widths = {2 + rng.below(3)};
    c.kt_enabled = c.scenes > 1;
    c.seed = static_cast<std::uint64_t>(trial);
    auto params = init_params(c);
    perturb(params, rng);
    const auto batch = random_batch(c, 6 + rng.below(10), rng);
    nd::GradCheckOptions o;
    o.seed = static_cast<std::uint64_t>(100 + trial);
    const auto report = check_model_gradients(c, params, batch, {}, o);
    EXPECT_LE(report.max_rel_error(), 1e-4) << "trial " << trial;
  }
}

TEST(TrainStep, LossDecreasesOnFixedBatch) {
  nd::Rng rng(14);
  auto c = tiny_config(BottomKind::kMmoe, 2);
  auto params = init_params(c);
  auto opt = make_optimizer(params, 0.05);
  std::vector<Instance> batch;
  for (std::uint32_t a = 0; a < 5; ++a)
    for (std::uint32_t b = 0; b < 5; ++b)
      batch.push_back({static_cast<int>(1 + (a + b) % 2), {a, b, (a * b) % 5}, a >= 2 ? 1 : 0});
  double prev = compute_loss(c, forward(c, params, batch)).total;
  const double first = prev;
  for (int step = 0; step < 50; ++step) {
    train_step(c, params, opt, batch);
    const double now = compute_loss(c, forward(c, params, batch)).total;
    EXPECT_LT(now, prev) << "step " << step;
    prev = now;
  }
  EXPECT_LT(prev, 0.8 * first);
}

TEST(TrainStep, ZeroLearningRateLeavesParamsUnchanged) {
  nd::Rng rng(15);
  const auto c = tiny_config(BottomKind::kMlp, 2);
  auto params = init_params(c);
  const auto before = params;
  auto opt = make_optimizer(params, 0.0);
  train_step(c, params, opt, random_batch(c, 8, rng));
  EXPECT_EQ(params, before);
}

TEST(TrainStep, RepeatedRunsAreIdentical) {
  auto run = [] {
    nd::Rng rng(16);
    const auto c = tiny_config(BottomKind::kMmoe, 3);
    auto params = init_params(c);
    auto opt = make_optimizer(params, c.learning_rate);
    std::vector<LossBreakdown> losses;
    for (int s = 0; s < 10; ++s) losses.push_back(train_step(c, params, opt, random_batch(c, 12, rng)));
    return std::make_pair(losses, params);
  };
  const auto a = run();
  const auto b = run();
  EXPECT_EQ(a.first, b.first);
  EXPECT_EQ(a.second, b.second);
}

TEST(Predict, MatchesTraceAndRoutes) {
  nd::Rng rng(17);
  for (auto bottom : {BottomKind::kMlp, BottomKind::kMmoe}) {
    const auto c = tiny_config(bottom, 3);
    auto params = init_params(c);
    perturb(params, rng, 0.5);
    const auto batch = random_batch(c, 10, rng);
    const auto t = forward(c, params, batch);
    for (std::size_t i = 0; i < batch.size(); ++i) {
      const double p = predict(c, params, batch[i]);
      EXPECT_NEAR(p, t.own_probability(i), 1e-15);
      EXPECT_TRUE(p > 0.0 && p < 1.0);
    }
    Instance a{1, {1, 2, 3}, 0}, b = a;
    b.scene_id = 2;
    EXPECT_NE(predict(c, params, a), predict(c, params, b));
    Instance bad = a;
    bad.scene_id = 4;
    EXPECT_THROW(predict(c, params, bad), DataError);
  }
}

TEST(ModelConfig, ValidationAndRoundTrip) {
  auto c = tiny_config(BottomKind::kMmoe, 3, 2);
  c.head_widths = {4};
  const auto back = ModelConfig::from_kv(c.to_kv());
  EXPECT_EQ(back.to_kv().dump(), c.to_kv().dump());

  auto bad = c;
  bad.bottom_widths = {4, 0};
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = c;
  bad.experts = 0;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = c;
  bad.vocab_sizes.clear();
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = c;
  bad.embedding_dim = 0;
  EXPECT_THROW(bad.validate(), ConfigError);
  EXPECT_THROW(parse_bottom_kind("moe"), ConfigError);
}

TEST(ParameterCount, DomainHeadsStayCheap) {
  ModelConfig pooled;
  pooled.scenes = 1;
  pooled.kt_enabled = false;
  pooled.vocab_sizes.assign(8, 50);
  auto mlp = pooled;
  mlp.scenes = 6;
  mlp.kt_enabled = true;
  auto mmoe = mlp;
  mmoe.bottom = BottomKind::kMmoe;
  mmoe.experts = 2;
  mmoe.bottom_widths = {32, 32, 32};
  const double base = static_cast<double>(parameter_count(init_params(pooled)));
  EXPECT_LE(parameter_count(init_params(mlp)), 1.3 * base);
  EXPECT_LE(parameter_count(init_params(mmoe)), 1.3 * base);
}
