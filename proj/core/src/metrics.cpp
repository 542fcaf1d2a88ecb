#include "dadnn/metrics.hpp"

#include <algorithm>
#include <iostream>
#include <map>
#include <numeric>

#include <nlohmann/json.hpp>

#include "dadnn/errors.hpp"
#include "dadnn/numeric.hpp"

namespace dadnn::metrics {

namespace {

void count_classes(std::span<const ScoredSample> samples, std::size_t& pos, std::size_t& neg) {
  pos = neg = 0;
  for (const auto& s : samples) (s.label ? pos : neg)++;
  if (pos == 0 || neg == 0)
    throw UndefinedMetricError("AUC needs at least one positive and one negative sample");
}

}  // namespace

double auc(std::span<const ScoredSample> samples) {
  std::size_t pos = 0, neg = 0;
  count_classes(samples, pos, neg);

  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return samples[a].score < samples[b].score; });

  // Sum of (1-based, tie-averaged) ranks of the positives, kept doubled so it
  // stays an exact integer.
  std::uint64_t doubled_rank_sum = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && samples[order[j]].score == samples[order[i]].score) ++j;
    const std::uint64_t doubled_avg = (i + 1) + j;  // 2 * mean of ranks i+1..j
    for (std::size_t t = i; t < j; ++t)
      if (samples[order[t]].label) doubled_rank_sum += doubled_avg;
    i = j;
  }
  const std::uint64_t doubled_u = doubled_rank_sum - pos * (pos + 1);
  return (static_cast<double>(doubled_u) / 2.0) /
         (static_cast<double>(pos) * static_cast<double>(neg));
}

double auc_oracle(std::span<const ScoredSample> samples) {
  std::size_t pos = 0, neg = 0;
  count_classes(samples, pos, neg);
  double wins = 0.0;
  for (const auto& p : samples) {
    if (!p.label) continue;
    for (const auto& n : samples) {
      if (n.label) continue;
      if (p.score > n.score) wins += 1.0;
      else if (p.score == n.score) wins += 0.5;
    }
  }
  return wins / (static_cast<double>(pos) * static_cast<double>(neg));
}

double calibration(std::span<const ScoredSample> samples) {
  double score_sum = 0.0, label_sum = 0.0;
  for (const auto& s : samples) {
    score_sum += s.score;
    label_sum += s.label;
  }
  if (label_sum == 0.0) throw UndefinedMetricError("calibration undefined without positive labels");
  return score_sum / label_sum;
}

const SceneMetrics* MetricsReport::scene(int id) const {
  for (const auto& s : scenes)
    if (s.scene_id == id) return &s;
  return nullptr;
}

MetricsReport evaluate(std::span<const ScoredSample> samples) {
  if (samples.empty()) throw UndefinedMetricError("no samples to evaluate");
  std::map<int, std::vector<ScoredSample>> groups;
  double loss = 0.0;
  for (const auto& s : samples) {
    groups[s.scene_id].push_back(s);
    loss += nd::cross_entropy(s.label, s.score);
  }

  MetricsReport r;
  r.log_loss = loss / static_cast<double>(samples.size());
  double weighted = 0.0, weight = 0.0;
  for (const auto& [id, group] : groups) {
    SceneMetrics m;
    m.scene_id = id;
    m.impressions = group.size();
    double score_sum = 0.0, label_sum = 0.0;
    for (const auto& s : group) {
      score_sum += s.score;
      label_sum += s.label;
    }
    m.mean_pctr = score_sum / static_cast<double>(group.size());
    m.empirical_ctr = label_sum / static_cast<double>(group.size());
    if (label_sum > 0.0) m.calibration = calibration(group);
    if (label_sum > 0.0 && label_sum < static_cast<double>(group.size())) {
      m.auc = auc(group);
      weighted += static_cast<double>(m.impressions) * *m.auc;
      weight += static_cast<double>(m.impressions);
    } else {
      r.excluded_scenes.push_back(id);
      std::cerr << "warning: scene " << id << " has a single class; excluded from GAUC\n";
    }
    r.scenes.push_back(m);
  }
  if (weight == 0.0) throw UndefinedMetricError("GAUC undefined: every scene has a single class");
  r.gauc = weighted / weight;
  return r;
}

double gauc(std::span<const ScoredSample> samples) { return evaluate(samples).gauc; }

std::string MetricsReport::to_json_line() const {
  nlohmann::json j;
  j["gauc"] = gauc;
  j["log_loss"] = log_loss;
  j["excluded_scenes"] = excluded_scenes;
  j["scenes"] = nlohmann::json::array();
  for (const auto& s : scenes) {
    nlohmann::json o;
    o["scene_id"] = s.scene_id;
    o["impressions"] = s.impressions;
    o["auc"] = s.auc ? nlohmann::json(*s.auc) : nlohmann::json(nullptr);
    o["calibration"] = s.calibration ? nlohmann::json(*s.calibration) : nlohmann::json(nullptr);
    o["empirical_ctr"] = s.empirical_ctr;
    o["mean_pctr"] = s.mean_pctr;
    j["scenes"].push_back(std::move(o));
  }
  return j.dump();
}

MetricsReport MetricsReport::from_json_line(const std::string& line) try {
  const auto j = nlohmann::json::parse(line);
  MetricsReport r;
  r.gauc = j.at("gauc").get<double>();
  r.log_loss = j.at("log_loss").get<double>();
  r.excluded_scenes = j.at("excluded_scenes").get<std::vector<int>>();
  for (const auto& o : j.at("scenes")) {
    SceneMetrics s;
    s.scene_id = o.at("scene_id").get<int>();
    s.impressions = o.at("impressions").get<std::size_t>();
    if (!o.at("auc").is_null()) s.auc = o.at("auc").get<double>();
    if (!o.at("calibration").is_null()) s.calibration = o.at("calibration").get<double>();
    s.empirical_ctr = o.at("empirical_ctr").get<double>();
    s.mean_pctr = o.at("mean_pctr").get<double>();
    r.scenes.push_back(s);
  }
  return r;
} catch (const nlohmann::json::exception& e) {
  throw DataError(std::string("malformed metrics record: ") + e.what());
}

}  // namespace dadnn::metrics
