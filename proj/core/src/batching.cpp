#include "dadnn/batching.hpp"

#include <map>

#include "dadnn/errors.hpp"
#include "dadnn/rng.hpp"
#include "dadnn/synthgen.hpp"

namespace dadnn::synth {

std::vector<std::vector<std::size_t>> compose_batches(std::span<const Instance> train,
                                                      std::size_t batch_size, std::uint64_t seed,
                                                      std::size_t epoch) {
  if (batch_size < 1) throw ConfigError("compose_batches: batch_size must be >= 1");
  if (batch_size > train.size())
    throw ConfigError("compose_batches: batch_size " + std::to_string(batch_size) +
                      " exceeds training set of " + std::to_string(train.size()));

  std::map<int, std::vector<std::size_t>> by_scene;
  for (std::size_t i = 0; i < train.size(); ++i) by_scene[train[i].scene_id].push_back(i);

  std::vector<std::vector<std::size_t>> pools;
  std::vector<double> shares;
  const nd::Rng rng = nd::Rng(seed).fork("batches").fork(epoch);
  for (auto& [scene, rows] : by_scene) {
    nd::Rng r = rng.fork(static_cast<std::uint64_t>(scene));
    r.shuffle(std::span<std::size_t>(rows));
    shares.push_back(static_cast<double>(rows.size()));
    pools.push_back(std::move(rows));
  }

  const auto quota = proportional_counts(shares, batch_size);
  std::vector<std::size_t> cursor(pools.size(), 0);
  auto remaining = [&](std::size_t k) { return pools[k].size() - cursor[k]; };

  std::vector<std::vector<std::size_t>> batches;
  while (true) {
    std::size_t left = 0;
    bool quota_fits = true;
    for (std::size_t k = 0; k < pools.size(); ++k) {
      left += remaining(k);
      quota_fits = quota_fits && remaining(k) >= quota[k];
    }
    if (left == 0) break;

    std::vector<std::size_t> take;
    if (left <= batch_size) {
      take.resize(pools.size());
      for (std::size_t k = 0; k < pools.size(); ++k) take[k] = remaining(k);
    } else if (quota_fits) {
      take = quota;
    } else {
      std::vector<double> rest(pools.size());
      for (std::size_t k = 0; k < pools.size(); ++k) rest[k] = static_cast<double>(remaining(k));
      take = proportional_counts(rest, batch_size);
    }

    std::vector<std::size_t> batch;
    batch.reserve(batch_size);
    for (std::size_t k = 0; k < pools.size(); ++k) {
      for (std::size_t t = 0; t < take[k]; ++t) batch.push_back(pools[k][cursor[k]++]);
    }
    batches.push_back(std::move(batch));
  }
  return batches;
}

}  // namespace dadnn::synth
