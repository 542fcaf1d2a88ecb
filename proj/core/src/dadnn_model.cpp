#include "dadnn/dadnn_model.hpp"

#include <string>

#include "dadnn/dense.hpp"
#include "dadnn/errors.hpp"
#include "dadnn/numeric.hpp"

namespace dadnn {

namespace {

using nd::Matrix;

void route(const ModelConfig& config, std::span<const Instance> batch, ForwardTrace& trace) {
  const std::size_t f = config.fields();
  trace.batch_size = batch.size();
  trace.scene_index.resize(batch.size());
  trace.labels.resize(batch.size());
  trace.members.assign(config.scenes, {});
  trace.features.resize(batch.size() * f);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const Instance& x = batch[i];
    if (x.scene_id < 1 || static_cast<std::size_t>(x.scene_id) > config.scenes)
      throw DataError("row " + std::to_string(i) + ": scene id " + std::to_string(x.scene_id) +
                      " outside 1.." + std::to_string(config.scenes));
    if (x.features.size() != f)
      throw DataError("row " + std::to_string(i) + ": expected " + std::to_string(f) +
                      " features, got " + std::to_string(x.features.size()));
    for (std::size_t j = 0; j < f; ++j) {
      if (x.features[j] >= config.vocab_sizes[j])
        throw DataError("row " + std::to_string(i) + ", field " + std::to_string(j) +
                        ": index " + std::to_string(x.features[j]) + " outside vocabulary of " +
                        std::to_string(config.vocab_sizes[j]));
      trace.features[i * f + j] = x.features[j];
    }
    if (x.label != 0 && x.label != 1)
      throw DataError("row " + std::to_string(i) + ": label must be 0 or 1");
    const auto k = static_cast<std::size_t>(x.scene_id - 1);
    trace.scene_index[i] = k;
    trace.labels[i] = x.label;
    trace.members[k].push_back(i);
  }
}

Matrix embed(const ModelConfig& config, const ParameterStore& params,
             std::span<const std::uint32_t> features, std::size_t rows) {
  const std::size_t f = config.fields();
  const std::size_t d = config.embedding_dim;
  Matrix e(rows, f * d);
  for (std::size_t i = 0; i < rows; ++i) {
    auto out = e.row(i);
    for (std::size_t j = 0; j < f; ++j) {
      auto src = params.embeddings[j].row(features[i * f + j]);
      for (std::size_t c = 0; c < d; ++c) out[j * d + c] = src[c];
    }
  }
  return e;
}

std::vector<Matrix> run_tower(const Tower& tower, const Matrix& input) {
  std::vector<Matrix> outs;
  outs.reserve(tower.layers.size());
  for (const auto& layer : tower.layers)
    outs.push_back(nd::dense_forward(layer, outs.empty() ? input : outs.back()));
  return outs;
}

Matrix gate_distribution(const Matrix& gate_weights, const Matrix& embedded) {
  Matrix g = nd::matmul(embedded, gate_weights);
  for (std::size_t i = 0; i < g.rows(); ++i) {
    auto r = g.row(i);
    const auto s = nd::softmax(r);
    for (std::size_t j = 0; j < r.size(); ++j) r[j] = s[j];
  }
  return g;
}

// s_k = sum_j g_kj * f_j, accumulated in expert order.
Matrix mix_experts(const Matrix& gates, const std::vector<std::vector<Matrix>>& expert_out) {
  const Matrix& first = expert_out.front().back();
  Matrix s(first.rows(), first.cols());
  for (std::size_t i = 0; i < s.rows(); ++i) {
    auto out = s.row(i);
    for (std::size_t j = 0; j < expert_out.size(); ++j) {
      const double g = gates(i, j);
      auto f = expert_out[j].back().row(i);
      for (std::size_t c = 0; c < out.size(); ++c) out[c] += g * f[c];
    }
  }
  return s;
}

void run_head(const Tower& head, const Matrix& input, std::vector<Matrix>& hidden,
              std::vector<double>& logits, std::vector<double>& probs) {
  hidden.clear();
  for (std::size_t l = 0; l + 1 < head.layers.size(); ++l)
    hidden.push_back(nd::dense_forward(head.layers[l], hidden.empty() ? input : hidden.back()));
  const Matrix z =
      nd::dense_preactivation(head.layers.back(), hidden.empty() ? input : hidden.back());
  logits.resize(z.rows());
  probs.resize(z.rows());
  for (std::size_t i = 0; i < z.rows(); ++i) {
    logits[i] = z(i, 0);
    probs[i] = nd::sigmoid(logits[i]);
  }
}

ForwardTrace forward_impl(const ModelConfig& config, const ParameterStore& params,
                          std::span<const Instance> batch, std::optional<std::size_t> only_scene) {
  ForwardTrace t;
  route(config, batch, t);
  t.embedded = embed(config, params, t.features, batch.size());

  for (const auto& expert : params.experts) t.expert_out.push_back(run_tower(expert, t.embedded));

  const std::size_t K = config.scenes;
  const bool mmoe = config.bottom == BottomKind::kMmoe;
  if (mmoe) {
    t.gates.resize(K);
    t.mixtures.resize(K);
  }
  t.head_hidden.resize(K);
  t.logits.resize(K);
  t.probs.resize(K);
  for (std::size_t k = 0; k < K; ++k) {
    if (only_scene && *only_scene != k) continue;
    if (mmoe) {
      t.gates[k] = gate_distribution(params.gates[k], t.embedded);
      t.mixtures[k] = mix_experts(t.gates[k], t.expert_out);
    }
    run_head(params.heads[k], t.bottom_output(k), t.head_hidden[k], t.logits[k], t.probs[k]);
  }
  return t;
}

bool unclamped(double p) { return p > nd::kProbClamp && p < 1.0 - nd::kProbClamp; }

}  // namespace

const Matrix& ForwardTrace::bottom_output(std::size_t k) const {
  return mixtures.empty() ? expert_out.front().back() : mixtures[k];
}

ForwardTrace forward(const ModelConfig& config, const ParameterStore& params,
                     std::span<const Instance> batch) {
  return forward_impl(config, params, batch, std::nullopt);
}

LossBreakdown main_loss(const ForwardTrace& trace) {
  const std::size_t K = trace.members.size();
  LossBreakdown lb;
  lb.scene_loss.assign(K, 0.0);
  lb.alpha.assign(K, 0.0);
  lb.pair_loss = Matrix(K, K);
  if (trace.batch_size == 0) throw DomainError("main_loss: empty batch");
  const double n = static_cast<double>(trace.batch_size);
  for (std::size_t k = 0; k < K; ++k) {
    const auto& rows = trace.members[k];
    if (rows.empty()) continue;
    double sum = 0.0;
    for (auto i : rows) sum += nd::cross_entropy(trace.labels[i], trace.probs[k][i]);
    lb.scene_loss[k] = sum / static_cast<double>(rows.size());
    lb.alpha[k] = static_cast<double>(rows.size()) / n;
    lb.main += lb.alpha[k] * lb.scene_loss[k];
  }
  lb.total = lb.main;
  return lb;
}

KtLoss kt_loss(const ForwardTrace& trace, const Matrix& pair_weights,
               const std::vector<std::vector<double>>* teacher) {
  const auto& targets = teacher ? *teacher : trace.probs;
  const std::size_t K = trace.members.size();
  if (pair_weights.rows() != K || pair_weights.cols() != K)
    throw ConfigError("kt_loss: pair weight matrix must be K x K");
  KtLoss out{0.0, Matrix(K, K)};
  for (std::size_t p = 0; p < K; ++p) {
    const auto& rows = trace.members[p];
    if (rows.empty()) continue;
    for (std::size_t q = 0; q < K; ++q) {
      const double u = pair_weights(p, q);
      if (p == q || u == 0.0) continue;
      double sum = 0.0;
      for (auto i : rows) sum += nd::cross_entropy(targets[p][i], trace.probs[q][i]);
      out.pair_loss(p, q) = sum / static_cast<double>(rows.size());
      out.total += u * out.pair_loss(p, q);
    }
  }
  return out;
}

Matrix kt_pair_weights(const ModelConfig& config) {
  const std::size_t K = config.scenes;
  Matrix w(K, K);
  if (!config.kt_enabled) return w;
  if (K < 2) throw ConfigError("knowledge transfer is enabled but the model has only one scene");
  for (std::size_t p = 0; p < K; ++p)
    for (std::size_t q = 0; q < K; ++q)
      if (p != q) w(p, q) = config.kt_weight;
  return w;
}

LossBreakdown compute_loss(const ModelConfig& config, const ForwardTrace& trace,
                           const LossOptions& options) {
  LossBreakdown lb = main_loss(trace);
  const Matrix w = options.pair_weights ? *options.pair_weights : kt_pair_weights(config);
  KtLoss kt = kt_loss(trace, w, options.frozen_teacher ? &*options.frozen_teacher : nullptr);
  lb.kt = kt.total;
  lb.pair_loss = std::move(kt.pair_loss);
  lb.total = options.main_weight * lb.main + lb.kt;
  return lb;
}

ParameterStore backward(const ModelConfig& config, const ParameterStore& params,
                        const ForwardTrace& trace, const LossOptions& options) {
  const std::size_t K = config.scenes;
  const std::size_t B = trace.batch_size;
  ParameterStore grads = zeros_like(params);
  if (B == 0) return grads;

  // dL/d(logit) of every head on every row.
  std::vector<std::vector<double>> dz(K, std::vector<double>(B, 0.0));
  std::vector<bool> active(K, false);

  if (options.main_weight != 0.0) {
    const double n = static_cast<double>(B);
    for (std::size_t k = 0; k < K; ++k) {
      const auto& rows = trace.members[k];
      if (rows.empty()) continue;
      const double nk = static_cast<double>(rows.size());
      const double coef = options.main_weight * (nk / n) / nk;
      for (auto i : rows) {
        const double p = trace.probs[k][i];
        if (unclamped(p)) dz[k][i] += coef * (p - trace.labels[i]);
      }
      active[k] = true;
    }
  }

  const Matrix w = options.pair_weights ? *options.pair_weights : kt_pair_weights(config);
  for (std::size_t p = 0; p < K; ++p) {
    const auto& rows = trace.members[p];
    if (rows.empty()) continue;
    const double np = static_cast<double>(rows.size());
    for (std::size_t q = 0; q < K; ++q) {
      const double u = w(p, q);
      if (p == q || u == 0.0) continue;
      // Teacher probability is a constant target: only the student q gets dz.
      for (auto i : rows) {
        const double qv = trace.probs[q][i];
        if (unclamped(qv)) dz[q][i] += u * (qv - trace.probs[p][i]) / np;
      }
      active[q] = true;
    }
  }

  const bool mmoe = config.bottom == BottomKind::kMmoe;
  const std::size_t n_exp = params.experts.size();
  const std::size_t width = config.bottom_output_dim();
  std::vector<Matrix> d_expert(n_exp, Matrix(B, width));
  Matrix d_embedded(B, config.input_dim());

  for (std::size_t k = 0; k < K; ++k) {
    if (!active[k]) continue;
    const Tower& head = params.heads[k];
    Tower& ghead = grads.heads[k];
    const Matrix& in = trace.bottom_output(k);
    const auto& hidden = trace.head_hidden[k];
    const std::size_t L = head.layers.size();

    Matrix d(B, 1);
    for (std::size_t i = 0; i < B; ++i) d(i, 0) = dz[k][i];
    d = nd::linear_backward_into(head.layers[L - 1], L > 1 ? hidden[L - 2] : in, d,
                                 ghead.layers[L - 1]);
    for (std::size_t l = L - 1; l-- > 0;) {
      d = nd::activation_backward(head.layers[l].activation, hidden[l], d);
      d = nd::linear_backward_into(head.layers[l], l > 0 ? hidden[l - 1] : in, d, ghead.layers[l]);
    }

    if (!mmoe) {
      auto acc = d_expert[0].values();
      auto src = d.values();
      for (std::size_t x = 0; x < acc.size(); ++x) acc[x] += src[x];
      continue;
    }

    const Matrix& gates = trace.gates[k];
    const Matrix& wg = params.gates[k];
    Matrix& gwg = grads.gates[k];
    std::vector<double> dgate(n_exp), dlogit(n_exp);
    for (std::size_t i = 0; i < B; ++i) {
      auto drow = d.row(i);
      double dot = 0.0;
      for (std::size_t j = 0; j < n_exp; ++j) {
        const double g = gates(i, j);
        auto acc = d_expert[j].row(i);
        auto f = trace.expert_out[j].back().row(i);
        double s = 0.0;
        for (std::size_t c = 0; c < width; ++c) {
          acc[c] += g * drow[c];
          s += drow[c] * f[c];
        }
        dgate[j] = s;
        dot += g * s;
      }
      for (std::size_t j = 0; j < n_exp; ++j) dlogit[j] = gates(i, j) * (dgate[j] - dot);
      auto e = trace.embedded.row(i);
      auto de = d_embedded.row(i);
      for (std::size_t a = 0; a < e.size(); ++a) {
        double back = 0.0;
        for (std::size_t j = 0; j < n_exp; ++j) {
          gwg(a, j) += e[a] * dlogit[j];
          back += wg(a, j) * dlogit[j];
        }
        de[a] += back;
      }
    }
  }

  for (std::size_t e = 0; e < n_exp; ++e) {
    const Tower& tower = params.experts[e];
    Tower& gtower = grads.experts[e];
    const auto& outs = trace.expert_out[e];
    Matrix d = d_expert[e];
    for (std::size_t l = tower.layers.size(); l-- > 0;) {
      d = nd::activation_backward(tower.layers[l].activation, outs[l], d);
      d = nd::linear_backward_into(tower.layers[l], l > 0 ? outs[l - 1] : trace.embedded, d,
                                   gtower.layers[l]);
    }
    auto acc = d_embedded.values();
    auto src = d.values();
    for (std::size_t x = 0; x < acc.size(); ++x) acc[x] += src[x];
  }

  const std::size_t f = config.fields();
  const std::size_t D = config.embedding_dim;
  for (std::size_t i = 0; i < B; ++i) {
    auto de = d_embedded.row(i);
    for (std::size_t j = 0; j < f; ++j) {
      auto g = grads.embeddings[j].row(trace.features[i * f + j]);
      for (std::size_t c = 0; c < D; ++c) g[c] += de[j * D + c];
    }
  }
  return grads;
}

LossBreakdown train_step(const ModelConfig& config, ParameterStore& params,
                         OptimizerState& optimizer, std::span<const Instance> batch) {
  const ForwardTrace trace = forward(config, params, batch);
  LossBreakdown lb = compute_loss(config, trace);
  const ParameterStore grads = backward(config, params, trace);

  auto p = blocks(params);
  const auto g = blocks(grads);
  if (optimizer.blocks.size() != p.size())
    throw ConfigError("train_step: optimizer state does not match the parameter store");
  for (std::size_t b = 0; b < p.size(); ++b)
    nd::adagrad_step(p[b].values, g[b].values, optimizer.blocks[b]);
  return lb;
}

double predict(const ModelConfig& config, const ParameterStore& params, const Instance& instance) {
  if (instance.scene_id < 1 || static_cast<std::size_t>(instance.scene_id) > config.scenes)
    throw DataError("predict: unknown scene id " + std::to_string(instance.scene_id));
  const auto k = static_cast<std::size_t>(instance.scene_id - 1);
  const ForwardTrace t = forward_impl(config, params, std::span(&instance, 1), k);
  return t.probs[k][0];
}

}  // namespace dadnn
