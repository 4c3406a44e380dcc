// Copyright 2026 The attmot Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "attmot/fusion.h"
#include "attmot/motio.h"
#include "fusion_graph.h"

namespace attmot::fusion {
namespace {

detail::LossSpec loss_spec(std::span<const double> pos_freq, const TrainConfig& c,
                           bool freeze) {
  if (pos_freq.size() != attr::kCount) {
    throw InvariantError("positive frequencies must have 32 entries");
  }
  detail::LossSpec s;
  std::copy(pos_freq.begin(), pos_freq.end(), s.pos_freq.begin());
  s.sigma = c.sigma;
  s.uniform_weights = c.uniform_weights;
  s.lambda_id = c.lambda_id;
  s.freeze_embedding = freeze;
  return s;
}

LossAndGrad run_batch(const FusionParams& params, std::span<const TrainSample> batch,
                      const FusionStrategy& strategy, const detail::LossSpec& spec) {
  ad::Tape<double> tape;
  detail::Binder<double> binder(tape, params.blocks, true);
  const detail::GraphMeta meta = detail::GraphMeta::of(params);
  const auto data = detail::make_batch<double>(batch, meta, spec);
  const auto nodes = detail::build_loss(tape, binder, meta, data, strategy, spec);
  LossAndGrad out;
  out.bce = tape.value(nodes.bce)(0, 0);
  out.id_loss = nodes.id >= 0 ? tape.value(nodes.id)(0, 0) : 0.0;
  out.total = tape.value(nodes.total)(0, 0);
  if (!std::isfinite(out.total)) return out;
  tape.backward(nodes.total);
  for (std::size_t i = 0; i < kBlockCount; ++i) {
    if (binder.vars()[i] >= 0) out.grad[i] = tape.grad(binder.vars()[i]);
  }
  return out;
}

}  // namespace

std::array<double, attr::kCount> positive_frequency(std::span<const TrainSample> dataset) {
  std::array<double, attr::kCount> f{};
  if (dataset.empty()) return f;
  for (const TrainSample& s : dataset) {
    for (std::size_t j = 0; j < attr::kCount; ++j) f[j] += s.target[j];
  }
  for (double& v : f) v /= static_cast<double>(dataset.size());
  return f;
}

LossAndGrad loss_and_gradient(const FusionParams& params,
                              std::span<const TrainSample> batch,
                              const FusionStrategy& strategy,
                              std::span<const double> pos_freq,
                              const TrainConfig& config) {
  if (batch.empty()) throw InvariantError("empty batch");
  return run_batch(params, batch, strategy,
                   loss_spec(pos_freq, config, config.freeze_embedding));
}

TrainResult train(std::span<const TrainSample> dataset, const TrainConfig& config,
                  const FusionStrategy& strategy) {
  if (dataset.empty()) throw InvariantError("training dataset is empty");
  config.validate();
  strategy.validate();

  FusionDims dims;
  dims.embed_dim = static_cast<int>(dataset.front().embedding.dim());
  dims.tokens = config.tokens;
  dims.identities = 1;
  for (const TrainSample& s : dataset) {
    if (s.identity < 0) throw InvariantError("identity labels must be >= 0");
    dims.identities = std::max(dims.identities, s.identity + 1);
  }
  dims.validate();

  TrainResult result;
  result.pos_freq = positive_frequency(dataset);
  FusionParams& params = result.params;
  params = FusionParams::init(dims, config.seed);
  params.strategy = strategy;
  params.scaled_attention = config.scaled_attention;
  params.a1_from_head = config.a1_from_head;

  // Start the attribute bias at the constant prediction that minimises the
  // weighted loss for each slot's label frequency.
  for (std::size_t j = 0; j < attr::kCount; ++j) {
    const double p = result.pos_freq[j];
    const auto [wp, wn] = bce_weights(p, config.sigma, config.uniform_weights);
    const double q = std::clamp(wp * p / (wp * p + wn * (1.0 - p)), 1e-3, 1.0 - 1e-3);
    params[Block::kAttrBias](static_cast<Eigen::Index>(j), 0) = std::log(q / (1.0 - q));
  }

  const detail::LossSpec spec = loss_spec(result.pos_freq, config, config.freeze_embedding);
  std::mt19937_64 rng(config.seed ^ 0x5DEECE66DULL);
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const bool full_batch = static_cast<std::size_t>(config.batch_size) >= dataset.size();
  std::size_t cursor = dataset.size();
  std::vector<TrainSample> batch;

  for (int it = 0; it < config.iterations; ++it) {
    batch.clear();
    if (full_batch) {
      batch.assign(dataset.begin(), dataset.end());
    } else {
      while (batch.size() < static_cast<std::size_t>(config.batch_size)) {
        if (cursor == order.size()) {
          std::shuffle(order.begin(), order.end(), rng);
          cursor = 0;
        }
        batch.push_back(dataset[order[cursor++]]);
      }
    }
    LossAndGrad lg = run_batch(params, batch, strategy, spec);
    if (!std::isfinite(lg.total)) {
      throw std::runtime_error("non-finite training loss at iteration " + std::to_string(it) +
                               " (bce " + motio::format_real(lg.bce) + ", id " +
                               motio::format_real(lg.id_loss) + ")");
    }
    result.trace.push_back({it, lg.bce, lg.id_loss, lg.total});
    if (config.step == 0.0) continue;
    for (std::size_t i = 0; i < kBlockCount; ++i) {
      if (lg.grad[i].size() != 0) params.blocks[i] -= config.step * lg.grad[i];
    }
  }
  return result;
}

GradCheckResult grad_check(const FusionParams& params, std::span<const TrainSample> sample,
                           const FusionStrategy& strategy, const TrainConfig& config,
                           double eps) {
  using T = long double;
  if (sample.empty()) throw InvariantError("grad_check needs at least one sample");
  params.validate();
  strategy.validate();
  const auto freq = positive_frequency(sample);
  const detail::LossSpec spec = loss_spec(freq, config, false);
  const detail::GraphMeta meta = detail::GraphMeta::of(params);
  detail::Blocks<T> blocks = detail::cast_blocks<T>(params);

  const auto data = detail::make_batch<T>(sample, meta, spec);
  ad::Tape<T> base(true);
  detail::Binder<T> binder(base, blocks, true);
  const auto nodes = detail::build_loss(base, binder, meta, data, strategy, spec);
  const T f0 = base.value(nodes.total)(0, 0);
  base.backward(nodes.total);
  const std::vector<char> pattern = base.branches();

  auto evaluate = [&](std::vector<char>& branches) {
    ad::Tape<T> tape(true);
    detail::Binder<T> b(tape, blocks, false);
    const auto n = detail::build_loss(tape, b, meta, data, strategy, spec);
    branches = tape.branches();
    return tape.value(n.total)(0, 0);
  };

  GradCheckResult r;
  const T h = T(eps);
  std::vector<char> bp, bm;
  for (std::size_t i = 0; i < kBlockCount; ++i) {
    const int var = binder.vars()[i];
    if (var < 0) continue;
    const detail::Mat<T> analytic = base.grad(var);
    detail::Mat<T>& m = blocks[i];
    for (Eigen::Index c = 0; c < m.size(); ++c) {
      const T orig = m.data()[c];
      m.data()[c] = orig + h;
      const T fp = evaluate(bp);
      m.data()[c] = orig - h;
      const T fm = evaluate(bm);
      m.data()[c] = orig;
      T numeric;
      if (bp == pattern && bm == pattern) {
        numeric = (fp - fm) / (2 * h);
      } else if (bp == pattern) {
        numeric = (fp - f0) / h;
        ++r.one_sided;
      } else if (bm == pattern) {
        numeric = (f0 - fm) / h;
        ++r.one_sided;
      } else {
        ++r.skipped;
        continue;
      }
      const T a = analytic.data()[c];
      const double rel = static_cast<double>(
          std::abs(a - numeric) / std::max(T(1e-8), std::abs(numeric)));
      ++r.checked;
      if (r.worst.empty() || rel > r.max_rel_error) {
        r.max_rel_error = rel;
        r.worst = std::string(block_name(static_cast<Block>(i))) + "[" +
                  std::to_string(c % m.rows()) + "," + std::to_string(c / m.rows()) + "]";
      }
    }
  }
  return r;
}

std::array<double, attr::kCount> attribute_accuracy(std::span<const Prediction> predictions,
                                                    std::span<const AttributeVector> targets) {
  if (predictions.size() != targets.size()) {
    throw InvariantError("prediction and target counts differ");
  }
  std::array<double, attr::kCount> acc{};
  if (predictions.empty()) return acc;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    for (std::size_t j = 0; j < attr::kCount; ++j) {
      const bool p = predictions[i].attributes[j] > 0.5;
      const bool t = targets[i][j] > 0.5;
      if (p == t) acc[j] += 1.0;
    }
  }
  for (double& a : acc) a /= static_cast<double>(predictions.size());
  return acc;
}

void write_loss_trace(std::ostream& out, std::span<const LossPoint> trace) {
  out << "iteration,bce,id_loss,total\n";
  for (const LossPoint& p : trace) {
    out << p.iteration << ',' << motio::format_real(p.bce) << ','
        << motio::format_real(p.id_loss) << ',' << motio::format_real(p.total) << '\n';
  }
}

}  // namespace attmot::fusion
