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

#include "attmot/fusion.h"
#include "fusion_graph.h"

namespace attmot::fusion {
namespace {

using Tape = ad::Tape<double>;

void require_dim(const Embedding& e, const FusionParams& p) {
  if (static_cast<int>(e.dim()) != p.dims.embed_dim) {
    throw InvariantError("embedding dimension " + std::to_string(e.dim()) +
                         " does not match head dimension " +
                         std::to_string(p.dims.embed_dim));
  }
}

Eigen::MatrixXd column(const Embedding& e) { return e.values(); }

Eigen::MatrixXd column(const AttributeVector& a) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(attr::kCount), 1);
  for (std::size_t j = 0; j < attr::kCount; ++j) m(static_cast<Eigen::Index>(j), 0) = a[j];
  return m;
}

AttributeVector to_probs(const Eigen::VectorXd& logits) {
  AttributeVector::Values v{};
  for (std::size_t j = 0; j < attr::kCount; ++j) {
    v[j] = Tape::logistic(logits[static_cast<Eigen::Index>(j)]);
  }
  return AttributeVector::prob(v);
}

}  // namespace

Embedding adaptor_forward(const Embedding& e1, const FusionParams& params) {
  require_dim(e1, params);
  Tape tape;
  detail::Binder<double> binder(tape, params.blocks, false);
  detail::GraphBuilder<double> g(tape, binder, detail::GraphMeta::of(params));
  const int out = g.adaptor(tape.constant(column(e1)));
  return Embedding(Eigen::VectorXd(tape.value(out).col(0)));
}

Eigen::VectorXd cross_attention_forward(const Embedding& e2, const AttributeVector& a1,
                                        const FusionParams& params,
                                        Eigen::MatrixXd* attention) {
  require_dim(e2, params);
  params.dims.validate();
  Tape tape;
  detail::Binder<double> binder(tape, params.blocks, false);
  detail::GraphBuilder<double> g(tape, binder, detail::GraphMeta::of(params));
  const int xa = tape.query_tokens(tape.constant(column(a1)), binder(Block::kAttrEmbed));
  const int xe = tape.to_tokens(tape.constant(column(e2)), params.dims.tokens);
  int probs = -1;
  const int o = g.attend(xa, xe, detail::kMainAttention, static_cast<int>(attr::kCount),
                         params.dims.tokens, &probs);
  if (attention != nullptr) *attention = tape.value(probs);
  return tape.value(g.head(o)).col(0);
}

AttributeVector attribute_head_forward(const Embedding& e1, const FusionParams& params) {
  require_dim(e1, params);
  const Eigen::VectorXd z =
      params[Block::kQueryHead] * e1.values() + params[Block::kQueryBias].col(0);
  return to_probs(z);
}

std::vector<Prediction> predict_batch(std::span<const Embedding> e1,
                                      std::span<const AttributeVector> a1_raw,
                                      const FusionStrategy& strategy,
                                      const FusionParams& params) {
  if (e1.size() != a1_raw.size()) {
    throw InvariantError("embedding and attribute batches differ in length");
  }
  strategy.validate();
  params.dims.validate();
  std::vector<Prediction> out;
  if (e1.empty()) return out;
  Tape tape;
  detail::Binder<double> binder(tape, params.blocks, false);
  detail::GraphBuilder<double> g(tape, binder, detail::GraphMeta::of(params));
  const int ev = tape.constant(detail::embedding_matrix<double>(e1, params.dims.embed_dim));
  const int av = tape.constant(detail::attribute_matrix<double>(a1_raw));
  const detail::Forward f = g.build(ev, av, strategy);
  const Eigen::MatrixXd& logits = tape.value(f.logits);
  const Eigen::MatrixXd& e_out = tape.value(f.e_out);
  for (Eigen::Index b = 0; b < logits.cols(); ++b) {
    Prediction p;
    p.logits = logits.col(b);
    p.attributes = to_probs(p.logits);
    p.embedding = Embedding(Eigen::VectorXd(e_out.col(b)));
    out.push_back(std::move(p));
  }
  return out;
}

Prediction predict_attributes(const Embedding& e1, const AttributeVector& a1_raw,
                              const FusionStrategy& strategy,
                              const FusionParams& params) {
  require_dim(e1, params);
  return predict_batch(std::span(&e1, 1), std::span(&a1_raw, 1), strategy, params)[0];
}

std::pair<double, double> bce_weights(double pos_freq, double sigma,
                                      bool uniform_weights) {
  if (uniform_weights) return {1.0, 1.0};
  const double s2 = sigma * sigma;
  return {std::exp((1.0 - pos_freq) / s2), std::exp(pos_freq / s2)};
}

double weighted_bce_loss(std::span<const double> pred, std::span<const double> target,
                         std::span<const double> pos_freq, double sigma,
                         bool uniform_weights) {
  if (pred.size() != target.size() || pred.size() != pos_freq.size()) {
    throw InvariantError("weighted BCE inputs differ in length");
  }
  if (pred.empty()) throw InvariantError("weighted BCE needs at least one slot");
  if (!(sigma > 0.0)) throw InvariantError("sigma must be > 0");
  double total = 0.0;
  for (std::size_t j = 0; j < pred.size(); ++j) {
    const double p = std::clamp(pred[j], kBceEpsilon, 1.0 - kBceEpsilon);
    const auto [wp, wn] = bce_weights(pos_freq[j], sigma, uniform_weights);
    total -= wp * target[j] * std::log(p) + wn * (1.0 - target[j]) * std::log(1.0 - p);
  }
  return total / static_cast<double>(pred.size());
}

double identity_loss(const Embedding& e_out, int label, const FusionParams& params) {
  require_dim(e_out, params);
  if (label < 0 || label >= params.dims.identities) {
    throw InvariantError("identity label " + std::to_string(label) + " outside [0, " +
                         std::to_string(params.dims.identities) + ")");
  }
  const Eigen::VectorXd z =
      params[Block::kIdHead] * e_out.values() + params[Block::kIdBias].col(0);
  const double mx = z.maxCoeff();
  const double lse = mx + std::log((z.array() - mx).exp().sum());
  return std::max(0.0, lse - z[label]);
}

Embedding fuse_for_association(const Embedding& e, const AttributeVector& a2) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(e.dim() + attr::kCount));
  v.head(static_cast<Eigen::Index>(e.dim())) = e.values();
  for (std::size_t j = 0; j < attr::kCount; ++j) {
    v[static_cast<Eigen::Index>(e.dim() + j)] = a2[j];
  }
  return Embedding(std::move(v));
}

}  // namespace attmot::fusion
