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

#ifndef ATTMOT_SRC_FUSION_GRAPH_H_
#define ATTMOT_SRC_FUSION_GRAPH_H_

#include <cmath>
#include <span>
#include <vector>

#include "attmot/fusion.h"
#include "autodiff.h"

namespace attmot::fusion::detail {

template <typename T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;

template <typename T>
using Blocks = std::array<Mat<T>, kBlockCount>;

template <typename T>
Blocks<T> cast_blocks(const FusionParams& p) {
  Blocks<T> out;
  for (std::size_t i = 0; i < kBlockCount; ++i) out[i] = p.blocks[i].template cast<T>();
  return out;
}

// Creates a tape leaf for a block the first time the graph touches it, so the
// set of bound blocks is exactly the set the strategy uses.
template <typename T>
class Binder {
 public:
  Binder(ad::Tape<T>& tape, const Blocks<T>& blocks, bool trainable)
      : tape_(tape), blocks_(blocks), trainable_(trainable) {
    vars_.fill(-1);
  }

  int operator()(Block b) {
    int& v = vars_[static_cast<std::size_t>(b)];
    if (v < 0) {
      const Mat<T>& m = blocks_[static_cast<std::size_t>(b)];
      v = tape_.reference(&m, trainable_);
    }
    return v;
  }

  const std::array<int, kBlockCount>& vars() const { return vars_; }

 private:
  ad::Tape<T>& tape_;
  const Blocks<T>& blocks_;
  bool trainable_;
  std::array<int, kBlockCount> vars_;
};

struct GraphMeta {
  FusionDims dims;
  bool scaled_attention = false;
  bool a1_from_head = false;

  static GraphMeta of(const FusionParams& p) {
    return {p.dims, p.scaled_attention, p.a1_from_head};
  }
};

struct Forward {
  int logits = -1;     // 32 x B
  int e_out = -1;      // d x B
  int attention = -1;  // (B*32) x T_e softmax of the main block, if any
};

struct AttentionSet {
  Block wq, wk, wv;
};
inline constexpr AttentionSet kMainAttention{Block::kWq, Block::kWk, Block::kWv};
inline constexpr AttentionSet kAuxAttention{Block::kAuxWq, Block::kAuxWk, Block::kAuxWv};
inline constexpr AttentionSet kEmbAttention{Block::kEmbWq, Block::kEmbWk, Block::kEmbWv};

template <typename T>
class GraphBuilder {
 public:
  GraphBuilder(ad::Tape<T>& tape, Binder<T>& p, const GraphMeta& meta)
      : t_(tape), p_(p), meta_(meta) {}

  int adaptor(int x) {
    const int h = t_.add_col(t_.matmul(p_(Block::kW1), x), p_(Block::kB1));
    const int r = t_.relu(t_.add_col(t_.matmul(p_(Block::kW2), h), p_(Block::kB2)));
    return t_.add(r, x);
  }

  // Softmax((Xq Wq^T)(Xk Wk^T)^T) (Xk Wv^T), per sample.
  int attend(int xq, int xk, const AttentionSet& set, int nq, int nk,
             int* probs = nullptr) {
    const int q = t_.matmul_nt(xq, p_(set.wq));
    const int k = t_.matmul_nt(xk, p_(set.wk));
    const int v = t_.matmul_nt(xk, p_(set.wv));
    const T s = meta_.scaled_attention
                    ? T(1) / std::sqrt(T(meta_.dims.token_dim()))
                    : T(1);
    const int pr = t_.softmax_rows(t_.block_scores(q, k, nq, nk, s));
    if (probs != nullptr) *probs = pr;
    return t_.block_apply(pr, v, nq, nk);
  }

  int head(int tokens) {
    return t_.add_col(t_.token_dot(tokens, p_(Block::kAttrHead)), p_(Block::kAttrBias));
  }

  int residual_mlp(int x, Block w1, Block b1, Block w2, Block b2) {
    const int h = t_.relu(t_.add_col(t_.matmul(p_(w1), x), p_(b1)));
    return t_.add(x, t_.add_col(t_.matmul(p_(w2), h), p_(b2)));
  }

  Forward build(int e1, int a1, const FusionStrategy& s) {
    const int n_attr = static_cast<int>(attr::kCount);
    const int n_tok = meta_.dims.tokens;
    if (meta_.a1_from_head) {
      a1 = t_.sigmoid(t_.add_col(t_.matmul(p_(Block::kQueryHead), e1),
                                 p_(Block::kQueryBias)));
    }
    Forward f;
    switch (s.kind) {
      case StrategyKind::kAttrOnly:
      case StrategyKind::kPreprocAttr: {
        const int e2 = s.kind == StrategyKind::kAttrOnly ? e1 : adaptor(e1);
        const int xa = t_.query_tokens(a1, p_(Block::kAttrEmbed));
        const int xe = t_.to_tokens(e2, n_tok);
        f.logits = head(attend(xa, xe, kMainAttention, n_attr, n_tok, &f.attention));
        f.e_out = e2;
        break;
      }
      case StrategyKind::kPreprocBoth: {
        const int e2 = adaptor(e1);
        const int a1p = residual_mlp(a1, Block::kPreW1, Block::kPreB1,
                                     Block::kPreW2, Block::kPreB2);
        const int xa = t_.query_tokens(a1p, p_(Block::kAttrEmbed));
        const int xe = t_.to_tokens(e2, n_tok);
        f.logits = head(attend(xa, xe, kMainAttention, n_attr, n_tok, &f.attention));
        f.e_out = e2;
        break;
      }
      case StrategyKind::kCrossFertilize: {
        const int e2 = adaptor(e1);
        int xa = t_.query_tokens(a1, p_(Block::kAttrEmbed));
        int xe = t_.to_tokens(e2, n_tok);
        for (int r = 0; r < s.rounds; ++r) {
          const int da = attend(xa, xe, kMainAttention, n_attr, n_tok, &f.attention);
          const int de = attend(xe, xa, kAuxAttention, n_tok, n_attr);
          xa = t_.add(xa, da);
          xe = t_.add(xe, de);
        }
        f.logits = head(xa);
        f.e_out = e2;
        break;
      }
      case StrategyKind::kSelfEnhance: {
        const int e2 = adaptor(e1);
        int xa = t_.query_tokens(a1, p_(Block::kAttrEmbed));
        int xe = t_.to_tokens(e2, n_tok);
        for (int r = 0; r < s.rounds; ++r) {
          xa = t_.add(xa, attend(xa, xa, kAuxAttention, n_attr, n_attr));
          xe = t_.add(xe, attend(xe, xe, kEmbAttention, n_tok, n_tok));
        }
        f.logits = head(attend(xa, xe, kMainAttention, n_attr, n_tok, &f.attention));
        f.e_out = e2;
        break;
      }
      case StrategyKind::kConcatThenSelf: {
        const int e2 = adaptor(e1);
        const int c = t_.vstack(e2, a1);
        const int h = residual_mlp(c, Block::kCatW1, Block::kCatB1,
                                   Block::kCatW2, Block::kCatB2);
        const int af = t_.slice_rows(h, meta_.dims.embed_dim, n_attr);
        f.logits = t_.add_col(t_.mul_col(af, p_(Block::kCatGain)), p_(Block::kAttrBias));
        f.e_out = e2;
        break;
      }
    }
    return f;
  }

 private:
  ad::Tape<T>& t_;
  Binder<T>& p_;
  GraphMeta meta_;
};

// Columns of a batch.
template <typename T>
Mat<T> embedding_matrix(std::span<const Embedding> e, int dim) {
  Mat<T> m(dim, static_cast<Eigen::Index>(e.size()));
  for (std::size_t i = 0; i < e.size(); ++i) {
    if (static_cast<int>(e[i].dim()) != dim) {
      throw InvariantError("embedding dimension " + std::to_string(e[i].dim()) +
                           " does not match head dimension " + std::to_string(dim));
    }
    m.col(static_cast<Eigen::Index>(i)) = e[i].values().template cast<T>();
  }
  return m;
}

template <typename T>
Mat<T> attribute_matrix(std::span<const AttributeVector> a) {
  Mat<T> m(static_cast<Eigen::Index>(attr::kCount), static_cast<Eigen::Index>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < attr::kCount; ++j) {
      m(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = T(a[i][j]);
    }
  }
  return m;
}

struct LossSpec {
  std::array<double, attr::kCount> pos_freq{};
  double sigma = 1.0;
  bool uniform_weights = false;
  double lambda_id = 1.0;
  bool freeze_embedding = false;
};

template <typename T>
struct LossNodes {
  int bce = -1;
  int id = -1;
  int total = -1;
};

template <typename T>
struct BatchData {
  Mat<T> e1;
  Mat<T> a1;
  Mat<T> target;
  Mat<T> w_pos;
  Mat<T> w_neg;
  std::vector<int> labels;
};

template <typename T>
BatchData<T> make_batch(std::span<const TrainSample> batch, const GraphMeta& meta,
                        const LossSpec& spec) {
  std::vector<Embedding> e;
  std::vector<AttributeVector> a1, target;
  BatchData<T> d;
  for (const TrainSample& s : batch) {
    e.push_back(s.embedding);
    a1.push_back(s.observed);
    target.push_back(s.target);
    if (spec.lambda_id > 0.0 &&
        (s.identity < 0 || s.identity >= meta.dims.identities)) {
      throw InvariantError("identity label " + std::to_string(s.identity) +
                           " outside [0, " + std::to_string(meta.dims.identities) + ")");
    }
    d.labels.push_back(s.identity);
  }
  d.e1 = embedding_matrix<T>(e, meta.dims.embed_dim);
  d.a1 = attribute_matrix<T>(a1);
  d.target = attribute_matrix<T>(target);
  d.w_pos.resize(static_cast<Eigen::Index>(attr::kCount), 1);
  d.w_neg.resize(static_cast<Eigen::Index>(attr::kCount), 1);
  for (std::size_t j = 0; j < attr::kCount; ++j) {
    const auto [wp, wn] = bce_weights(spec.pos_freq[j], spec.sigma, spec.uniform_weights);
    d.w_pos(static_cast<Eigen::Index>(j), 0) = T(wp);
    d.w_neg(static_cast<Eigen::Index>(j), 0) = T(wn);
  }
  return d;
}

// Builds forward and loss for a prepared batch on `tape`. `data` must outlive
// the tape.
template <typename T>
LossNodes<T> build_loss(ad::Tape<T>& tape, Binder<T>& binder, const GraphMeta& meta,
                        const BatchData<T>& data, const FusionStrategy& strategy,
                        const LossSpec& spec) {
  const int e1 = tape.reference(&data.e1, false);
  const int a1 = tape.reference(&data.a1, false);
  GraphBuilder<T> g(tape, binder, meta);
  const Forward f = g.build(e1, a1, strategy);
  LossNodes<T> out;
  out.bce = tape.weighted_bce(f.logits, data.target, data.w_pos, data.w_neg,
                              T(kBceEpsilon));
  out.total = out.bce;
  if (spec.lambda_id > 0.0) {
    const int eo = spec.freeze_embedding ? tape.stop_gradient(f.e_out) : f.e_out;
    const int z = tape.add_col(tape.matmul(binder(Block::kIdHead), eo), binder(Block::kIdBias));
    out.id = tape.softmax_ce(z, data.labels);
    out.total = tape.add_scaled(out.bce, out.id, T(spec.lambda_id));
  }
  return out;
}

}  // namespace attmot::fusion::detail

#endif  // ATTMOT_SRC_FUSION_GRAPH_H_
