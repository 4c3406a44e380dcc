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

// Attribute head on top of a frozen appearance embedding: a residual adaptor
// E2 = ReLU(W2 (W1 E1 + b1) + b2) + E1, cross-attention from 32 attribute
// query tokens onto E2 split into T_e key tokens, and the losses used to
// train it.

#ifndef ATTMOT_FUSION_H_
#define ATTMOT_FUSION_H_

#include <array>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "attmot/keyvalue.h"
#include "attmot/types.h"

namespace attmot::fusion {

enum class StrategyKind {
  kCrossFertilize,  // attributes and embedding attend to each other, repeated
  kSelfEnhance,     // each side self-attends, then attributes query embedding
  kAttrOnly,        // attributes query the raw embedding, no adaptor
  kPreprocAttr,     // adaptor, then attributes query the adapted embedding
  kPreprocBoth,     // adaptor plus a residual MLP on the attribute input
  kConcatThenSelf,  // [E2; A1] through a residual MLP, then split
};

struct FusionStrategy {
  StrategyKind kind = StrategyKind::kPreprocAttr;
  int rounds = 1;  // CrossFertilize and SelfEnhance only

  void validate() const;
  // "cross-fertilize[:r]", "self-enhance[:r]", "attr-only", "preproc-attr",
  // "preproc-both", "concat-then-self".
  static FusionStrategy parse(std::string_view text);
  std::string to_string() const;
  static std::vector<FusionStrategy> all(int rounds = 1);

  friend bool operator==(const FusionStrategy&, const FusionStrategy&) = default;
};

struct FusionDims {
  int embed_dim = 512;
  int tokens = 8;      // T_e, must divide embed_dim
  int identities = 1;  // rows of the identity classifier

  int token_dim() const { return embed_dim / tokens; }
  void validate() const;
  friend bool operator==(const FusionDims&, const FusionDims&) = default;
};

// Parameter blocks. Matrices act on column vectors; bias blocks are
// single-column matrices.
enum class Block {
  kW1, kB1, kW2, kB2,                // adaptor, d x d and d x 1
  kWq, kWk, kWv,                     // attention projections, dt x dt
  kAuxWq, kAuxWk, kAuxWv,            // second attention (embedding side)
  kEmbWq, kEmbWk, kEmbWv,            // third attention (embedding self)
  kAttrEmbed,                        // 32 query tokens, 32 x dt
  kAttrHead, kAttrBias,              // per-token projection, 32 x dt, 32 x 1
  kQueryHead, kQueryBias,            // linear A1 head, 32 x d, 32 x 1
  kPreW1, kPreB1, kPreW2, kPreB2,    // attribute-input MLP, 32 x 32
  kCatW1, kCatB1, kCatW2, kCatB2,    // concat MLP, (d+32) x (d+32)
  kCatGain,                          // 32 x 1
  kIdHead, kIdBias,                  // identity classifier, k x d, k x 1
  kCount
};

inline constexpr std::size_t kBlockCount = static_cast<std::size_t>(Block::kCount);

std::string_view block_name(Block b);

struct FusionParams {
  FusionDims dims;
  FusionStrategy strategy;
  bool scaled_attention = false;  // divide scores by sqrt(token_dim)
  bool a1_from_head = false;      // A1 = sigmoid(query head E1) instead of input
  std::array<Eigen::MatrixXd, kBlockCount> blocks;

  Eigen::MatrixXd& operator[](Block b) { return blocks[static_cast<std::size_t>(b)]; }
  const Eigen::MatrixXd& operator[](Block b) const {
    return blocks[static_cast<std::size_t>(b)];
  }

  // Expected shape of block b under `dims`.
  static std::pair<Eigen::Index, Eigen::Index> shape(Block b, const FusionDims& dims);

  // Every block zero.
  static FusionParams zeros(const FusionDims& dims);
  // Training initialisation: W1 is a unit-gain random projection (entries
  // N(0,1)), W2 small, attention weights N(0, 1/dt), query tokens N(0,1),
  // identity head N(0, 0.1^2).
  static FusionParams init(const FusionDims& dims, std::uint64_t seed);

  // Throws InvariantError on a shape mismatch or a non-finite entry.
  void validate() const;

  void save(std::ostream& out) const;
  static FusionParams load(std::istream& in);
  void save_file(const std::string& path) const;
  static FusionParams load_file(const std::string& path);

  friend bool operator==(const FusionParams& a, const FusionParams& b);
};

Embedding adaptor_forward(const Embedding& e1, const FusionParams& params);

// The 32 attribute logits of the main cross-attention block with E2 as keys
// and values and A1-scaled query tokens. If `attention` is given it receives
// the 32 x T_e softmax matrix.
Eigen::VectorXd cross_attention_forward(const Embedding& e2,
                                        const AttributeVector& a1,
                                        const FusionParams& params,
                                        Eigen::MatrixXd* attention = nullptr);

// sigmoid(query_head E1 + query_bias).
AttributeVector attribute_head_forward(const Embedding& e1,
                                       const FusionParams& params);

struct Prediction {
  AttributeVector attributes;  // A2 = sigmoid(logits)
  Embedding embedding;         // E_out
  Eigen::VectorXd logits;
};

// Runs `strategy` (which may differ from params.strategy, e.g. for ablation).
Prediction predict_attributes(const Embedding& e1, const AttributeVector& a1_raw,
                              const FusionStrategy& strategy,
                              const FusionParams& params);
// Batched form; one prediction per input pair.
std::vector<Prediction> predict_batch(std::span<const Embedding> e1,
                                      std::span<const AttributeVector> a1_raw,
                                      const FusionStrategy& strategy,
                                      const FusionParams& params);

inline constexpr double kBceEpsilon = 1e-7;

// Positive weight exp((1 - p_j) / sigma^2), negative weight exp(p_j / sigma^2);
// both 1 when `uniform_weights` is set.
std::pair<double, double> bce_weights(double pos_freq, double sigma,
                                      bool uniform_weights);

// Mean over the 32 slots of the weighted binary cross-entropy, predictions
// clamped to [1e-7, 1 - 1e-7]. Throws InvariantError on a length mismatch.
double weighted_bce_loss(std::span<const double> pred,
                         std::span<const double> target,
                         std::span<const double> pos_freq, double sigma,
                         bool uniform_weights = false);

// Softmax cross-entropy of id_head E_out + id_bias against `label`.
double identity_loss(const Embedding& e_out, int label,
                     const FusionParams& params);

// [E; A2], dimension d + 32.
Embedding fuse_for_association(const Embedding& e, const AttributeVector& a2);

struct TrainSample {
  Embedding embedding;        // E1 from the frozen extractor
  AttributeVector observed;   // A1_raw
  int identity = 0;           // class index in [0, k)
  AttributeVector target;     // ground-truth bits
};

struct TrainConfig {
  double step = 0.05;
  int iterations = 600;
  int batch_size = 64;
  double sigma = 1.0;
  double lambda_id = 1.0;
  std::uint64_t seed = 1;
  bool freeze_embedding = true;
  bool uniform_weights = false;
  int tokens = 8;
  bool scaled_attention = false;
  bool a1_from_head = false;

  void validate() const;
  KeyValueDoc to_doc() const;
  static TrainConfig from_doc(const KeyValueDoc& doc);
};

struct LossPoint {
  int iteration = 0;
  double bce = 0.0;
  double id_loss = 0.0;
  double total = 0.0;
  friend bool operator==(const LossPoint&, const LossPoint&) = default;
};

struct TrainResult {
  FusionParams params;
  std::vector<LossPoint> trace;
  std::array<double, attr::kCount> pos_freq{};
};

// Plain gradient descent on weighted_bce + lambda_id * identity_loss over
// seeded minibatches. Each trace point is the loss of that iteration's batch
// before the update. Throws InvariantError on an empty dataset and
// std::runtime_error on a non-finite loss.
TrainResult train(std::span<const TrainSample> dataset, const TrainConfig& config,
                  const FusionStrategy& strategy);

// Objective used by train() on `batch`, and its gradient per block (blocks the
// strategy does not touch are left empty).
struct LossAndGrad {
  double bce = 0.0;
  double id_loss = 0.0;
  double total = 0.0;
  std::array<Eigen::MatrixXd, kBlockCount> grad;
};
LossAndGrad loss_and_gradient(const FusionParams& params,
                              std::span<const TrainSample> batch,
                              const FusionStrategy& strategy,
                              std::span<const double> pos_freq,
                              const TrainConfig& config);

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::size_t one_sided = 0;  // coordinates where a kink forced a one-sided difference
  std::size_t skipped = 0;    // coordinates with kinks on both sides
  std::string worst;          // "block[row,col]" of the worst coordinate
};

// Compares every analytic partial of the training objective on `sample`
// against central differences (f(t+eps) - f(t-eps)) / (2 eps). Relative error
// is |analytic - numeric| / max(1e-8, |numeric|). The embedding is never
// frozen here. Evaluated in extended precision.
GradCheckResult grad_check(const FusionParams& params,
                           std::span<const TrainSample> sample,
                           const FusionStrategy& strategy,
                           const TrainConfig& config, double eps = 1e-5);

// Fraction of positive labels per slot.
std::array<double, attr::kCount> positive_frequency(
    std::span<const TrainSample> dataset);

// Per-slot accuracy of thresholding predictions at 0.5.
std::array<double, attr::kCount> attribute_accuracy(
    std::span<const Prediction> predictions,
    std::span<const AttributeVector> targets);

void write_loss_trace(std::ostream& out, std::span<const LossPoint> trace);

}  // namespace attmot::fusion

#endif  // ATTMOT_FUSION_H_
