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

#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "attmot/distances.h"
#include "attmot/fusion.h"
#include "attmot/synthgen.h"

namespace attmot::fusion {
namespace {

Embedding random_embedding(std::mt19937_64& rng, int d) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::VectorXd v(d);
  for (int i = 0; i < d; ++i) v[i] = n(rng);
  return Embedding(v);
}

AttributeVector random_attrs(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  AttributeVector::Values v{};
  for (auto& x : v) x = u(rng);
  return AttributeVector::prob(v);
}

FusionDims dims_of(int d, int tokens = 8, int identities = 1) {
  FusionDims dims;
  dims.embed_dim = d;
  dims.tokens = tokens;
  dims.identities = identities;
  return dims;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

std::vector<TrainSample> tiny_dataset(int d, int n_frames = 30) {
  synth::WorldConfig w;
  w.embed_dim = d;
  w.n_frames = n_frames;
  w.n_identities = 4;
  return synth::training_samples(synth::generate_bundles(w).front());
}

TEST(Adaptor, ZeroWeightsAreIdentity) {
  std::mt19937_64 rng(1);
  const auto p = FusionParams::zeros(dims_of(16));
  for (int i = 0; i < 10; ++i) {
    const auto e = random_embedding(rng, 16);
    EXPECT_EQ(adaptor_forward(e, p), e);
  }
}

TEST(Adaptor, IdentityWeightsDoublePositiveInput) {
  auto p = FusionParams::zeros(dims_of(8));
  p[Block::kW1] = Eigen::MatrixXd::Identity(8, 8);
  p[Block::kW2] = Eigen::MatrixXd::Identity(8, 8);
  Eigen::VectorXd v = Eigen::VectorXd::LinSpaced(8, 0.5, 4.0);
  const auto out = adaptor_forward(Embedding(v), p);
  EXPECT_TRUE(out.values().isApprox(2.0 * v, 1e-15));
}

TEST(Adaptor, FiniteOnRandomParams) {
  std::mt19937_64 rng(2);
  for (std::uint64_t s = 1; s <= 10; ++s) {
    const auto p = FusionParams::init(dims_of(32), s);
    EXPECT_TRUE(adaptor_forward(random_embedding(rng, 32), p).values().allFinite());
  }
  EXPECT_THROW(adaptor_forward(random_embedding(rng, 16), FusionParams::zeros(dims_of(32))),
               InvariantError);
}

TEST(CrossAttention, SingleTokenIgnoresQuery) {
  std::mt19937_64 rng(3);
  const auto p = FusionParams::init(dims_of(16, 1), 4);
  const auto e = random_embedding(rng, 16);
  Eigen::MatrixXd att;
  const Eigen::VectorXd a = cross_attention_forward(e, random_attrs(rng), p, &att);
  const Eigen::VectorXd b = cross_attention_forward(e, random_attrs(rng), p);
  EXPECT_EQ(a, b);
  EXPECT_TRUE((att.array() == 1.0).all());
  // Every output is attr_head_j . (Wv token) + bias_j.
  const Eigen::VectorXd v = p[Block::kWv] * e.values();
  for (std::size_t j = 0; j < attr::kCount; ++j) {
    const auto r = static_cast<Eigen::Index>(j);
    EXPECT_NEAR(a[r], p[Block::kAttrHead].row(r).dot(v) + p[Block::kAttrBias](r, 0), 1e-12);
  }
}

TEST(CrossAttention, RowsSumToOne) {
  std::mt19937_64 rng(5);
  for (std::uint64_t s = 1; s <= 20; ++s) {
    auto p = FusionParams::init(dims_of(32, 8), s);
    Eigen::MatrixXd att;
    cross_attention_forward(random_embedding(rng, 32), random_attrs(rng), p, &att);
    ASSERT_EQ(att.rows(), 32);
    ASSERT_EQ(att.cols(), 8);
    for (Eigen::Index r = 0; r < att.rows(); ++r) EXPECT_NEAR(att.row(r).sum(), 1.0, 1e-9);
  }
  EXPECT_THROW(FusionParams::init(dims_of(30, 8), 1), InvariantError);
}

TEST(CrossAttention, ThreeTokenHandEvaluation) {
  // d = 6, three tokens of dimension 2, hand-chosen weights.
  auto p = FusionParams::zeros(dims_of(6, 3));
  Eigen::MatrixXd wq(2, 2), wk(2, 2), wv(2, 2);
  wq << 1, 0, 0.5, -1;
  wk << 0.2, 0.3, -0.4, 1;
  wv << 1, 2, 0, -1;
  p[Block::kWq] = wq;
  p[Block::kWk] = wk;
  p[Block::kWv] = wv;
  for (Eigen::Index j = 0; j < 32; ++j) {
    p[Block::kAttrEmbed](j, 0) = 0.1 * static_cast<double>(j % 5) - 0.2;
    p[Block::kAttrEmbed](j, 1) = 0.05 * static_cast<double>(j % 7);
    p[Block::kAttrHead](j, 0) = 1.0 - 0.03 * static_cast<double>(j);
    p[Block::kAttrHead](j, 1) = 0.5;
    p[Block::kAttrBias](j, 0) = 0.01 * static_cast<double>(j);
  }
  Eigen::VectorXd e(6);
  e << 1.0, -2.0, 0.5, 3.0, -1.5, 0.25;
  AttributeVector::Values av{};
  for (std::size_t j = 0; j < 32; ++j) av[j] = static_cast<double>(j % 4) / 3.0;
  const auto a1 = AttributeVector::prob(av);

  const Eigen::VectorXd got = cross_attention_forward(Embedding(e), a1, p);
  for (int j = 0; j < 32; ++j) {
    const Eigen::Vector2d query = av[static_cast<std::size_t>(j)] * Eigen::Vector2d(p[Block::kAttrEmbed].row(j).transpose());
    const Eigen::Vector2d q = wq * query;
    double s[3], m = -1e300;
    for (int t = 0; t < 3; ++t) {
      const Eigen::Vector2d k = wk * e.segment(2 * t, 2);
      s[t] = q.dot(k);
      m = std::max(m, s[t]);
    }
    double z = 0.0;
    for (double& x : s) z += (x = std::exp(x - m));
    Eigen::Vector2d out = Eigen::Vector2d::Zero();
    for (int t = 0; t < 3; ++t) out += (s[t] / z) * (wv * e.segment(2 * t, 2));
    const double expected = p[Block::kAttrHead].row(j).dot(out) + p[Block::kAttrBias](j, 0);
    EXPECT_NEAR(got[j], expected, 1e-9) << "attribute " << j;
  }
}

TEST(Predict, PreprocAttrWithZeroAdaptorMatchesAttentionAndAttrOnly) {
  std::mt19937_64 rng(6);
  auto p = FusionParams::init(dims_of(16, 4), 7);
  for (auto b : {Block::kW1, Block::kB1, Block::kW2, Block::kB2}) p[b].setZero();
  for (int i = 0; i < 10; ++i) {
    const auto e = random_embedding(rng, 16);
    const auto a = random_attrs(rng);
    const auto pre = predict_attributes(e, a, {StrategyKind::kPreprocAttr, 1}, p);
    const auto only = predict_attributes(e, a, {StrategyKind::kAttrOnly, 1}, p);
    const Eigen::VectorXd logits = cross_attention_forward(e, a, p);
    for (std::size_t j = 0; j < attr::kCount; ++j) {
      EXPECT_NEAR(pre.attributes[j], sigmoid(logits[static_cast<Eigen::Index>(j)]), 1e-12);
      EXPECT_EQ(pre.attributes[j], only.attributes[j]);
    }
    EXPECT_EQ(pre.embedding, e);
  }
}

TEST(Predict, EveryStrategyBoundedAndBatchConsistent) {
  std::mt19937_64 rng(8);
  const auto p = FusionParams::init(dims_of(16, 4), 9);
  std::vector<Embedding> es;
  std::vector<AttributeVector> as;
  for (int i = 0; i < 5; ++i) {
    es.push_back(random_embedding(rng, 16));
    as.push_back(random_attrs(rng));
  }
  for (const auto& s : FusionStrategy::all(2)) {
    const auto batch = predict_batch(es, as, s, p);
    ASSERT_EQ(batch.size(), es.size());
    for (std::size_t i = 0; i < es.size(); ++i) {
      const auto single = predict_attributes(es[i], as[i], s, p);
      for (std::size_t j = 0; j < attr::kCount; ++j) {
        EXPECT_GT(single.attributes[j], 0.0);
        EXPECT_LT(single.attributes[j], 1.0);
        EXPECT_NEAR(single.attributes[j], batch[i].attributes[j], 1e-12) << s.to_string();
      }
      EXPECT_EQ(single.embedding.dim(), 16u);
    }
  }
}

TEST(Predict, CrossFertilizeRoundsMatter) {
  std::mt19937_64 rng(10);
  for (std::uint64_t s = 1; s <= 100; ++s) {
    const auto p = FusionParams::init(dims_of(16, 4), s);
    const auto e = random_embedding(rng, 16);
    const auto a = random_attrs(rng);
    const auto one = predict_attributes(e, a, {StrategyKind::kCrossFertilize, 1}, p);
    const auto two = predict_attributes(e, a, {StrategyKind::kCrossFertilize, 2}, p);
    EXPECT_NE(one.logits, two.logits) << "seed " << s;
  }
}

TEST(Strategy, ParseAndValidate) {
  EXPECT_EQ(FusionStrategy::parse("preproc-attr"), (FusionStrategy{StrategyKind::kPreprocAttr, 1}));
  EXPECT_EQ(FusionStrategy::parse("cross-fertilize:3").rounds, 3);
  EXPECT_EQ(FusionStrategy::parse("self-enhance:2").to_string(), "self-enhance:2");
  EXPECT_ANY_THROW(FusionStrategy::parse("attr-only:2"));
  EXPECT_ANY_THROW(FusionStrategy::parse("cross-fertilize:0"));
  EXPECT_ANY_THROW(FusionStrategy::parse("nonsense"));
  EXPECT_EQ(FusionStrategy::all().size(), 6u);
  EXPECT_EQ(FusionStrategy{}.kind, StrategyKind::kPreprocAttr);
}

TEST(Loss, WeightedBceExamples) {
  std::vector<double> half(32, 0.5), target(32, 0.0), freq(32, 0.5);
  for (std::size_t j = 0; j < 32; j += 2) target[j] = 1.0;
  EXPECT_NEAR(weighted_bce_loss(half, target, freq, 1.0, true), std::log(2.0), 1e-12);
  EXPECT_LE(weighted_bce_loss(target, target, freq, 1.0, true), 1.1e-7);

  std::vector<double> ones(32, 1.0), rare(32, 0.1);
  EXPECT_NEAR(weighted_bce_loss(half, ones, rare, 1.0), std::exp(0.9) * std::log(2.0), 1e-9);
  EXPECT_NEAR(std::exp(0.9) * std::log(2.0), 1.70487, 1e-4);

  const auto [wp, wn] = bce_weights(0.1, 1.0, false);
  EXPECT_DOUBLE_EQ(wp, std::exp(0.9));
  EXPECT_DOUBLE_EQ(wn, std::exp(0.1));
  EXPECT_THROW(weighted_bce_loss(std::vector<double>(31, 0.5), target, freq, 1.0), InvariantError);
}

TEST(Loss, IdentityExamples) {
  const auto p4 = FusionParams::zeros(dims_of(8, 8, 4));
  const Embedding e(Eigen::VectorXd::Ones(8));
  EXPECT_NEAR(identity_loss(e, 2, p4), std::log(4.0), 1e-12);
  EXPECT_EQ(identity_loss(e, 0, FusionParams::zeros(dims_of(8, 8, 1))), 0.0);
  EXPECT_THROW(identity_loss(e, 4, p4), InvariantError);

  double prev = std::numeric_limits<double>::infinity();
  for (double margin : {1.0, 2.0, 4.0}) {
    auto p = FusionParams::zeros(dims_of(8, 8, 4));
    p[Block::kIdBias](1, 0) = margin;
    const double l = identity_loss(e, 1, p);
    EXPECT_LT(l, prev);
    EXPECT_GE(l, 0.0);
    prev = l;
  }
}

TEST(FuseForAssociation, DimensionsAndZeroAttributes) {
  std::mt19937_64 rng(11);
  EXPECT_EQ(fuse_for_association(random_embedding(rng, 512), AttributeVector()).dim(), 544u);
  EXPECT_EQ(fuse_for_association(random_embedding(rng, 16), AttributeVector()).dim(), 48u);
  const auto u = random_embedding(rng, 16);
  const auto v = random_embedding(rng, 16);
  EXPECT_NEAR(cosine_distance(fuse_for_association(u, AttributeVector()),
                              fuse_for_association(v, AttributeVector())),
              cosine_distance(u, v), 1e-12);
}

TEST(Params, SaveLoadRoundTrip) {
  const auto p = FusionParams::init(dims_of(16, 4, 3), 12);
  std::stringstream buf;
  p.save(buf);
  EXPECT_EQ(FusionParams::load(buf), p);
  std::stringstream junk("garbage");
  EXPECT_ANY_THROW(FusionParams::load(junk));
}

TEST(Train, StepZeroLeavesParamsAndFlatTrace) {
  const auto data = tiny_dataset(16);
  TrainConfig c;
  c.step = 0.0;
  c.iterations = 5;
  c.tokens = 4;
  c.batch_size = static_cast<int>(data.size());
  const auto a = train(data, c, FusionStrategy{});
  const auto b = train(data, c, FusionStrategy{});
  EXPECT_EQ(a.params, b.params);
  for (const auto& pt : a.trace) EXPECT_EQ(pt.total, a.trace.front().total);
}

TEST(Train, DeterministicAndDecreasing) {
  const auto data = tiny_dataset(16, 60);
  TrainConfig c;
  c.iterations = 200;
  c.tokens = 4;
  c.step = 0.1;
  const auto a = train(data, c, FusionStrategy{});
  const auto b = train(data, c, FusionStrategy{});
  EXPECT_EQ(a.trace, b.trace);
  EXPECT_EQ(a.params, b.params);
  double head = 0.0, tail = 0.0;
  for (int i = 0; i < 10; ++i) {
    head += a.trace[static_cast<std::size_t>(i)].total;
    tail += a.trace[a.trace.size() - 1 - static_cast<std::size_t>(i)].total;
  }
  EXPECT_LT(tail, head);
  EXPECT_THROW(train({}, c, FusionStrategy{}), InvariantError);
}

TEST(Train, ConfigValidation) {
  TrainConfig c;
  c.sigma = 0.0;
  EXPECT_ANY_THROW(c.validate());
  c = TrainConfig{};
  c.lambda_id = -1.0;
  EXPECT_ANY_THROW(c.validate());
  c = TrainConfig{};
  c.step = -0.1;
  EXPECT_ANY_THROW(c.validate());
}

TEST(GradCheck, LinearToyAndFullPath) {
  const auto data = tiny_dataset(16);
  ASSERT_FALSE(data.empty());
  const std::vector<TrainSample> one(data.begin(), data.begin() + 1);
  auto toy = FusionParams::init(dims_of(16, 1, 4), 3);
  const auto r1 = grad_check(toy, one, {StrategyKind::kAttrOnly, 1}, TrainConfig{});
  EXPECT_LE(r1.max_rel_error, 1e-6) << r1.worst;
  const auto full = FusionParams::init(dims_of(16, 4, 4), 3);
  const auto r2 = grad_check(full, one, FusionStrategy{}, TrainConfig{});
  EXPECT_LE(r2.max_rel_error, 1e-4) << r2.worst;
  EXPECT_GT(r2.checked, 0u);
}

TEST(GradCheck, SingleCoordinateTaylor) {
  const auto data = tiny_dataset(16);
  const std::vector<TrainSample> batch(data.begin(), data.begin() + 4);
  auto p = FusionParams::init(dims_of(16, 4, 4), 5);
  TrainConfig c;
  c.freeze_embedding = false;
  const auto freq = positive_frequency(batch);
  const auto base = loss_and_gradient(p, batch, FusionStrategy{}, freq, c);
  const double eps = 1e-6;
  const double g = base.grad[static_cast<std::size_t>(Block::kWq)](1, 0);
  p[Block::kWq](1, 0) += eps;
  const auto moved = loss_and_gradient(p, batch, FusionStrategy{}, freq, c);
  EXPECT_NEAR(moved.total - base.total, g * eps, 1e-9);
}

TEST(Metrics, PositiveFrequencyAndAccuracy) {
  const auto data = tiny_dataset(16);
  const auto freq = positive_frequency(data);
  for (double f : freq) {
    EXPECT_GE(f, 0.0);
    EXPECT_LE(f, 1.0);
  }
  std::vector<Prediction> preds;
  std::vector<AttributeVector> targets;
  for (const auto& s : data) {
    Prediction p;
    p.attributes = s.target.as_prob();
    preds.push_back(p);
    targets.push_back(s.target);
  }
  for (double a : attribute_accuracy(preds, targets)) EXPECT_EQ(a, 1.0);
}

}  // namespace
}  // namespace attmot::fusion
