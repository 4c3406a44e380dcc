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

#include <map>
#include <set>

#include <gtest/gtest.h>

#include "attmot/distances.h"
#include "attmot/metrics.h"
#include "attmot/synthgen.h"
#include "attmot/tracker.h"

namespace attmot::assoc {
namespace {

AttributeVector attrs_with(std::initializer_list<std::size_t> on) {
  AttributeVector::Values v{};
  v[attr::kBodyBegin] = 1.0;
  v[attr::kHairBegin] = 1.0;
  v[attr::kUpperColorBegin] = 1.0;
  v[attr::kLowerColorBegin] = 1.0;
  for (auto j : on) v[j] = 1.0;
  return AttributeVector::binary(v).as_prob();
}

Detection det(int frame, BBox box, Eigen::VectorXd e, AttributeVector a) {
  Detection d;
  d.frame = frame;
  d.box = box;
  d.embedding = Embedding(std::move(e));
  d.attr_obs = a;
  return d;
}

Eigen::VectorXd vec(double a, double b, double c) {
  Eigen::VectorXd v(3);
  v << a, b, c;
  return v;
}

Track track_with(int id, BBox box, Eigen::VectorXd feature, AttributeVector a) {
  Track t;
  t.identity = id;
  t.state = kalman_init(box);
  t.gallery.push_back(feature.normalized());
  t.attr_estimate = a;
  return t;
}

struct Fixture {
  std::vector<Track> tracks;
  std::vector<Detection> dets;
};

Fixture two_by_two() {
  Fixture f;
  f.tracks.push_back(track_with(1, {0, 0, 10, 20}, vec(1, 0, 0), attrs_with({0})));
  f.tracks.push_back(track_with(2, {30, 0, 10, 20}, vec(0, 1, 0), attrs_with({11})));
  f.dets.push_back(det(1, {1, 0, 10, 20}, vec(1, 1, 0), attrs_with({0, 12})));
  f.dets.push_back(det(1, {31, 0, 10, 20}, vec(0, 0, 1), attrs_with({11})));
  return f;
}

TEST(CostMatrix, BinarizedAttributes) {
  auto f = two_by_two();
  auto soft = f.tracks[0].attr_estimate.values();
  soft[0] = 0.6;
  soft[5] = 0.3;
  f.tracks[0].attr_estimate = AttributeVector::prob(soft);
  AssocConfig c;
  c.mode = CostMode::kAttr;
  const auto feats = detection_features(f.dets, c, nullptr);
  EXPECT_NEAR(mode_cost(f.tracks, f.dets, feats, CostMode::kAttr, c)(0, 0), 1.7 / 32.0, 1e-12);
  c.binarize_attributes = true;
  EXPECT_NEAR(mode_cost(f.tracks, f.dets, feats, CostMode::kAttr, c)(0, 0), 1.0 / 32.0, 1e-12);
}

TEST(CostMatrix, HandComputed) {
  const auto f = two_by_two();
  AssocConfig c;
  c.mode = CostMode::kEmbed;
  const auto feats = detection_features(f.dets, c, nullptr);
  const Eigen::MatrixXd embed = mode_cost(f.tracks, f.dets, feats, CostMode::kEmbed, c);
  const double r = 1.0 - 1.0 / std::sqrt(2.0);
  EXPECT_NEAR(embed(0, 0), r, 1e-9);
  EXPECT_NEAR(embed(0, 1), 1.0, 1e-9);
  EXPECT_NEAR(embed(1, 0), r, 1e-9);
  EXPECT_NEAR(embed(1, 1), 1.0, 1e-9);

  const Eigen::MatrixXd at = mode_cost(f.tracks, f.dets, feats, CostMode::kAttr, c);
  EXPECT_NEAR(at(0, 0), 1.0 / 32.0, 1e-12);
  EXPECT_NEAR(at(0, 1), 2.0 / 32.0, 1e-12);
  EXPECT_NEAR(at(1, 0), 3.0 / 32.0, 1e-12);
  EXPECT_NEAR(at(1, 1), 0.0, 1e-12);

  const Eigen::MatrixXd io = mode_cost(f.tracks, f.dets, feats, CostMode::kIoU, c);
  EXPECT_NEAR(io(0, 0), 1.0 - iou({0, 0, 10, 20}, {1, 0, 10, 20}), 1e-9);
  EXPECT_NEAR(io(0, 1), 1.0, 1e-12);
}

TEST(CostMatrix, EmbedPlusAttrIsExactSum) {
  const auto f = two_by_two();
  AssocConfig c;
  const auto feats = detection_features(f.dets, c, nullptr);
  const Eigen::MatrixXd e = mode_cost(f.tracks, f.dets, feats, CostMode::kEmbed, c);
  const Eigen::MatrixXd a = mode_cost(f.tracks, f.dets, feats, CostMode::kAttr, c);
  const Eigen::MatrixXd sum = mode_cost(f.tracks, f.dets, feats, CostMode::kEmbedPlusAttr, c);
  EXPECT_TRUE((sum.array() == (e + a).array()).all());

  c.lambda_e = 0.7;
  c.lambda_a = 2.5;
  const Eigen::MatrixXd w = mode_cost(f.tracks, f.dets, feats, CostMode::kEmbedPlusAttr, c);
  EXPECT_TRUE((w.array() == (0.7 * e + 2.5 * a).array()).all());

  c.lambda_e = 1.0;
  c.lambda_a = 0.0;
  const Eigen::MatrixXd only = mode_cost(f.tracks, f.dets, feats, CostMode::kEmbedPlusAttr, c);
  EXPECT_TRUE((only.array() == e.array()).all());
}

TEST(CostMatrix, GateMasksFarDetections) {
  auto f = two_by_two();
  f.dets.push_back(det(1, {500, 400, 10, 20}, vec(1, 0, 0), attrs_with({0})));
  AssocConfig c;
  const auto cm = build_cost_matrix(f.tracks, f.dets, c);
  EXPECT_FALSE(cm.infeasible(0, 0));
  EXPECT_TRUE(cm.infeasible(0, 2));
  EXPECT_TRUE(cm.infeasible(1, 2));
}

TEST(CostMatrix, PredictedAttributesNeedParams) {
  const auto f = two_by_two();
  AssocConfig c;
  c.mode = CostMode::kEmbedPlusAttr;
  c.attr_source = AttrSource::kPredicted;
  EXPECT_THROW(build_cost_matrix(f.tracks, f.dets, c), ConfigError);
}

TEST(Tracker, RepeatedDetectionConfirmsOnce) {
  AssocConfig c;
  TrackerState s;
  std::set<int> ids;
  for (int frame = 1; frame <= c.n_init + 3; ++frame) {
    const std::vector<Detection> d = {det(frame, {100, 100, 40, 80}, vec(1, 0, 0), attrs_with({}))};
    const auto out = tracker_step(s, d, c);
    for (const auto& o : out) ids.insert(o.identity);
    if (frame < c.n_init) {
      EXPECT_TRUE(out.empty());
    }
  }
  EXPECT_EQ(ids, std::set<int>{1});
  ASSERT_EQ(s.tracks.size(), 1u);
  EXPECT_EQ(s.tracks[0].status, TrackStatus::kConfirmed);
}

TEST(Tracker, EmptyFrameAgesTracks) {
  AssocConfig c;
  TrackerState s;
  for (int frame = 1; frame <= 4; ++frame) {
    const std::vector<Detection> d = {det(frame, {100, 100, 40, 80}, vec(1, 0, 0), attrs_with({}))};
    tracker_step(s, d, c);
  }
  auto coasting = s;
  EXPECT_TRUE(tracker_step(s, {}, c).empty());
  EXPECT_EQ(s.tracks[0].time_since_update, 1);
  c.emit_coasting = true;
  EXPECT_EQ(tracker_step(coasting, {}, c).size(), 1u);
}

TEST(Tracker, TracksExpireAfterMaxAge) {
  AssocConfig c;
  c.max_age = 2;
  TrackerState s;
  for (int frame = 1; frame <= 4; ++frame) {
    tracker_step(s, std::vector<Detection>{det(frame, {100, 100, 40, 80}, vec(1, 0, 0), attrs_with({}))}, c);
  }
  for (int i = 0; i < 3; ++i) tracker_step(s, {}, c);
  EXPECT_TRUE(s.tracks.empty());
  const auto out = tracker_step(s, std::vector<Detection>{det(8, {100, 100, 40, 80}, vec(1, 0, 0), attrs_with({}))}, c);
  EXPECT_EQ(s.tracks.at(0).identity, 2);  // identities are not recycled
  EXPECT_TRUE(out.empty());
}

TEST(Tracker, RejectsWrongFrame) {
  TrackerState s;
  EXPECT_THROW(tracker_step(s, std::vector<Detection>{det(3, {0, 0, 5, 5}, vec(1, 0, 0), attrs_with({}))}, AssocConfig{}),
               InvariantError);
}

TEST(Tracker, AttrModeKeepsIdentitiesThroughCrossing) {
  // Two people walk through each other along the same row; boxes and
  // embeddings are useless at the crossing, attributes are not.
  std::vector<GtEntry> gt;
  std::vector<Detection> dets;
  for (int f = 1; f <= 10; ++f) {
    const double xa = 100.0 + 12.0 * f;
    const double xb = 232.0 - 12.0 * f;
    gt.push_back({f, 1, {xa, 100, 40, 80}, 1.0, true});
    gt.push_back({f, 2, {xb, 100, 40, 80}, 1.0, true});
    dets.push_back(det(f, {xa, 100, 40, 80}, vec(1, 0, 0), attrs_with({0, 11, 12})));
    dets.push_back(det(f, {xb, 100, 40, 80}, vec(1, 0, 0), attrs_with({7, 8, 9})));
  }
  AssocConfig c;
  c.mode = CostMode::kAttr;
  c.n_init = 1;
  const auto out = run_sequence({"cross", 10, dets}, c);
  const auto m = metrics::clear_metrics(gt, out);
  EXPECT_EQ(m.idsw, 0);
  EXPECT_EQ(m.fn, 0);
}

TEST(RunSequence, EmptyAndDeterministic) {
  AssocConfig c;
  EXPECT_TRUE(run_sequence({"empty", 5, {}}, c).empty());
  synth::WorldConfig w;
  w.n_frames = 60;
  w.embed_dim = 32;
  const auto b = synth::generate_bundles(w).front();
  const SequenceInput in{b.name, b.n_frames, b.detections};
  for (auto mode : {CostMode::kIoU, CostMode::kEmbed, CostMode::kAttr, CostMode::kEmbedPlusAttr,
                    CostMode::kConcatFeature}) {
    c.mode = mode;
    const auto a = run_sequence(in, c);
    EXPECT_EQ(a, run_sequence(in, c)) << to_string(mode);
    std::map<int, std::set<int>> per_frame;
    for (const auto& o : a) EXPECT_TRUE(per_frame[o.frame].insert(o.identity).second);
  }
}

TEST(RunSequence, NoiselessSinglePedestrianIsPerfect) {
  auto w = synth::WorldConfig::noiseless();
  w.n_identities = 1;
  w.n_frames = 80;
  w.embed_dim = 32;
  const auto b = synth::generate_bundles(w).front();
  AssocConfig c;
  const auto out = run_sequence({b.name, b.n_frames, b.detections}, c);
  const auto m = metrics::clear_metrics(b.gt, out);
  EXPECT_EQ(m.mota(), 1.0);
  EXPECT_EQ(m.idsw, 0);
}

TEST(AssocConfig, DocRoundTripAndValidation) {
  AssocConfig c;
  c.mode = CostMode::kConcatFeature;
  c.lambda_a = 0.25;
  c.attr_source = AttrSource::kPredicted;
  const auto back = AssocConfig::from_doc(c.to_doc());
  EXPECT_EQ(back.mode, c.mode);
  EXPECT_EQ(back.lambda_a, 0.25);
  EXPECT_EQ(back.attr_source, AttrSource::kPredicted);
  c = AssocConfig{};
  c.embed_threshold = 0.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = AssocConfig{};
  c.mode = CostMode::kEmbedPlusAttr;
  c.lambda_e = 0.0;
  c.lambda_a = 0.0;
  EXPECT_THROW(c.validate(), ConfigError);
  EXPECT_EQ(parse_cost_mode("embed+attr"), CostMode::kEmbedPlusAttr);
  EXPECT_THROW(parse_cost_mode("magic"), ConfigError);
}

}  // namespace
}  // namespace attmot::assoc
