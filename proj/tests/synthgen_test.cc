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

#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "attmot/distances.h"
#include "attmot/synthgen.h"

namespace attmot::synth {
namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

WorldConfig small_world() {
  WorldConfig w;
  w.n_frames = 40;
  w.n_identities = 6;
  w.embed_dim = 16;
  w.appearance_rank = 3;
  return w;
}

TEST(SampleAttributes, DegeneratePrior) {
  AttributePrior p;
  p.body = {1.0, 0.0, 0.0};
  Rng rng(1);
  for (int i = 0; i < 200; ++i) {
    const auto a = sample_attributes(rng, p);
    EXPECT_EQ(a[attr::kBodyBegin], 1.0);
    EXPECT_EQ(a[attr::kBodyBegin + 1], 0.0);
    EXPECT_EQ(a[attr::kBodyBegin + 2], 0.0);
  }
}

TEST(SampleAttributes, UniformPriorFrequencies) {
  const auto p = AttributePrior::uniform();
  Rng rng(2);
  const int n = 10000;
  std::array<double, attr::kCount> counts{};
  for (int i = 0; i < n; ++i) {
    const auto a = sample_attributes(rng, p);
    EXPECT_EQ(AttributeVector::binary_violation(a.values()), "");
    for (std::size_t j = 0; j < attr::kCount; ++j) counts[j] += a[j];
  }
  for (std::size_t j = attr::kBodyBegin; j < attr::kHairBegin + attr::kHairCount; ++j) {
    EXPECT_NEAR(counts[j] / n, 1.0 / 3.0, 0.02) << attr::slot_name(j);
  }
  for (std::size_t j = attr::kUpperColorBegin; j < attr::kCount; ++j) {
    EXPECT_NEAR(counts[j] / n, 1.0 / 9.0, 0.02) << attr::slot_name(j);
  }
  EXPECT_NEAR(counts[attr::kGender] / n, 0.5, 0.02);
  for (std::size_t j = 0; j < attr::kCount; ++j) {
    EXPECT_NEAR(counts[j] / n, p.marginal(j), 0.02) << attr::slot_name(j);
  }
}

TEST(SampleIdentity, DeterministicAndUnitLatent) {
  const auto w = small_world();
  const auto basis = appearance_basis(w.embed_dim, w.appearance_seed);
  Rng a(9), b(9);
  const auto x = sample_identity(a, w, basis, 1);
  const auto y = sample_identity(b, w, basis, 1);
  EXPECT_EQ(x.attributes, y.attributes);
  EXPECT_EQ(x.latent, y.latent);
  EXPECT_NEAR(x.latent.norm(), 1.0, 1e-12);
}

TEST(Prior, Validation) {
  AttributePrior p;
  p.hair = {0.5, 0.5, 0.5};
  EXPECT_THROW(p.validate(), InvariantError);
  p = AttributePrior{};
  p.hat = 1.5;
  EXPECT_THROW(p.validate(), InvariantError);
}

TEST(Simulate, LinearSingleIdentityMonotone) {
  auto w = small_world();
  w.n_identities = 1;
  w.weight_linear = 1.0;
  w.weight_crossing = 0.0;
  w.weight_loiter = 0.0;
  const auto b = simulate_sequence(w);
  ASSERT_GE(b.gt.size(), 2u);
  const double dir = b.gt.back().box.center_x() - b.gt.front().box.center_x();
  for (std::size_t i = 1; i < b.gt.size(); ++i) {
    EXPECT_EQ(b.gt[i].frame, b.gt[i - 1].frame + 1);
    const double step = b.gt[i].box.center_x() - b.gt[i - 1].box.center_x();
    EXPECT_GE(step * dir, 0.0);
  }
}

TEST(Simulate, CrossingPairOccludes) {
  auto w = small_world();
  w.n_identities = 2;
  w.weight_linear = 0.0;
  w.weight_crossing = 1.0;
  w.weight_loiter = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    w.seed = seed;
    const auto b = simulate_sequence(w);
    double worst = 0.0;
    for (std::size_t i = 0; i < b.gt.size(); ++i) {
      if (b.gt[i].identity == 2) worst = std::max(worst, b.occlusion[i].occlusion);
      if (b.gt[i].identity == 1) {
        EXPECT_EQ(b.occlusion[i].occlusion, 0.0);
      }
    }
    EXPECT_GT(worst, 0.5) << "seed " << seed;
  }
}

TEST(Simulate, BoxesInsideImageAndDeterministic) {
  auto w = small_world();
  w.n_frames = 120;
  const auto a = simulate_sequence(w);
  const auto b = simulate_sequence(w);
  EXPECT_EQ(a.gt, b.gt);
  for (const auto& g : a.gt) {
    EXPECT_TRUE(g.box.valid());
    EXPECT_GE(g.box.left, 0.0);
    EXPECT_GE(g.box.top, 0.0);
    EXPECT_LE(g.box.right(), w.image_width + 1e-9);
    EXPECT_LE(g.box.bottom(), w.image_height + 1e-9);
  }
  auto copy = a;
  observe_sequence(copy, w);
  for (const auto& d : copy.detections) {
    EXPECT_GE(d.box.left, 0.0);
    EXPECT_LE(d.box.right(), w.image_width + 1e-9);
  }
}

TEST(Observe, NoiselessLimit) {
  auto w = WorldConfig::noiseless();
  w.n_identities = 1;
  w.n_frames = 10;
  w.embed_dim = 16;
  const auto b = simulate_sequence(w);
  for (int f = 1; f <= w.n_frames; ++f) {
    const auto obs = observe_frame_with_truth(b, f, w);
    const auto [lo, hi] = b.gt_range(f);
    ASSERT_EQ(obs.size(), hi - lo);
    for (std::size_t k = 0; k < obs.size(); ++k) {
      const auto& g = b.gt[lo + k];
      EXPECT_EQ(obs[k].detection.box, g.box);
      EXPECT_NEAR(cosine_distance(obs[k].detection.embedding, b.card(g.identity).latent), 0.0, 1e-12);
      EXPECT_EQ(obs[k].detection.attr_obs.values(), b.card(g.identity).attributes.values());
    }
  }
}

TEST(Observe, NoFlipsWithoutAttributeNoise) {
  auto w = small_world();
  w.attr_flip_base = 0.0;
  w.attr_flip_occ_gain = 0.0;
  auto b = simulate_sequence(w);
  observe_sequence(b, w);
  for (std::size_t i = 0; i < b.detections.size(); ++i) {
    if (b.det_source[i] == 0) continue;
    EXPECT_EQ(b.detections[i].attr_obs.values(), b.card(b.det_source[i]).attributes.values());
  }
}

TEST(Observe, NoiseNormAtFullOcclusion) {
  WorldConfig w;
  w.embed_dim = 128;
  w.embed_noise = 0.1;
  w.embed_occ_gain = 10.0;
  w.occluder_mix = 0.0;
  EXPECT_DOUBLE_EQ(embedding_sigma(w, 1.0), 1.1);
  const Eigen::VectorXd latent = Eigen::VectorXd::Unit(128, 0);
  Rng rng(5);
  double total = 0.0;
  const int draws = 1000;
  for (int i = 0; i < draws; ++i) {
    total += (raw_observed_embedding(rng, w, latent, nullptr, 1.0) - latent).norm();
  }
  const double expected = std::sqrt(128.0) * 1.1;
  EXPECT_NEAR(total / draws, expected, 0.1 * expected);
}

TEST(Observe, AttributesMoreRobustThanEmbeddingsUnderOcclusion) {
  WorldConfig w;
  w.n_sequences = 3;
  double attr_sum = 0.0, embed_sum = 0.0;
  int n = 0;
  for (const auto& b : generate_bundles(w)) {
    for (std::size_t i = 0; i < b.detections.size(); ++i) {
      if (b.det_source[i] == 0 || b.det_occlusion[i] < 0.5) continue;
      const auto& card = b.card(b.det_source[i]);
      attr_sum += attribute_distance(b.detections[i].attr_obs, card.attributes.as_prob());
      embed_sum += cosine_distance(b.detections[i].embedding, card.latent);
      ++n;
    }
  }
  ASSERT_GT(n, 20);
  EXPECT_LT(attr_sum / n, 0.5 * embed_sum / n);
}

TEST(Observe, FrameOrderIndependent) {
  auto w = small_world();
  const auto b = simulate_sequence(w);
  const auto late_first = observe_frame(b, 7, w);
  observe_frame(b, 3, w);
  const auto again = observe_frame(b, 7, w);
  ASSERT_EQ(late_first.size(), again.size());
  for (std::size_t i = 0; i < again.size(); ++i) {
    EXPECT_EQ(late_first[i].box, again[i].box);
    EXPECT_EQ(late_first[i].embedding, again[i].embedding);
  }
}

TEST(WorldConfig, ValidationAndRoundTrip) {
  WorldConfig w;
  w.n_frames = 0;
  EXPECT_ANY_THROW(w.validate());
  w = WorldConfig{};
  w.miss_base = 1.5;
  EXPECT_ANY_THROW(w.validate());
  w = WorldConfig::occlusion_heavy();
  w.seed = 77;
  const auto back = WorldConfig::from_doc(w.to_doc());
  std::ostringstream a, b;
  w.to_doc().write(a);
  back.to_doc().write(b);
  EXPECT_EQ(a.str(), b.str());
  KeyValueDoc unknown("world", 1);
  unknown.set("no_such_key", "1");
  EXPECT_THROW(WorldConfig::from_doc(unknown), ConfigError);
}

TEST(Benchmark, FilesAndDeterminism) {
  const auto root = std::filesystem::temp_directory_path() / "attmot-synthgen-test";
  std::filesystem::remove_all(root);
  auto w = small_world();
  w.n_sequences = 2;
  const auto dirs = generate_benchmark(w, root / "a");
  ASSERT_EQ(dirs.size(), 2u);
  generate_benchmark(w, root / "b");
  for (const char* f : {"gt.txt", "det.txt", "attrs.txt", "features.bin", "meta.jsonl", "seqinfo.cfg"}) {
    const auto pa = dirs[0] / f;
    ASSERT_TRUE(std::filesystem::exists(pa)) << f;
    EXPECT_EQ(slurp(pa), slurp(root / "b" / dirs[0].filename() / f)) << f;
  }
  EXPECT_EQ(sequence_dirs(root / "a"), dirs);

  auto bad = w;
  bad.n_frames = 0;
  EXPECT_ANY_THROW(generate_benchmark(bad, root / "c"));
  EXPECT_FALSE(std::filesystem::exists(root / "c" / "seq-0001"));

  const auto from_disk = load_training_samples(dirs[0]);
  const auto bundles = generate_bundles(w);
  const auto in_memory = training_samples(bundles[0]);
  ASSERT_EQ(from_disk.size(), in_memory.size());
  for (std::size_t i = 0; i < from_disk.size(); ++i) {
    EXPECT_EQ(from_disk[i].identity, in_memory[i].identity);
    EXPECT_EQ(from_disk[i].target, in_memory[i].target);
  }
  const auto all = load_benchmark_samples(root / "a");
  EXPECT_GT(all.size(), from_disk.size());
  EXPECT_EQ(load_benchmark_samples(root / "a", 10).size(), 10u);
  std::filesystem::remove_all(root);
}

}  // namespace
}  // namespace attmot::synth
