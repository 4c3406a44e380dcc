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

// Desk-scale pedestrian sequence generator.
//
// Each identity gets a binary attribute card sampled from a group-structured
// prior and a unit-norm appearance latent that partly encodes those
// attributes. Trajectories are scripted in 2D with an explicit depth order
// (lower identity index is in front). Observations degrade with occlusion:
// the embedding noise grows as sigma * (1 + embed_occ_gain * occ) and mixes in
// the occluder's appearance, while attribute bits flip with probability
// min(0.5, attr_flip_base + attr_flip_occ_gain * occ).

#ifndef ATTMOT_SYNTHGEN_H_
#define ATTMOT_SYNTHGEN_H_

#include <array>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "attmot/fusion.h"
#include "attmot/keyvalue.h"
#include "attmot/types.h"

namespace attmot::synth {

using Rng = std::mt19937_64;

// Per-group attribute probabilities. The color groups draw one primary color
// from the categorical and add a second, distinct color with probability
// `extra_color`.
struct AttributePrior {
  double male = 0.5;
  std::array<double, 3> body = {0.25, 0.5, 0.25};
  std::array<double, 3> hair = {0.1, 0.6, 0.3};
  double long_sleeve = 0.5;
  double upper_long = 0.3;
  double skirt = 0.2;
  double lower_long = 0.7;
  double backpack = 0.25;
  double hat = 0.15;
  double boots = 0.15;
  std::array<double, 9> upper_color = {0.30, 0.15, 0.12, 0.08, 0.06,
                                       0.12, 0.05, 0.06, 0.06};
  std::array<double, 9> lower_color = {0.35, 0.05, 0.15, 0.03, 0.04,
                                       0.25, 0.02, 0.08, 0.03};
  double extra_color = 0.2;

  // Equal weights in every categorical group, 0.5 for every Bernoulli slot,
  // no extra colors.
  static AttributePrior uniform();
  // Throws InvariantError on probabilities outside [0,1] or categoricals that
  // do not sum to 1.
  void validate() const;
  // Marginal probability that slot `index` is set (exact for every slot
  // outside the color groups).
  double marginal(std::size_t index) const;
};

enum class TrajectoryKind { kLinear, kCrossingPair, kLoiter };

struct WorldConfig {
  int n_sequences = 1;
  int n_identities = 15;
  int n_frames = 120;
  double image_width = 1920.0;
  double image_height = 1080.0;
  double min_height = 110.0;
  double max_height = 190.0;

  // Relative weights of the trajectory kinds.
  double weight_linear = 0.3;
  double weight_crossing = 0.5;
  double weight_loiter = 0.2;

  // Detection noise. Miss probability is min(1, miss_base + miss_occ_gain *
  // occ); false positives per frame are Poisson(fp_rate).
  double miss_base = 0.02;
  double miss_occ_gain = 0.3;
  double box_jitter = 2.0;
  double fp_rate = 0.3;

  // Appearance model.
  int embed_dim = 512;
  double attribute_share = 0.1;  // squared weight of the attribute part
  // Identity-specific directions come from a shared subspace of this rank,
  // so look-alike identities exist. 0 draws them from the full space.
  int appearance_rank = 3;
  double embed_noise = 0.05;     // per-dimension sigma at occ = 0
  double embed_occ_gain = 6.0;
  double occluder_mix = 0.6;      // weight of the occluder latent at occ = 1
  std::uint64_t appearance_seed = 7;

  // Attribute observation model.
  double attr_flip_base = 0.02;
  double attr_flip_occ_gain = 0.05;

  AttributePrior prior;
  std::uint64_t seed = 1;

  // Zero noise everywhere: no misses, no jitter, no false positives, exact
  // features.
  static WorldConfig noiseless();
  // Default noise on a 960x540 frame: same people, about a third of the
  // boxes more than 30% occluded.
  static WorldConfig occlusion_heavy();

  void validate() const;
  KeyValueDoc to_doc() const;
  // Missing keys keep their defaults; unknown keys are rejected.
  static WorldConfig from_doc(const KeyValueDoc& doc);
  static WorldConfig load(const std::string& path);
};

struct IdentityCard {
  int identity = 0;
  AttributeVector attributes;
  Embedding latent;  // unit norm
  TrajectoryKind kind = TrajectoryKind::kLinear;
  // Full (unclipped) box per frame; index 0 is frame 1.
  std::vector<BBox> path;
};

// Per-GT-row occlusion bookkeeping, parallel to SequenceBundle::gt.
struct OcclusionInfo {
  double occlusion = 0.0;
  int occluder = 0;  // identity of the front box covering most, 0 if none
};

struct SequenceBundle {
  std::string name;
  int n_frames = 0;
  double image_width = 0.0;
  double image_height = 0.0;
  int embed_dim = 0;
  std::vector<IdentityCard> identities;
  std::vector<GtEntry> gt;  // sorted by frame, then identity
  std::vector<OcclusionInfo> occlusion;
  // Filled by observe_sequence: detections sorted by frame, plus the
  // identity that produced each one (0 for false positives) and its
  // occlusion.
  std::vector<Detection> detections;
  std::vector<int> det_source;
  std::vector<double> det_occlusion;

  const IdentityCard& card(int identity) const;
  // Index range [first, last) of the gt rows of `frame`.
  std::pair<std::size_t, std::size_t> gt_range(int frame) const;
};

// Fixed attribute-to-appearance mixing directions (d x 32).
Eigen::MatrixXd appearance_basis(int dim, std::uint64_t appearance_seed);
// Fixed identity subspace (d x rank); empty for rank 0.
Eigen::MatrixXd identity_basis(int dim, int rank, std::uint64_t appearance_seed);

AttributeVector sample_attributes(Rng& rng, const AttributePrior& prior);
// Attributes, plus a unit latent built from an identity-specific direction and
// the attribute direction basis * (2a - 1). The identity direction is drawn
// from `id_basis` when it is non-empty.
IdentityCard sample_identity(Rng& rng, const WorldConfig& config,
                             const Eigen::MatrixXd& basis, int identity,
                             const Eigen::MatrixXd& id_basis = {});

// Ground truth only. Deterministic given config.seed.
SequenceBundle simulate_sequence(const WorldConfig& config,
                                 std::string name = "seq-0001");

// Effective per-dimension embedding noise at occlusion `occ`.
double embedding_sigma(const WorldConfig& config, double occ);
// Effective attribute flip probability at occlusion `occ`.
double attribute_flip_probability(const WorldConfig& config, double occ);
double miss_probability(const WorldConfig& config, double occ);

// Pre-normalisation observed embedding:
// (1 - m) * latent + m * occluder + N(0, sigma_eff^2 I), m = occluder_mix*occ.
Eigen::VectorXd raw_observed_embedding(Rng& rng, const WorldConfig& config,
                                       const Eigen::VectorXd& latent,
                                       const Eigen::VectorXd* occluder,
                                       double occ);

struct Observation {
  Detection detection;
  int source = 0;  // 0 for false positives
  double occlusion = 0.0;
};

// Detections of one frame. Each frame draws from its own generator seeded by
// (config.seed, frame), so frames can be produced in any order.
std::vector<Observation> observe_frame_with_truth(const SequenceBundle& bundle,
                                                  int frame,
                                                  const WorldConfig& config);
std::vector<Detection> observe_frame(const SequenceBundle& bundle, int frame,
                                     const WorldConfig& config);
// Fills bundle.detections / det_source / det_occlusion for every frame.
void observe_sequence(SequenceBundle& bundle, const WorldConfig& config);

// Seed of sequence `index` (0-based) of a benchmark.
std::uint64_t sequence_seed(std::uint64_t base_seed, int index);

// Writes gt.txt, det.txt, attrs.txt, features.bin, meta.jsonl and
// seqinfo.cfg into `dir`.
void write_sequence(const SequenceBundle& bundle,
                    const std::filesystem::path& dir);

// Generates config.n_sequences observed sequences into out_dir/seq-NNNN and
// copies the world config to out_dir/world.cfg. Validates before writing.
std::vector<std::filesystem::path> generate_benchmark(
    const WorldConfig& config, const std::filesystem::path& out_dir);

// Generates the same sequences in memory.
std::vector<SequenceBundle> generate_bundles(const WorldConfig& config);

// Training crops from the true-positive detections of an observed bundle.
// Identity labels are identity_offset + identity - 1.
std::vector<fusion::TrainSample> training_samples(const SequenceBundle& bundle,
                                                  int identity_offset = 0);
// Same from a sequence directory written by write_sequence (needs det.txt,
// features.bin, attrs.txt and meta.jsonl).
std::vector<fusion::TrainSample> load_training_samples(const std::filesystem::path& dir,
                                                       int identity_offset = 0);
// Crops of every seq-* directory under `bench_dir` in name order, with
// identity labels made disjoint across sequences. Stops after `limit`
// samples when limit > 0.
std::vector<fusion::TrainSample> load_benchmark_samples(const std::filesystem::path& bench_dir,
                                                        std::size_t limit = 0);
// Sorted seq-* subdirectories of a benchmark.
std::vector<std::filesystem::path> sequence_dirs(const std::filesystem::path& bench_dir);

}  // namespace attmot::synth

#endif  // ATTMOT_SYNTHGEN_H_
