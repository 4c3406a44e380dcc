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

// Tracking-by-detection: Kalman prediction, mode-dependent association cost,
// one-stage optimal assignment and the track lifecycle.

#ifndef ATTMOT_TRACKER_H_
#define ATTMOT_TRACKER_H_

#include <deque>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "attmot/assignment.h"
#include "attmot/fusion.h"
#include "attmot/kalman.h"
#include "attmot/keyvalue.h"
#include "attmot/types.h"

namespace attmot::assoc {

enum class CostMode { kIoU, kEmbed, kAttr, kEmbedPlusAttr, kConcatFeature };
// Where detection attributes come from: the raw observation or the fusion
// model's prediction A2.
enum class AttrSource { kObserved, kPredicted };

std::string to_string(CostMode mode);
CostMode parse_cost_mode(std::string_view text);  // throws ConfigError
std::string to_string(AttrSource source);
AttrSource parse_attr_source(std::string_view text);

struct AssocConfig {
  CostMode mode = CostMode::kEmbed;
  double lambda_e = 1.0;
  double lambda_a = 1.0;
  double gating_threshold = kGatingThreshold4;
  // Per-mode match thresholds on the (possibly mixed) cost, each the best
  // IDF1 setting on held-out seeds of the default occlusion-heavy world.
  double iou_threshold = 0.5;
  double embed_threshold = 1.0;
  double attr_threshold = 0.3;
  double combined_threshold = 1.2;
  double concat_threshold = 0.5;
  int n_init = 3;
  int max_age = 30;
  int budget = 30;
  double attr_ema = 0.9;
  AttrSource attr_source = AttrSource::kObserved;
  // EmbedPlusAttr only: min-max normalize each matrix before mixing.
  bool normalize_costs = false;
  // Threshold both attribute vectors at 0.5 before taking the distance.
  bool binarize_attributes = false;
  bool emit_coasting = false;
  // Emit the boxes a track collected while tentative once it is confirmed.
  bool backfill = true;
  KalmanConfig kalman;

  double match_threshold() const;
  bool uses_embedding() const;
  bool uses_attributes() const;
  bool needs_fusion() const;

  void validate() const;  // throws ConfigError
  KeyValueDoc to_doc() const;
  static AssocConfig from_doc(const KeyValueDoc& doc);
  static AssocConfig load(const std::string& path);
};

enum class TrackStatus { kTentative, kConfirmed, kLost };

struct Track {
  int identity = 0;
  KalmanState state;
  TrackStatus status = TrackStatus::kTentative;
  int hits = 0;
  int age = 0;
  int time_since_update = 0;
  std::deque<Eigen::VectorXd> gallery;  // unit-normalized features
  AttributeVector attr_estimate;
  std::vector<TrackOutput> pending;  // outputs held while tentative
};

// Per-detection association features.
struct DetFeatures {
  Eigen::VectorXd feature;   // unit-normalized embedding or concat feature
  AttributeVector attributes;
};

struct TrackerState {
  std::vector<Track> tracks;  // live tracks only
  int next_identity = 1;
  int frame = 0;
};

struct CostMatrix {
  Eigen::MatrixXd cost;
  BoolMatrix infeasible;
};

// Features used for association: the raw embedding (or [E; A] for
// ConcatFeature) and the observed or predicted attributes. Throws
// InvariantError when a feature mode meets a detection without features and
// ConfigError when predicted attributes are requested without params.
std::vector<DetFeatures> detection_features(std::span<const Detection> dets,
                                            const AssocConfig& config,
                                            const fusion::FusionParams* params);

// Ungated cost per mode, rows = tracks, cols = detections.
Eigen::MatrixXd mode_cost(std::span<const Track> tracks, std::span<const Detection> dets,
                          std::span<const DetFeatures> features, CostMode mode,
                          const AssocConfig& config);
// Mode cost plus the Mahalanobis gate mask.
CostMatrix build_cost_matrix(std::span<const Track> tracks, std::span<const Detection> dets,
                             const AssocConfig& config,
                             const fusion::FusionParams* params = nullptr);

// Advances the tracker by one frame. `dets` must all carry frame
// state.frame + 1 (an empty frame is allowed). Returns the confirmed outputs
// of this frame plus any backfilled tentative boxes.
std::vector<TrackOutput> tracker_step(TrackerState& state, std::span<const Detection> dets,
                                      const AssocConfig& config,
                                      const fusion::FusionParams* params = nullptr);

// One sequence of detections with its frame count.
struct SequenceInput {
  std::string name;
  int n_frames = 0;
  std::vector<Detection> detections;
};

// Reads det.txt, features.bin (if present) and seqinfo.cfg from `dir`.
SequenceInput load_sequence_input(const std::filesystem::path& dir);

// Runs a fresh tracker over every frame. Outputs sorted by frame then
// identity.
std::vector<TrackOutput> run_sequence(const SequenceInput& input, const AssocConfig& config,
                                      const fusion::FusionParams* params = nullptr);

}  // namespace attmot::assoc

#endif  // ATTMOT_TRACKER_H_
