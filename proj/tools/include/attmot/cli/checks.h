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

// End-to-end acceptance checks shared by the acceptance test binary and
// `attmot verify`.

#ifndef ATTMOT_CLI_CHECKS_H_
#define ATTMOT_CLI_CHECKS_H_

#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "attmot/metrics.h"
#include "attmot/types.h"

namespace attmot::checks {

// Exhaustive reference implementations for small inputs.
namespace oracle {

// Minimum total over all permutations of a square matrix, summed in row
// order.
double min_permutation_cost(const Eigen::MatrixXd& cost);

// CLEAR counts by enumerating every matching of each frame and keeping the
// one with the most continued correspondences, then the largest IoU sum.
// All GT rows must be active.
metrics::ClearResult clear_counts(std::span<const GtEntry> gt,
                                  std::span<const TrackOutput> pred,
                                  double iou_threshold = 0.5);

// IDTP by enumerating every injective GT-to-prediction identity mapping.
long idtp(std::span<const GtEntry> gt, std::span<const TrackOutput> pred,
          double iou_threshold = 0.5);

// Random fixture with at most `max_ids` GT and predicted identities and at
// most `max_frames` frames.
void random_fixture(unsigned seed, int max_ids, int max_frames, std::vector<GtEntry>& gt,
                    std::vector<TrackOutput>& pred);

}  // namespace oracle

struct CheckResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
};

struct Check {
  int id;
  std::string name;
  std::function<CheckResult()> run;
};

CheckResult assignment_oracle();
CheckResult gradient_correctness();
CheckResult attention_exactness();
CheckResult loss_anchors();
CheckResult metrics_oracle();
CheckResult association_effect();
CheckResult fusion_training();
CheckResult tpr_at_far_properties();
// Writes scratch files under `scratch`.
CheckResult determinism(const std::filesystem::path& scratch);

std::vector<Check> all_checks(const std::filesystem::path& scratch);

// "PASS [3] attention exactness: ... (0.01 s)".
std::string format_result(const CheckResult& r);

}  // namespace attmot::checks

#endif  // ATTMOT_CLI_CHECKS_H_
