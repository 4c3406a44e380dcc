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

// CLEAR, identity and HOTA tracking metrics, plus TPR at fixed FAR for
// verification scores.

#ifndef ATTMOT_METRICS_H_
#define ATTMOT_METRICS_H_

#include <array>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "attmot/types.h"

namespace attmot::metrics {

struct EvalOptions {
  double iou_threshold = 0.5;
  // Predictions matched to an inactive GT row are dropped instead of being
  // counted as false positives.
  bool suppress_ignored = true;
};

struct ClearResult {
  long gt = 0;
  long fp = 0;
  long fn = 0;
  long idsw = 0;
  long matches = 0;
  double mota() const;
};

struct IdResult {
  long gt = 0;
  long pred = 0;
  long idtp = 0;
  long idfp() const { return pred - idtp; }
  long idfn() const { return gt - idtp; }
  double idf1() const;
  double idp() const;
  double idr() const;
};

inline constexpr int kHotaAlphas = 19;

struct HotaResult {
  // Per localization threshold alpha_a = 0.05 (a + 1).
  std::array<double, kHotaAlphas> tp{};
  std::array<double, kHotaAlphas> fn{};
  std::array<double, kHotaAlphas> fp{};
  std::array<double, kHotaAlphas> ass_sum{};  // sum of per-match AssA

  double deta(int a) const;
  double assa(int a) const;
  double hota(int a) const;
  // Averages over the thresholds.
  double deta() const;
  double assa() const;
  double hota() const;
  static double alpha(int a) { return 0.05 * (a + 1); }
};

// Prepared frame-indexed input: inactive GT rows removed and, with
// suppression, the predictions they absorb. Throws InvariantError on an
// identity repeated within a frame.
struct EvalInput {
  std::map<int, std::vector<GtEntry>> gt;
  std::map<int, std::vector<TrackOutput>> pred;
  long gt_count = 0;
  long pred_count = 0;
};
EvalInput prepare(std::span<const GtEntry> gt, std::span<const TrackOutput> pred,
                  const EvalOptions& options = {});

// All three throw InvariantError("no ground truth") when no active GT row
// remains.
ClearResult clear_metrics(std::span<const GtEntry> gt, std::span<const TrackOutput> pred,
                          const EvalOptions& options = {});
IdResult id_metrics(std::span<const GtEntry> gt, std::span<const TrackOutput> pred,
                    const EvalOptions& options = {});
HotaResult hota_metrics(std::span<const GtEntry> gt, std::span<const TrackOutput> pred,
                        const EvalOptions& options = {});

struct SequenceMetrics {
  std::string name;
  ClearResult clear;
  IdResult id;
  HotaResult hota;
};

SequenceMetrics evaluate(std::string name, std::span<const GtEntry> gt,
                         std::span<const TrackOutput> pred, const EvalOptions& options = {});

// Counts summed over sequences; rates recomputed from the sums.
SequenceMetrics aggregate(std::span<const SequenceMetrics> rows, std::string name = "AGGREGATE");

struct MetricsReport {
  std::vector<SequenceMetrics> sequences;  // sorted by name
  SequenceMetrics total;
};
MetricsReport make_report(std::vector<SequenceMetrics> rows);

// Columns: sequence,MOTA,FN,FP,IDs,HOTA,AssA,IDR,IDP,IDF1,DetA,GT. The CSV
// holds rates as fractions, the table as percentages.
void write_report_csv(std::ostream& out, const MetricsReport& report);
void write_report_table(std::ostream& out, const MetricsReport& report);

struct VerificationSet {
  std::vector<double> positive;  // same-identity similarity scores
  std::vector<double> negative;  // different-identity scores
};

// Threshold = the ceil(far * |neg|)-th highest negative score; TPR = share of
// positives at or above it. Throws InvariantError on empty sets and
// "insufficient negatives" when far * |neg| < 1.
std::map<double, double> tpr_at_far(const VerificationSet& set,
                                    std::span<const double> far_levels);
std::map<double, double> tpr_at_far(const VerificationSet& set);  // 0.1, 0.01, 0.001

}  // namespace attmot::metrics

#endif  // ATTMOT_METRICS_H_
