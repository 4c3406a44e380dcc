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

#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "attmot/cli/checks.h"
#include "attmot/metrics.h"

namespace attmot::metrics {
namespace {

BBox box(double x) { return {x, 0.0, 40.0, 80.0}; }

TEST(Clear, PerfectAndEmpty) {
  std::vector<GtEntry> gt;
  std::vector<TrackOutput> pred;
  for (int f = 1; f <= 10; ++f) {
    gt.push_back({f, 1, box(f), 1.0, true});
    pred.push_back({f, 4, box(f), 1.0});
  }
  const auto c = clear_metrics(gt, pred);
  EXPECT_EQ(c.mota(), 1.0);
  EXPECT_EQ(c.fp + c.fn + c.idsw, 0);
  const auto e = clear_metrics(gt, {});
  EXPECT_EQ(e.fn, 10);
  EXPECT_EQ(e.mota(), 0.0);
  EXPECT_THROW(clear_metrics({}, pred), InvariantError);
}

TEST(Clear, MotaPointSeven) {
  // 10 GT boxes: one miss, one false positive, one identity switch.
  std::vector<GtEntry> gt;
  std::vector<TrackOutput> pred;
  for (int f = 1; f <= 5; ++f) {
    gt.push_back({f, 1, box(0), 1.0, true});
    gt.push_back({f, 2, box(500), 1.0, true});
    pred.push_back({f, 1, box(0), 1.0});
    if (f <= 2) pred.push_back({f, 2, box(500), 1.0});
    if (f == 3 || f == 4) pred.push_back({f, 3, box(500), 1.0});
  }
  pred.push_back({5, 9, box(1000), 1.0});
  const auto c = clear_metrics(gt, pred);
  EXPECT_EQ(c.gt, 10);
  EXPECT_EQ(c.fn, 1);
  EXPECT_EQ(c.fp, 1);
  EXPECT_EQ(c.idsw, 1);
  EXPECT_NEAR(c.mota(), 0.7, 1e-12);
}

TEST(Clear, NegativeMota) {
  std::vector<GtEntry> gt = {{1, 1, box(0), 1.0, true}};
  std::vector<TrackOutput> pred = {{1, 1, box(300), 1.0}, {1, 2, box(600), 1.0}};
  const auto c = clear_metrics(gt, pred);
  EXPECT_LT(c.mota(), 0.0);
  EXPECT_GT(c.fp + c.fn + c.idsw, c.gt);
}

TEST(Clear, ContinuityOutranksOverlap) {
  std::vector<GtEntry> gt = {{1, 1, box(0), 1.0, true}, {2, 1, box(0), 1.0, true}};
  std::vector<TrackOutput> pred = {{1, 1, box(0), 1.0}, {2, 1, box(8), 1.0}, {2, 2, box(0), 1.0}};
  const auto c = clear_metrics(gt, pred);
  EXPECT_EQ(c.idsw, 0);
  EXPECT_EQ(c.fp, 1);
}

TEST(Clear, IgnoredGtSuppressesPredictions) {
  std::vector<GtEntry> gt = {{1, 1, box(0), 1.0, true}, {1, 2, box(300), 0.2, false}};
  std::vector<TrackOutput> pred = {{1, 1, box(0), 1.0}, {1, 2, box(300), 1.0}};
  EXPECT_EQ(clear_metrics(gt, pred).fp, 0);
  EXPECT_EQ(clear_metrics(gt, pred).gt, 1);
  EvalOptions keep;
  keep.suppress_ignored = false;
  EXPECT_EQ(clear_metrics(gt, pred, keep).fp, 1);
}

TEST(Id, HalfCoverage) {
  std::vector<GtEntry> gt;
  std::vector<TrackOutput> pred;
  for (int f = 1; f <= 4; ++f) {
    gt.push_back({f, 1, box(0), 1.0, true});
    pred.push_back({f, f <= 2 ? 1 : 2, box(0), 1.0});
  }
  const auto r = id_metrics(gt, pred);
  EXPECT_EQ(r.idtp, 2);
  EXPECT_NEAR(r.idf1(), 0.5, 1e-12);
  EXPECT_NEAR(r.idp(), 0.5, 1e-12);
  EXPECT_NEAR(r.idr(), 0.5, 1e-12);
  EXPECT_EQ(id_metrics(gt, {}).idf1(), 0.0);
}

TEST(Hota, OneMissedFrame) {
  std::vector<GtEntry> gt = {{1, 1, box(0), 1.0, true}, {2, 1, box(0), 1.0, true}};
  std::vector<TrackOutput> pred = {{1, 1, box(0), 1.0}};
  const auto h = hota_metrics(gt, pred);
  for (int a = 0; a < kHotaAlphas; ++a) {
    EXPECT_NEAR(h.deta(a), 0.5, 1e-12);
    EXPECT_NEAR(h.assa(a), 0.5, 1e-12);
  }
  EXPECT_NEAR(h.hota(), 0.5, 1e-12);
  EXPECT_EQ(hota_metrics(gt, {}).hota(), 0.0);
}

TEST(Hota, LocalisationThresholds) {
  // IoU 0.6 counts for alpha <= 0.6 only.
  const BBox g{0, 0, 100, 100};
  const BBox p{0, 0, 100, 60};
  std::vector<GtEntry> gt = {{1, 1, g, 1.0, true}};
  std::vector<TrackOutput> pred = {{1, 1, p, 1.0}};
  const auto h = hota_metrics(gt, pred);
  double expected = 0.0;
  for (int a = 0; a < kHotaAlphas; ++a) {
    const bool hit = HotaResult::alpha(a) <= 0.6 + 1e-12;
    EXPECT_EQ(h.deta(a), hit ? 1.0 : 0.0) << HotaResult::alpha(a);
    expected += hit ? 1.0 : 0.0;
  }
  EXPECT_NEAR(h.hota(), expected / kHotaAlphas, 1e-12);
}

TEST(Oracle, RandomSmallFixtures) {
  for (unsigned s = 0; s < 3000; ++s) {
    std::vector<GtEntry> gt;
    std::vector<TrackOutput> pred;
    checks::oracle::random_fixture(s, 3, 5, gt, pred);
    if (gt.empty()) continue;
    const auto c = clear_metrics(gt, pred);
    const auto o = checks::oracle::clear_counts(gt, pred);
    ASSERT_EQ(c.fp, o.fp) << s;
    ASSERT_EQ(c.fn, o.fn) << s;
    ASSERT_EQ(c.idsw, o.idsw) << s;
    ASSERT_EQ(id_metrics(gt, pred).idtp, checks::oracle::idtp(gt, pred)) << s;
    const auto h = hota_metrics(gt, pred);
    EXPECT_GE(h.hota(), 0.0);
    EXPECT_LE(h.hota(), 1.0);
  }
}

TEST(Prepare, DuplicateIdentityInFrameThrows) {
  std::vector<GtEntry> gt = {{1, 1, box(0), 1.0, true}};
  std::vector<TrackOutput> pred = {{1, 1, box(0), 1.0}, {1, 1, box(100), 1.0}};
  EXPECT_THROW(clear_metrics(gt, pred), InvariantError);
}

TEST(Report, CsvLayoutAndAggregate) {
  std::vector<GtEntry> gt = {{1, 1, box(0), 1.0, true}, {2, 1, box(0), 1.0, true}};
  std::vector<TrackOutput> pred = {{1, 1, box(0), 1.0}};
  const std::vector<TrackOutput> full = {{1, 1, box(0), 1.0}, {2, 1, box(0), 1.0}};
  auto report = make_report({evaluate("b", gt, pred), evaluate("a", gt, full)});
  EXPECT_EQ(report.sequences[0].name, "a");
  EXPECT_EQ(report.total.clear.gt, 4);
  EXPECT_EQ(report.total.clear.fn, 1);
  std::ostringstream csv;
  write_report_csv(csv, report);
  std::istringstream lines(csv.str());
  std::string header, first, second, total;
  std::getline(lines, header);
  std::getline(lines, first);
  std::getline(lines, second);
  std::getline(lines, total);
  EXPECT_EQ(header, "sequence,MOTA,FN,FP,IDs,HOTA,AssA,IDR,IDP,IDF1,DetA,GT");
  EXPECT_EQ(first.substr(0, 4), "a,1,");
  EXPECT_EQ(total.substr(0, 10), "AGGREGATE,");
  std::ostringstream table;
  write_report_table(table, report);
  EXPECT_NE(table.str().find("AGGREGATE"), std::string::npos);
}

TEST(TprAtFar, Examples) {
  VerificationSet sep;
  for (int i = 0; i < 2000; ++i) {
    sep.positive.push_back(1.0 + i * 1e-3);
    sep.negative.push_back(-1.0 - i * 1e-3);
  }
  for (const auto& [far, tpr] : tpr_at_far(sep)) EXPECT_EQ(tpr, 1.0) << far;

  VerificationSet small;
  small.positive = {0.5};
  small.negative.assign(500, 0.1);
  try {
    tpr_at_far(small);
    FAIL();
  } catch (const InvariantError& e) {
    EXPECT_NE(std::string(e.what()).find("insufficient negatives"), std::string::npos);
  }

  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0.0, 1.0);
  VerificationSet same;
  for (int i = 0; i < 10000; ++i) {
    same.positive.push_back(n(rng));
    same.negative.push_back(n(rng));
  }
  EXPECT_NEAR(tpr_at_far(same).at(0.1), 0.1, 0.02);
  const std::vector<double> levels = {0.001, 0.01, 0.1, 0.5, 1.0};
  double prev = -1.0;
  for (const auto& [far, tpr] : tpr_at_far(same, levels)) {
    EXPECT_GE(tpr, prev);
    prev = tpr;
  }
  EXPECT_THROW(tpr_at_far(VerificationSet{}), InvariantError);
}

}  // namespace
}  // namespace attmot::metrics
