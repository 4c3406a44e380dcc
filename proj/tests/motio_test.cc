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

#include "attmot/motio.h"

namespace attmot::motio {
namespace {

std::string bits_line(int id) {
  std::string s = std::to_string(id);
  for (std::size_t j = 0; j < attr::kCount; ++j) {
    const bool on = j == attr::kBodyBegin || j == attr::kHairBegin + 1 ||
                    j == attr::kUpperColorBegin + 2 || j == attr::kLowerColorBegin;
    s += on ? ",1" : ",0";
  }
  return s;
}

template <typename F>
std::string error_of(F&& f) {
  try {
    f();
  } catch (const ParseError& e) {
    return e.what();
  }
  return "";
}

TEST(ParseGt, DirectFieldMapping) {
  std::istringstream in("1,1,100,100,50,100,1,-1,-1,-1\n");
  const auto gt = parse_gt_file(in);
  ASSERT_EQ(gt.size(), 1u);
  EXPECT_EQ(gt[0].frame, 1);
  EXPECT_EQ(gt[0].identity, 1);
  EXPECT_EQ(gt[0].box, (BBox{100, 100, 50, 100}));
  EXPECT_TRUE(gt[0].active);
  EXPECT_DOUBLE_EQ(gt[0].visibility, 1.0);
}

TEST(ParseGt, Mot17LayoutAndIgnoreFlag) {
  std::istringstream in("2,3,1,2,3,4,0,1,0.25\n1,5,1,2,3,4,1,1,1\n");
  const auto gt = parse_gt_file(in);
  ASSERT_EQ(gt.size(), 2u);
  EXPECT_EQ(gt[0].frame, 1);  // sorted by frame
  EXPECT_FALSE(gt[1].active);
  EXPECT_DOUBLE_EQ(gt[1].visibility, 0.25);
}

TEST(ParseGt, Errors) {
  std::istringstream empty("");
  EXPECT_TRUE(parse_gt_file(empty).empty());
  std::istringstream neg("1,1,100,100,-5,100,1,-1,-1,-1\n");
  EXPECT_NE(error_of([&] { parse_gt_file(neg); }).find("non-positive box at line 1"),
            std::string::npos);
  std::istringstream bad("1,1,100,100,5,100,1,-1,-1,-1\n1,2,abc,1,1,1,1,-1,-1,-1\n");
  try {
    parse_gt_file(bad);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2);
  }
  std::istringstream few("1,1,2\n");
  EXPECT_THROW(parse_gt_file(few), ParseError);
  std::istringstream dup("1,1,0,0,1,1,1,-1,-1,-1\n1,1,0,0,1,1,1,-1,-1,-1\n");
  EXPECT_THROW(parse_gt_file(dup), ParseError);
}

TEST(ParseDet, ConfidenceColumn) {
  std::istringstream in("3,-1,1.5,2.25,10,20,0.75,-1,-1,-1\n");
  const auto dets = parse_det_file(in);
  ASSERT_EQ(dets.size(), 1u);
  EXPECT_EQ(dets[0].frame, 3);
  EXPECT_DOUBLE_EQ(dets[0].confidence, 0.75);
  EXPECT_EQ(dets[0].box, (BBox{1.5, 2.25, 10, 20}));
}

TEST(AttrFile, ParseAndErrors) {
  std::istringstream ok(std::string(kAttrHeader) + "\n" + bits_line(7) + "\n");
  const auto m = parse_attr_file(ok);
  ASSERT_EQ(m.count(7), 1u);
  EXPECT_EQ(m.at(7)[attr::kBodyBegin], 1.0);
  EXPECT_EQ(m.at(7).mode(), AttributeVector::Mode::kBinary);

  const std::string short_line = bits_line(7).substr(0, bits_line(7).size() - 2);
  std::istringstream s(std::string(kAttrHeader) + "\n" + short_line + "\n");
  EXPECT_NE(error_of([&] { parse_attr_file(s); }).find("expected 33 fields"), std::string::npos);

  std::istringstream d(std::string(kAttrHeader) + "\n" + bits_line(7) + "\n" + bits_line(7) + "\n");
  EXPECT_NE(error_of([&] { parse_attr_file(d); }).find("duplicate identity 7"), std::string::npos);

  std::string two_hot = bits_line(3);
  two_hot[2 * (attr::kBodyBegin + 1) + 2] = '1';  // second body bit
  std::istringstream g(std::string(kAttrHeader) + "\n" + two_hot + "\n");
  EXPECT_THROW(parse_attr_file(g), ParseError);
}

TEST(AttrFile, RoundTrip) {
  std::istringstream in(std::string(kAttrHeader) + "\n" + bits_line(2) + "\n" + bits_line(9) + "\n");
  const auto m = parse_attr_file(in);
  std::ostringstream out;
  write_attr_file(out, m);
  std::istringstream again(out.str());
  EXPECT_EQ(parse_attr_file(again), m);
}

TEST(ResultFile, EmptyAndOrdering) {
  std::ostringstream empty;
  write_result_file(empty, {});
  EXPECT_EQ(empty.str(), "");

  const std::vector<TrackOutput> rows = {
      {3, 1, {1, 2, 3, 4}, 1.0}, {1, 1, {1, 2, 3, 4}, 1.0}, {2, 1, {1, 2, 3, 4}, 1.0}};
  std::ostringstream out;
  write_result_file(out, rows);
  std::istringstream in(out.str());
  const auto back = parse_result_file(in);
  ASSERT_EQ(back.size(), 3u);
  for (int i = 0; i < 3; ++i) EXPECT_EQ(back[static_cast<std::size_t>(i)].frame, i + 1);
  const std::string text = out.str();
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 3);

  const std::vector<TrackOutput> unassigned = {{1, 0, {1, 2, 3, 4}, 1.0}};
  std::ostringstream bad;
  EXPECT_THROW(write_result_file(bad, unassigned), InvariantError);
}

TEST(ResultFile, HundredLineRoundTrip) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(0.0, 500.0);
  std::vector<TrackOutput> rows;
  for (int i = 0; i < 100; ++i) {
    rows.push_back({1 + i / 5, 1 + i % 5, {u(rng), u(rng), 1.0 + u(rng), 1.0 + u(rng)}, 1.0});
  }
  std::ostringstream first;
  write_result_file(first, rows);
  std::istringstream in1(first.str());
  const auto parsed = parse_result_file(in1);
  std::ostringstream second;
  write_result_file(second, parsed);
  EXPECT_EQ(first.str(), second.str());
  std::istringstream in2(second.str());
  EXPECT_EQ(parse_result_file(in2), parsed);
}

TEST(Format, Coordinates) {
  EXPECT_EQ(format_coord(100.0), "100");
  EXPECT_EQ(format_coord(100.5), "100.5");
  EXPECT_EQ(format_coord(12.25), "12.25");
  EXPECT_EQ(format_real(0.1), "0.1");
  EXPECT_EQ(format_real(-0.0), "0");
}

TEST(FeatureFile, RoundTrip) {
  std::vector<Detection> dets(3);
  for (int i = 0; i < 3; ++i) {
    auto& d = dets[static_cast<std::size_t>(i)];
    d.frame = 1 + i;
    d.box = {1, 1, 2, 2};
    Eigen::VectorXd v(4);
    v << 0.5, -0.25, 1.0, static_cast<double>(i);
    d.embedding = Embedding(v);
    AttributeVector::Values a{};
    a[static_cast<std::size_t>(i)] = 0.5;
    d.attr_obs = AttributeVector::prob(a);
  }
  std::ostringstream out;
  write_feature_file(out, dets);
  std::istringstream in(out.str());
  const auto records = read_feature_file(in);
  ASSERT_EQ(records.size(), 3u);
  auto copy = dets;
  for (auto& d : copy) {
    d.embedding = Embedding();
    d.attr_obs = AttributeVector();
  }
  attach_features(copy, records);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(copy[i].embedding, dets[i].embedding);
    EXPECT_EQ(copy[i].attr_obs.values(), dets[i].attr_obs.values());
  }
  copy.pop_back();
  EXPECT_THROW(attach_features(copy, records), ParseError);
  std::istringstream junk("XXXX");
  EXPECT_THROW(read_feature_file(junk), ParseError);
}

}  // namespace
}  // namespace attmot::motio
