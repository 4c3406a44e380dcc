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

// MOTChallenge text files, the attribute sidecar, and the binary feature
// sidecar.
//
// Text rows are "frame,id,left,top,width,height,conf,x,y,z". Ground-truth
// files may instead use the MOT17 layout "frame,id,left,top,width,height,
// active,class,visibility"; the 10-column layout carries no visibility and
// reads as 1.0. Coordinates are written with at most two fractional digits,
// every other real with the shortest representation that reads back exactly.

#ifndef ATTMOT_MOTIO_H_
#define ATTMOT_MOTIO_H_

#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "attmot/types.h"

namespace attmot::motio {

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, int line)
      : std::runtime_error(what), line_(line) {}
  // 1-based line number, 0 when the error is not tied to a line.
  int line() const { return line_; }

 private:
  int line_;
};

enum class FileKind { kDet, kGt };

// One raw text row.
struct MotLine {
  int frame = 0;
  int id = -1;
  BBox box;
  double conf = 1.0;
  double x = -1.0;
  double y = -1.0;
  double z = -1.0;
  int field_count = 10;
};

std::vector<MotLine> parse_mot_lines(std::istream& in);

std::vector<Detection> parse_det_file(std::istream& in);
std::vector<GtEntry> parse_gt_file(std::istream& in);
std::vector<TrackOutput> parse_result_file(std::istream& in);

std::vector<Detection> load_det_file(const std::string& path);
std::vector<GtEntry> load_gt_file(const std::string& path);
std::vector<TrackOutput> load_result_file(const std::string& path);

void write_det_file(std::ostream& out, std::span<const Detection> dets);
void write_gt_file(std::ostream& out, std::span<const GtEntry> gt);
// Rows are emitted sorted by frame then identity. Throws InvariantError
// ("unassigned id") for identities < 1.
void write_result_file(std::ostream& out, std::span<const TrackOutput> tracks);

// Attribute sidecar: header "# attmot-attrs v1" then "id,b0,...,b31".
inline constexpr const char* kAttrHeader = "# attmot-attrs v1";
std::map<int, AttributeVector> parse_attr_file(std::istream& in);
std::map<int, AttributeVector> load_attr_file(const std::string& path);
void write_attr_file(std::ostream& out,
                     const std::map<int, AttributeVector>& attrs);

// Binary feature sidecar, one record per detection row in file order:
//   "ATMF" u32 version u32 dim u32 count, then per record
//   i32 frame, i32 row, f32[dim] embedding, f32[32] attribute observation.
// Little-endian. Values are stored as float32, so embeddings round-trip
// exactly only if they already hold float32-representable values.
struct FeatureRecord {
  int frame = 0;
  int row = 0;
  Embedding embedding;
  AttributeVector attrs;
};

void write_feature_file(std::ostream& out, std::span<const Detection> dets);
std::vector<FeatureRecord> read_feature_file(std::istream& in);
// Copies features onto `dets` (same order as the det file). Throws ParseError
// on a count or frame mismatch.
void attach_features(std::vector<Detection>& dets,
                     const std::vector<FeatureRecord>& records);

// Coordinate rendering: at most two fractional digits, trailing zeros
// dropped ("100", "100.5", "12.25").
std::string format_coord(double v);
// Shortest round-trip rendering.
std::string format_real(double v);

}  // namespace attmot::motio

#endif  // ATTMOT_MOTIO_H_
