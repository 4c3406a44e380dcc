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

#include "attmot/motio.h"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <string_view>

namespace attmot::motio {
namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(trim(line.substr(start)));
      break;
    }
    out.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
  return out;
}

double parse_real(std::string_view field, int lineno) {
  double v = 0.0;
  const char* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), end, v);
  if (field.empty() || ec != std::errc() || ptr != end || !std::isfinite(v)) {
    throw ParseError("malformed number '" + std::string(field) + "' at line " +
                         std::to_string(lineno),
                     lineno);
  }
  return v;
}

int parse_integral(std::string_view field, int lineno) {
  const double v = parse_real(field, lineno);
  if (v != std::floor(v) || std::abs(v) > 2e9) {
    throw ParseError("expected an integer, got '" + std::string(field) +
                         "' at line " + std::to_string(lineno),
                     lineno);
  }
  return static_cast<int>(v);
}

bool skippable(std::string_view line) {
  const auto t = trim(line);
  return t.empty() || t.front() == '#';
}

template <typename T>
std::vector<T> load_with(const std::string& path,
                         std::vector<T> (*parse)(std::istream&)) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return parse(in);
}

void append_row(std::string& out, int frame, int id, const BBox& box,
                const std::string& rest) {
  out += std::to_string(frame);
  out += ',';
  out += std::to_string(id);
  out += ',';
  out += format_coord(box.left);
  out += ',';
  out += format_coord(box.top);
  out += ',';
  out += format_coord(box.width);
  out += ',';
  out += format_coord(box.height);
  out += ',';
  out += rest;
  out += '\n';
}

template <typename T>
void put(std::ostream& out, T value) {
  static_assert(std::endian::native == std::endian::little,
                "feature sidecar I/O assumes a little-endian host");
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.write(buf, sizeof(T));
}

template <typename T>
T get(std::istream& in, const char* what) {
  char buf[sizeof(T)];
  if (!in.read(buf, sizeof(T))) {
    throw ParseError(std::string("truncated feature file while reading ") + what, 0);
  }
  T value;
  std::memcpy(&value, buf, sizeof(T));
  return value;
}

}  // namespace

std::string format_coord(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v,
                                 std::chars_format::fixed, 2);
  std::string s(buf, res.ptr);
  if (s.find('.') != std::string::npos) {
    while (s.back() == '0') s.pop_back();
    if (s.back() == '.') s.pop_back();
  }
  if (s == "-0") s = "0";
  return s;
}

std::string format_real(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  std::string s(buf, res.ptr);
  if (s == "-0") s = "0";
  return s;
}

std::vector<MotLine> parse_mot_lines(std::istream& in) {
  std::vector<MotLine> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (skippable(line)) continue;
    const auto f = split_fields(line);
    if (f.size() < 7 || f.size() > 10) {
      throw ParseError("expected 7 to 10 fields at line " +
                           std::to_string(lineno) + ", got " +
                           std::to_string(f.size()),
                       lineno);
    }
    MotLine row;
    row.field_count = static_cast<int>(f.size());
    row.frame = parse_integral(f[0], lineno);
    row.id = parse_integral(f[1], lineno);
    row.box = {parse_real(f[2], lineno), parse_real(f[3], lineno),
               parse_real(f[4], lineno), parse_real(f[5], lineno)};
    row.conf = parse_real(f[6], lineno);
    if (f.size() > 7) row.x = parse_real(f[7], lineno);
    if (f.size() > 8) row.y = parse_real(f[8], lineno);
    if (f.size() > 9) row.z = parse_real(f[9], lineno);
    if (row.frame < 1) {
      throw ParseError("frame index must be >= 1 at line " + std::to_string(lineno),
                       lineno);
    }
    if (!row.box.valid()) {
      throw ParseError("non-positive box at line " + std::to_string(lineno), lineno);
    }
    rows.push_back(row);
  }
  return rows;
}

std::vector<Detection> parse_det_file(std::istream& in) {
  std::vector<Detection> dets;
  int lineno = 0;
  for (const MotLine& row : parse_mot_lines(in)) {
    ++lineno;
    Detection d;
    d.frame = row.frame;
    d.box = row.box;
    d.confidence = std::clamp(row.conf, 0.0, 1.0);
    dets.push_back(std::move(d));
  }
  std::stable_sort(dets.begin(), dets.end(),
                   [](const Detection& a, const Detection& b) {
                     return a.frame < b.frame;
                   });
  return dets;
}

std::vector<GtEntry> parse_gt_file(std::istream& in) {
  std::vector<GtEntry> gt;
  for (const MotLine& row : parse_mot_lines(in)) {
    GtEntry e;
    e.frame = row.frame;
    e.identity = row.id;
    e.box = row.box;
    e.active = row.conf != 0.0;
    // MOT17 layout: x holds the class, y the visibility.
    e.visibility = row.field_count == 9 ? std::clamp(row.y, 0.0, 1.0) : 1.0;
    if (e.identity < 1) {
      throw ParseError("ground-truth identity must be >= 1 (frame " +
                           std::to_string(e.frame) + ")",
                       0);
    }
    gt.push_back(e);
  }
  std::sort(gt.begin(), gt.end(), [](const GtEntry& a, const GtEntry& b) {
    return a.frame != b.frame ? a.frame < b.frame : a.identity < b.identity;
  });
  for (std::size_t i = 1; i < gt.size(); ++i) {
    if (gt[i].frame == gt[i - 1].frame && gt[i].identity == gt[i - 1].identity) {
      throw ParseError("duplicate (frame, identity) = (" +
                           std::to_string(gt[i].frame) + ", " +
                           std::to_string(gt[i].identity) + ")",
                       0);
    }
  }
  return gt;
}

std::vector<TrackOutput> parse_result_file(std::istream& in) {
  std::vector<TrackOutput> out;
  for (const MotLine& row : parse_mot_lines(in)) {
    if (row.id < 1) {
      throw ParseError("result identity must be >= 1 (frame " +
                           std::to_string(row.frame) + ")",
                       0);
    }
    out.push_back({row.frame, row.id, row.box, row.conf});
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const TrackOutput& a, const TrackOutput& b) {
                     return a.frame != b.frame ? a.frame < b.frame
                                               : a.identity < b.identity;
                   });
  return out;
}

std::vector<Detection> load_det_file(const std::string& path) {
  return load_with<Detection>(path, &parse_det_file);
}
std::vector<GtEntry> load_gt_file(const std::string& path) {
  return load_with<GtEntry>(path, &parse_gt_file);
}
std::vector<TrackOutput> load_result_file(const std::string& path) {
  return load_with<TrackOutput>(path, &parse_result_file);
}

void write_det_file(std::ostream& out, std::span<const Detection> dets) {
  std::string buf;
  for (const Detection& d : dets) {
    append_row(buf, d.frame, -1, d.box, format_real(d.confidence) + ",-1,-1,-1");
  }
  out << buf;
}

void write_gt_file(std::ostream& out, std::span<const GtEntry> gt) {
  std::vector<GtEntry> sorted(gt.begin(), gt.end());
  std::sort(sorted.begin(), sorted.end(), [](const GtEntry& a, const GtEntry& b) {
    return a.frame != b.frame ? a.frame < b.frame : a.identity < b.identity;
  });
  std::string buf;
  for (const GtEntry& e : sorted) {
    append_row(buf, e.frame, e.identity, e.box,
               std::string(e.active ? "1" : "0") + ",1," +
                   format_real(e.visibility));
  }
  out << buf;
}

void write_result_file(std::ostream& out, std::span<const TrackOutput> tracks) {
  std::vector<TrackOutput> sorted(tracks.begin(), tracks.end());
  for (const TrackOutput& t : sorted) {
    if (t.identity < 1) {
      throw InvariantError("unassigned id in result at frame " +
                           std::to_string(t.frame));
    }
  }
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const TrackOutput& a, const TrackOutput& b) {
                     return a.frame != b.frame ? a.frame < b.frame
                                               : a.identity < b.identity;
                   });
  std::string buf;
  for (const TrackOutput& t : sorted) {
    append_row(buf, t.frame, t.identity, t.box,
               format_real(t.confidence) + ",-1,-1,-1");
  }
  out << buf;
}

std::map<int, AttributeVector> parse_attr_file(std::istream& in) {
  std::map<int, AttributeVector> out;
  std::string line;
  int lineno = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++lineno;
    const auto t = trim(line);
    if (t.empty()) continue;
    if (!header_seen) {
      if (t != kAttrHeader) {
        throw ParseError("missing '" + std::string(kAttrHeader) +
                             "' header at line " + std::to_string(lineno),
                         lineno);
      }
      header_seen = true;
      continue;
    }
    if (t.front() == '#') continue;
    const auto f = split_fields(t);
    if (f.size() != attr::kCount + 1) {
      throw ParseError("expected 33 fields at line " + std::to_string(lineno) +
                           ", got " + std::to_string(f.size()),
                       lineno);
    }
    const int id = parse_integral(f[0], lineno);
    if (id < 1) {
      throw ParseError("identity must be >= 1 at line " + std::to_string(lineno),
                       lineno);
    }
    AttributeVector::Values bits{};
    for (std::size_t j = 0; j < attr::kCount; ++j) {
      const auto& field = f[j + 1];
      if (field != "0" && field != "1") {
        throw ParseError("non-binary value '" + std::string(field) +
                             "' at line " + std::to_string(lineno),
                         lineno);
      }
      bits[j] = field == "1" ? 1.0 : 0.0;
    }
    const std::string why = AttributeVector::binary_violation(bits);
    if (!why.empty()) {
      throw ParseError(why + " at line " + std::to_string(lineno), lineno);
    }
    if (out.count(id)) {
      throw ParseError("duplicate identity " + std::to_string(id), lineno);
    }
    out.emplace(id, AttributeVector::binary(bits));
  }
  return out;
}

std::map<int, AttributeVector> load_attr_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return parse_attr_file(in);
}

void write_attr_file(std::ostream& out,
                     const std::map<int, AttributeVector>& attrs) {
  std::string buf = std::string(kAttrHeader) + "\n";
  for (const auto& [id, vec] : attrs) {
    if (vec.mode() != AttributeVector::Mode::kBinary) {
      throw InvariantError("attribute sidecar requires binary vectors");
    }
    buf += std::to_string(id);
    for (double b : vec.values()) buf += b != 0.0 ? ",1" : ",0";
    buf += '\n';
  }
  out << buf;
}

void write_feature_file(std::ostream& out, std::span<const Detection> dets) {
  std::uint32_t dim = 0;
  for (const Detection& d : dets) {
    if (!d.has_features()) throw InvariantError("detection without features");
    if (dim == 0) dim = static_cast<std::uint32_t>(d.embedding.dim());
    if (d.embedding.dim() != dim) {
      throw InvariantError("embedding dimension changes within a file");
    }
  }
  out.write("ATMF", 4);
  put<std::uint32_t>(out, 1);
  put<std::uint32_t>(out, dim);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(dets.size()));
  std::int32_t row = 0;
  for (const Detection& d : dets) {
    put<std::int32_t>(out, d.frame);
    put<std::int32_t>(out, row++);
    for (Eigen::Index i = 0; i < d.embedding.values().size(); ++i) {
      put<float>(out, static_cast<float>(d.embedding.values()[i]));
    }
    for (double a : d.attr_obs.values()) put<float>(out, static_cast<float>(a));
  }
}

std::vector<FeatureRecord> read_feature_file(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || std::string_view(magic, 4) != "ATMF") {
    throw ParseError("not a feature sidecar (bad magic)", 0);
  }
  const auto version = get<std::uint32_t>(in, "version");
  if (version != 1) {
    throw ParseError("unsupported feature sidecar version " +
                         std::to_string(version),
                     0);
  }
  const auto dim = get<std::uint32_t>(in, "dim");
  const auto count = get<std::uint32_t>(in, "count");
  std::vector<FeatureRecord> out;
  out.reserve(count);
  Eigen::VectorXd emb(dim);
  AttributeVector::Values attrs{};
  for (std::uint32_t r = 0; r < count; ++r) {
    FeatureRecord rec;
    rec.frame = get<std::int32_t>(in, "frame");
    rec.row = get<std::int32_t>(in, "row");
    for (std::uint32_t i = 0; i < dim; ++i) emb[i] = get<float>(in, "embedding");
    for (double& a : attrs) a = get<float>(in, "attributes");
    rec.embedding = Embedding(emb);
    try {
      rec.attrs = AttributeVector::prob(attrs);
    } catch (const InvariantError& e) {
      throw ParseError(std::string(e.what()) + " in feature record " +
                           std::to_string(r),
                       0);
    }
    out.push_back(std::move(rec));
  }
  return out;
}

void attach_features(std::vector<Detection>& dets,
                     const std::vector<FeatureRecord>& records) {
  if (dets.size() != records.size()) {
    throw ParseError("feature sidecar has " + std::to_string(records.size()) +
                         " records for " + std::to_string(dets.size()) +
                         " detections",
                     0);
  }
  for (std::size_t i = 0; i < dets.size(); ++i) {
    if (records[i].frame != dets[i].frame) {
      throw ParseError("feature record " + std::to_string(i) +
                           " frame mismatch",
                       0);
    }
    dets[i].embedding = records[i].embedding;
    dets[i].attr_obs = records[i].attrs;
  }
}

}  // namespace attmot::motio
