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

#ifndef ATTMOT_TYPES_H_
#define ATTMOT_TYPES_H_

#include <array>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace attmot {

// Raised when a value violates a documented invariant or precondition.
class InvariantError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Axis-aligned box in pixel coordinates (MOTChallenge left/top/width/height).
struct BBox {
  double left = 0.0;
  double top = 0.0;
  double width = 0.0;
  double height = 0.0;

  double right() const { return left + width; }
  double bottom() const { return top + height; }
  double area() const { return width * height; }
  double center_x() const { return left + 0.5 * width; }
  double center_y() const { return top + 0.5 * height; }

  // width > 0, height > 0, every field finite.
  bool valid() const;

  static BBox from_center(double cx, double cy, double width, double height) {
    return {cx - 0.5 * width, cy - 0.5 * height, width, height};
  }

  friend bool operator==(const BBox&, const BBox&) = default;
};

// Throws InvariantError naming `what` if the box is invalid.
void require_valid(const BBox& box, std::string_view what = "box");

// Slot layout of the 32-bit attribute vector.
namespace attr {

inline constexpr std::size_t kCount = 32;

inline constexpr std::size_t kGender = 0;  // 1 = male
inline constexpr std::size_t kBodyBegin = 1;  // thin, medium, fat
inline constexpr std::size_t kBodyCount = 3;
inline constexpr std::size_t kHairBegin = 4;  // bald, short, long
inline constexpr std::size_t kHairCount = 3;
inline constexpr std::size_t kLongSleeve = 7;
inline constexpr std::size_t kUpperLong = 8;
inline constexpr std::size_t kSkirt = 9;  // 0 = pants
inline constexpr std::size_t kLowerLong = 10;
inline constexpr std::size_t kBackpack = 11;
inline constexpr std::size_t kHat = 12;
inline constexpr std::size_t kBoots = 13;
inline constexpr std::size_t kUpperColorBegin = 14;
inline constexpr std::size_t kLowerColorBegin = 23;
inline constexpr std::size_t kColorCount = 9;

inline constexpr std::array<std::string_view, kColorCount> kColorNames = {
    "black", "white", "gray", "red", "green",
    "blue",  "yellow", "brown", "purple"};

// Human-readable name of slot `index`, e.g. "upper_color_red".
std::string slot_name(std::size_t index);

}  // namespace attr

// 32 attribute values, either hard labels or predicted probabilities.
class AttributeVector {
 public:
  enum class Mode { kBinary, kProb };
  using Values = std::array<double, attr::kCount>;

  // All-zero probability vector.
  AttributeVector();

  // Validates the group constraints: one-hot body and hair, at least one
  // upper and one lower color, every value exactly 0 or 1.
  static AttributeVector binary(const Values& bits);
  static AttributeVector binary(std::span<const double> bits);
  // Validates that every value lies in [0, 1].
  static AttributeVector prob(const Values& values);
  static AttributeVector prob(std::span<const double> values);

  // Empty string when `bits` satisfies the binary invariants, otherwise the
  // first violated constraint.
  static std::string binary_violation(std::span<const double> bits);

  Mode mode() const { return mode_; }
  const Values& values() const { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }
  static constexpr std::size_t size() { return attr::kCount; }

  // Same values relabelled as probabilities.
  AttributeVector as_prob() const;

  friend bool operator==(const AttributeVector&,
                         const AttributeVector&) = default;

 private:
  AttributeVector(const Values& values, Mode mode)
      : values_(values), mode_(mode) {}

  Values values_{};
  Mode mode_ = Mode::kProb;
};

// Appearance (Re-ID) feature. Dimension 0 means "no feature available".
class Embedding {
 public:
  Embedding() = default;
  // Throws InvariantError on non-finite entries.
  explicit Embedding(Eigen::VectorXd values);
  explicit Embedding(std::span<const double> values);

  std::size_t dim() const { return static_cast<std::size_t>(values_.size()); }
  bool empty() const { return values_.size() == 0; }
  const Eigen::VectorXd& values() const { return values_; }
  double norm() const { return values_.norm(); }

  friend bool operator==(const Embedding& a, const Embedding& b) {
    return a.values_.size() == b.values_.size() &&
           (a.values_.array() == b.values_.array()).all();
  }

 private:
  Eigen::VectorXd values_;
};

// One per-frame observation.
struct Detection {
  int frame = 1;
  BBox box;
  double confidence = 1.0;
  Embedding embedding;
  AttributeVector attr_obs;

  bool has_features() const { return !embedding.empty(); }
};

// Throws InvariantError if frame < 1, the box is invalid, or confidence is
// outside [0, 1].
void require_valid(const Detection& det);

// One ground-truth row. `active` mirrors the MOTChallenge confidence column:
// inactive rows are ignore regions during evaluation.
struct GtEntry {
  int frame = 1;
  int identity = 1;
  BBox box;
  double visibility = 1.0;
  bool active = true;

  friend bool operator==(const GtEntry&, const GtEntry&) = default;
};

// A tracker output row.
struct TrackOutput {
  int frame = 1;
  int identity = 0;
  BBox box;
  double confidence = 1.0;

  friend bool operator==(const TrackOutput&, const TrackOutput&) = default;
};

}  // namespace attmot

#endif  // ATTMOT_TYPES_H_
