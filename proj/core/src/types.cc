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

#include "attmot/types.h"

#include <algorithm>
#include <cmath>

namespace attmot {

bool BBox::valid() const {
  return std::isfinite(left) && std::isfinite(top) && std::isfinite(width) &&
         std::isfinite(height) && width > 0.0 && height > 0.0;
}

void require_valid(const BBox& box, std::string_view what) {
  if (!box.valid()) {
    throw InvariantError(std::string(what) + ": non-positive or non-finite box");
  }
}

namespace attr {

std::string slot_name(std::size_t index) {
  static constexpr std::array<std::string_view, 3> kBody = {"thin", "medium",
                                                            "fat"};
  static constexpr std::array<std::string_view, 3> kHair = {"bald", "short",
                                                            "long"};
  if (index == kGender) return "male";
  if (index >= kBodyBegin && index < kBodyBegin + kBodyCount) {
    return "body_" + std::string(kBody[index - kBodyBegin]);
  }
  if (index >= kHairBegin && index < kHairBegin + kHairCount) {
    return "hair_" + std::string(kHair[index - kHairBegin]);
  }
  switch (index) {
    case kLongSleeve: return "long_sleeve";
    case kUpperLong: return "upper_long";
    case kSkirt: return "skirt";
    case kLowerLong: return "lower_long";
    case kBackpack: return "backpack";
    case kHat: return "hat";
    case kBoots: return "boots";
    default: break;
  }
  if (index >= kUpperColorBegin && index < kUpperColorBegin + kColorCount) {
    return "upper_" + std::string(kColorNames[index - kUpperColorBegin]);
  }
  if (index >= kLowerColorBegin && index < kLowerColorBegin + kColorCount) {
    return "lower_" + std::string(kColorNames[index - kLowerColorBegin]);
  }
  throw InvariantError("attribute index out of range: " +
                       std::to_string(index));
}

}  // namespace attr

namespace {

AttributeVector::Values copy_values(std::span<const double> v) {
  if (v.size() != attr::kCount) {
    throw InvariantError("attribute vector must have 32 values, got " +
                         std::to_string(v.size()));
  }
  AttributeVector::Values out{};
  std::copy(v.begin(), v.end(), out.begin());
  return out;
}

double group_sum(std::span<const double> bits, std::size_t begin,
                 std::size_t count) {
  double s = 0.0;
  for (std::size_t i = begin; i < begin + count; ++i) s += bits[i];
  return s;
}

}  // namespace

AttributeVector::AttributeVector() = default;

std::string AttributeVector::binary_violation(std::span<const double> bits) {
  if (bits.size() != attr::kCount) {
    return "expected 32 values, got " + std::to_string(bits.size());
  }
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i] != 0.0 && bits[i] != 1.0) {
      return "non-binary value at slot " + std::to_string(i);
    }
  }
  if (group_sum(bits, attr::kBodyBegin, attr::kBodyCount) != 1.0) {
    return "body-shape group must be one-hot";
  }
  if (group_sum(bits, attr::kHairBegin, attr::kHairCount) != 1.0) {
    return "hair-length group must be one-hot";
  }
  if (group_sum(bits, attr::kUpperColorBegin, attr::kColorCount) < 1.0) {
    return "upper-color group needs at least one color";
  }
  if (group_sum(bits, attr::kLowerColorBegin, attr::kColorCount) < 1.0) {
    return "lower-color group needs at least one color";
  }
  return {};
}

AttributeVector AttributeVector::binary(const Values& bits) {
  const std::string why = binary_violation(bits);
  if (!why.empty()) throw InvariantError("invalid binary attributes: " + why);
  return AttributeVector(bits, Mode::kBinary);
}

AttributeVector AttributeVector::binary(std::span<const double> bits) {
  return binary(copy_values(bits));
}

AttributeVector AttributeVector::prob(const Values& values) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!(values[i] >= 0.0 && values[i] <= 1.0)) {
      throw InvariantError("attribute probability outside [0,1] at slot " +
                           std::to_string(i));
    }
  }
  return AttributeVector(values, Mode::kProb);
}

AttributeVector AttributeVector::prob(std::span<const double> values) {
  return prob(copy_values(values));
}

AttributeVector AttributeVector::as_prob() const {
  return AttributeVector(values_, Mode::kProb);
}

Embedding::Embedding(Eigen::VectorXd values) : values_(std::move(values)) {
  if (!values_.allFinite()) throw InvariantError("embedding has non-finite entries");
}

Embedding::Embedding(std::span<const double> values)
    : Embedding(Eigen::Map<const Eigen::VectorXd>(
          values.data(), static_cast<Eigen::Index>(values.size()))) {}

void require_valid(const Detection& det) {
  if (det.frame < 1) throw InvariantError("detection frame must be >= 1");
  require_valid(det.box, "detection");
  if (!(det.confidence >= 0.0 && det.confidence <= 1.0)) {
    throw InvariantError("detection confidence outside [0,1]");
  }
}

}  // namespace attmot
