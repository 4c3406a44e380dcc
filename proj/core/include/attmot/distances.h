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

// Pure geometric and feature distances shared by the generator, the tracker
// and the evaluator.

#ifndef ATTMOT_DISTANCES_H_
#define ATTMOT_DISTANCES_H_

#include <Eigen/Core>

#include "attmot/types.h"

namespace attmot {

double intersection_area(const BBox& a, const BBox& b);

// Intersection over union in [0, 1].
double iou(const BBox& a, const BBox& b);

// Fraction of `target` covered by `occluder`: |target ∩ occluder| / |target|.
double occlusion_fraction(const BBox& target, const BBox& occluder);

// 1 - cos(u, v), clamped to [0, 2]. Throws InvariantError("degenerate
// embedding") on a zero vector and on a dimension mismatch.
double cosine_distance(const Eigen::VectorXd& u, const Eigen::VectorXd& v);
double cosine_distance(const Embedding& u, const Embedding& v);

// Mean absolute difference over the 32 slots, in [0, 1].
double attribute_distance(const AttributeVector& p, const AttributeVector& q);

}  // namespace attmot

#endif  // ATTMOT_DISTANCES_H_
