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

#include "attmot/distances.h"

#include <algorithm>
#include <cmath>

namespace attmot {

double intersection_area(const BBox& a, const BBox& b) {
  const double w = std::min(a.right(), b.right()) - std::max(a.left, b.left);
  const double h = std::min(a.bottom(), b.bottom()) - std::max(a.top, b.top);
  if (w <= 0.0 || h <= 0.0) return 0.0;
  return w * h;
}

double iou(const BBox& a, const BBox& b) {
  const double inter = intersection_area(a, b);
  if (inter == 0.0) return 0.0;
  const double uni = a.area() + b.area() - inter;
  return std::clamp(inter / uni, 0.0, 1.0);
}

double occlusion_fraction(const BBox& target, const BBox& occluder) {
  const double area = target.area();
  if (area <= 0.0) return 0.0;
  return std::clamp(intersection_area(target, occluder) / area, 0.0, 1.0);
}

double cosine_distance(const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
  if (u.size() != v.size()) {
    throw InvariantError("cosine_distance: dimension mismatch");
  }
  const double nu = u.norm();
  const double nv = v.norm();
  if (nu == 0.0 || nv == 0.0) throw InvariantError("degenerate embedding");
  return std::clamp(1.0 - u.dot(v) / (nu * nv), 0.0, 2.0);
}

double cosine_distance(const Embedding& u, const Embedding& v) {
  return cosine_distance(u.values(), v.values());
}

double attribute_distance(const AttributeVector& p, const AttributeVector& q) {
  double s = 0.0;
  for (std::size_t j = 0; j < attr::kCount; ++j) s += std::abs(p[j] - q[j]);
  return s / static_cast<double>(attr::kCount);
}

}  // namespace attmot
