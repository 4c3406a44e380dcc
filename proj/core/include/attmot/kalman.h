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

// Constant-velocity Kalman filter over (cx, cy, aspect = w/h, h) and their
// velocities, with noise scaled by the box height.

#ifndef ATTMOT_KALMAN_H_
#define ATTMOT_KALMAN_H_

#include <Eigen/Core>

#include "attmot/types.h"

namespace attmot::assoc {

using Vector8 = Eigen::Matrix<double, 8, 1>;
using Matrix8 = Eigen::Matrix<double, 8, 8>;
using Vector4 = Eigen::Matrix<double, 4, 1>;
using Matrix4 = Eigen::Matrix<double, 4, 4>;

// 0.95 quantile of the chi-square distribution with 4 degrees of freedom.
inline constexpr double kGatingThreshold4 = 9.4877;

struct KalmanConfig {
  double std_weight_position = 1.0 / 20.0;
  double std_weight_velocity = 1.0 / 160.0;
};

struct KalmanState {
  Vector8 mean = Vector8::Zero();
  Matrix8 covariance = Matrix8::Identity();
};

// (cx, cy, w/h, h).
Vector4 measurement_of(const BBox& box);
BBox box_of(const KalmanState& state);

KalmanState kalman_init(const BBox& box, const KalmanConfig& config = {});
KalmanState kalman_predict(const KalmanState& state, const KalmanConfig& config = {});
// Throws InvariantError when the innovation covariance is not positive
// definite.
KalmanState kalman_update(const KalmanState& state, const BBox& box,
                          const KalmanConfig& config = {});

struct Projection {
  Vector4 mean;
  Matrix4 covariance;  // includes measurement noise
};
Projection kalman_project(const KalmanState& state, const KalmanConfig& config = {});

// Squared Mahalanobis distance of z under N(mean, covariance). Throws
// InvariantError when the covariance is singular.
double mahalanobis_squared(const Vector4& mean, const Matrix4& covariance,
                           const Vector4& z);
double gating_distance(const KalmanState& state, const BBox& box,
                       const KalmanConfig& config = {});

}  // namespace attmot::assoc

#endif  // ATTMOT_KALMAN_H_
