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

#include "attmot/kalman.h"

#include <Eigen/Cholesky>

namespace attmot::assoc {
namespace {

Matrix8 transition() {
  Matrix8 f = Matrix8::Identity();
  for (int i = 0; i < 4; ++i) f(i, i + 4) = 1.0;
  return f;
}

Eigen::Matrix<double, 4, 8> observation() {
  Eigen::Matrix<double, 4, 8> h = Eigen::Matrix<double, 4, 8>::Zero();
  for (int i = 0; i < 4; ++i) h(i, i) = 1.0;
  return h;
}

Matrix4 measurement_noise(double h, const KalmanConfig& c) {
  Vector4 std;
  std << c.std_weight_position * h, c.std_weight_position * h, 1e-1,
      c.std_weight_position * h;
  return std.array().square().matrix().asDiagonal();
}

}  // namespace

Vector4 measurement_of(const BBox& box) {
  Vector4 z;
  z << box.center_x(), box.center_y(), box.width / box.height, box.height;
  return z;
}

BBox box_of(const KalmanState& state) {
  const double h = state.mean[3];
  const double w = state.mean[2] * h;
  return BBox::from_center(state.mean[0], state.mean[1], w, h);
}

KalmanState kalman_init(const BBox& box, const KalmanConfig& c) {
  require_valid(box, "kalman_init");
  KalmanState s;
  s.mean.head<4>() = measurement_of(box);
  s.mean.tail<4>().setZero();
  const double h = box.height;
  const double p = c.std_weight_position;
  const double v = c.std_weight_velocity;
  Vector8 std;
  std << 2 * p * h, 2 * p * h, 1e-2, 2 * p * h, 10 * v * h, 10 * v * h, 1e-5, 10 * v * h;
  s.covariance = std.array().square().matrix().asDiagonal();
  return s;
}

KalmanState kalman_predict(const KalmanState& state, const KalmanConfig& c) {
  const double h = state.mean[3];
  const double p = c.std_weight_position;
  const double v = c.std_weight_velocity;
  Vector8 std;
  std << p * h, p * h, 1e-2, p * h, v * h, v * h, 1e-5, v * h;
  const Matrix8 q = std.array().square().matrix().asDiagonal();
  const Matrix8 f = transition();
  KalmanState out;
  out.mean = f * state.mean;
  out.covariance = f * state.covariance * f.transpose() + q;
  out.covariance = 0.5 * (out.covariance + out.covariance.transpose()).eval();
  return out;
}

Projection kalman_project(const KalmanState& state, const KalmanConfig& c) {
  const auto h = observation();
  Projection p;
  p.mean = h * state.mean;
  p.covariance = h * state.covariance * h.transpose() + measurement_noise(state.mean[3], c);
  return p;
}

KalmanState kalman_update(const KalmanState& state, const BBox& box, const KalmanConfig& c) {
  require_valid(box, "kalman_update");
  const Projection proj = kalman_project(state, c);
  const Eigen::LLT<Matrix4> llt(proj.covariance);
  if (llt.info() != Eigen::Success) {
    throw InvariantError("innovation covariance is not positive definite");
  }
  const auto h = observation();
  // K = P H^T S^-1, solved as S K^T = H P.
  const Eigen::Matrix<double, 8, 4> gain =
      llt.solve(h * state.covariance).transpose();
  const Vector4 innovation = measurement_of(box) - proj.mean;
  KalmanState out;
  out.mean = state.mean + gain * innovation;
  out.covariance = state.covariance - gain * proj.covariance * gain.transpose();
  out.covariance = 0.5 * (out.covariance + out.covariance.transpose()).eval();
  return out;
}

double mahalanobis_squared(const Vector4& mean, const Matrix4& covariance, const Vector4& z) {
  const Eigen::LLT<Matrix4> llt(covariance);
  if (llt.info() != Eigen::Success) {
    throw InvariantError("singular covariance in Mahalanobis distance");
  }
  const Vector4 w = llt.matrixL().solve(z - mean);
  return w.squaredNorm();
}

double gating_distance(const KalmanState& state, const BBox& box, const KalmanConfig& c) {
  const Projection p = kalman_project(state, c);
  return mahalanobis_squared(p.mean, p.covariance, measurement_of(box));
}

}  // namespace attmot::assoc
