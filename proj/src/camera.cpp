// Copyright 2026 The adapter3d Authors. All Rights Reserved.
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

#include "adapter3d/camera.hpp"

#include <cmath>

#include "adapter3d/errors.hpp"

namespace adapter3d {

namespace {

Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

Vec3 normalized(const Vec3& v) {
  const double n = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
  return {v[0] / n, v[1] / n, v[2] / n};
}

std::array<double, 9> default_intrinsics(double focal) {
  return {focal, 0.0, 0.5, 0.0, focal, 0.5, 0.0, 0.0, 1.0};
}

}  // namespace

CameraPose CameraPose::identity() {
  CameraPose p;
  p.extrinsics = {1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1};
  p.intrinsics = default_intrinsics(1.0);
  return p;
}

CameraPose CameraPose::orbit(double yaw, double pitch, double radius, double focal) {
  const Vec3 center{radius * std::cos(pitch) * std::sin(yaw), radius * std::sin(pitch),
                    radius * std::cos(pitch) * std::cos(yaw)};
  const Vec3 forward = normalized({-center[0], -center[1], -center[2]});
  const Vec3 right = normalized(cross(forward, {0.0, 1.0, 0.0}));
  const Vec3 down = cross(forward, right);
  CameraPose p;
  const Vec3 rows[3] = {right, down, forward};
  for (int i = 0; i < 3; ++i) {
    double t = 0.0;
    for (int j = 0; j < 3; ++j) {
      p.extrinsics[i * 4 + j] = rows[i][j];
      t -= rows[i][j] * center[j];
    }
    p.extrinsics[i * 4 + 3] = t;
  }
  p.extrinsics[12] = 0.0;
  p.extrinsics[13] = 0.0;
  p.extrinsics[14] = 0.0;
  p.extrinsics[15] = 1.0;
  p.intrinsics = default_intrinsics(focal);
  return p;
}

void CameraPose::validate() const {
  for (double v : extrinsics)
    if (!std::isfinite(v)) throw ConfigError("camera extrinsics not finite");
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      double d = 0.0;
      for (int k = 0; k < 3; ++k) d += extrinsics[i * 4 + k] * extrinsics[j * 4 + k];
      if (std::fabs(d - (i == j ? 1.0 : 0.0)) > 1e-6) {
        throw ConfigError("camera extrinsics rotation block is not orthonormal");
      }
    }
  }
  if (extrinsics[12] != 0.0 || extrinsics[13] != 0.0 || extrinsics[14] != 0.0 ||
      extrinsics[15] != 1.0) {
    throw ConfigError("camera extrinsics bottom row must be (0,0,0,1)");
  }
  const auto& k = intrinsics;
  if (k[3] != 0.0 || k[6] != 0.0 || k[7] != 0.0) throw ConfigError("intrinsics not upper-triangular");
  if (!(k[0] > 0.0 && k[4] > 0.0 && k[8] > 0.0)) throw ConfigError("intrinsics diagonal must be positive");
}

std::array<double, 25> CameraPose::flatten() const {
  std::array<double, 25> out{};
  for (int i = 0; i < 16; ++i) out[i] = extrinsics[i];
  for (int i = 0; i < 9; ++i) out[16 + i] = intrinsics[i];
  return out;
}

Vec3 CameraPose::camera_center() const {
  // c = -R^T t
  Vec3 c{};
  for (int j = 0; j < 3; ++j)
    for (int i = 0; i < 3; ++i) c[j] -= extrinsics[i * 4 + j] * extrinsics[i * 4 + 3];
  return c;
}

CameraPose PoseDistribution::sample(Rng& rng) const {
  const double yaw = rng.uniform(yaw_min, yaw_max);
  const double pitch = rng.uniform(pitch_min, pitch_max);
  return CameraPose::orbit(yaw, pitch, radius);
}

}  // namespace adapter3d
