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

#ifndef ADAPTER3D_CAMERA_HPP
#define ADAPTER3D_CAMERA_HPP

#include <array>
#include <utility>

#include "adapter3d/rng.hpp"

namespace adapter3d {

using Vec3 = std::array<double, 3>;

/// Pinhole camera. `extrinsics` maps world to camera coordinates (row-major
/// 4x4, OpenCV axes: x right, y down, z forward). `intrinsics` is in
/// normalized image units, so pixel centers span (0,1) on both axes.
struct CameraPose {
  std::array<double, 16> extrinsics{};
  std::array<double, 9> intrinsics{};

  static CameraPose identity();
  /// Camera on a sphere of `radius` around the origin, looking at it.
  /// yaw rotates about the world y axis, pitch raises the camera.
  static CameraPose orbit(double yaw, double pitch, double radius = 3.0, double focal = 1.0);

  /// Throws ConfigError unless the rotation block is orthonormal within 1e-6
  /// and the intrinsics are upper-triangular with a positive diagonal.
  void validate() const;

  /// extrinsics (16, row-major) followed by intrinsics (9): the conditioning
  /// vector appended to the latent code.
  std::array<double, 25> flatten() const;

  Vec3 camera_center() const;
};

struct PoseDistribution {
  double yaw_min = -0.6, yaw_max = 0.6;
  double pitch_min = -0.3, pitch_max = 0.3;
  double radius = 3.0;

  CameraPose sample(Rng& rng) const;
};

}  // namespace adapter3d

#endif  // ADAPTER3D_CAMERA_HPP
