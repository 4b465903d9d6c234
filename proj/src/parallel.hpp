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

// Internal helpers shared by the OpenMP kernel translation units.

#ifndef ADAPTER3D_SRC_PARALLEL_HPP
#define ADAPTER3D_SRC_PARALLEL_HPP

#include <algorithm>
#include <cstddef>

#include "adapter3d/kernels.hpp"

namespace adapter3d::kernels {

// Below this many multiply-adds a loop runs on the calling thread.
inline constexpr std::size_t kParallelThreshold = 1u << 15;
// Fixed partial-sum count for scatter reductions.
inline constexpr std::size_t kReductionChunks = 16;

struct BilinearCell {
  std::size_t i00, i01, i10, i11;  // flat node offsets (row, col)
  double w00, w01, w10, w11;
};

inline BilinearCell plane_cell(std::size_t resolution, std::size_t channels, std::size_t plane,
                               double u, double v) {
  const double pc = plane_coordinate(u, resolution);
  const double pr = plane_coordinate(v, resolution);
  const auto c0 = static_cast<std::size_t>(pc);
  const auto r0 = static_cast<std::size_t>(pr);
  const auto c1 = std::min(c0 + 1, resolution - 1);
  const auto r1 = std::min(r0 + 1, resolution - 1);
  const double fc = pc - static_cast<double>(c0);
  const double fr = pr - static_cast<double>(r0);
  const std::size_t base = plane * resolution * resolution;
  return {(base + r0 * resolution + c0) * channels, (base + r0 * resolution + c1) * channels,
          (base + r1 * resolution + c0) * channels, (base + r1 * resolution + c1) * channels,
          (1 - fr) * (1 - fc), (1 - fr) * fc, fr * (1 - fc), fr * fc};
}

inline void clamp_point(const double* p, double& x, double& y, double& z) {
  x = std::clamp(p[0], -1.0, 1.0);
  y = std::clamp(p[1], -1.0, 1.0);
  z = std::clamp(p[2], -1.0, 1.0);
}

// out[0..M) = XY(x,y) + XZ(x,z) + YZ(y,z)
inline void triplane_point_sample(const PlaneView& planes, const double* point, double* out) {
  const std::size_t m = planes.channels;
  double x, y, z;
  clamp_point(point, x, y, z);
  const BilinearCell cells[3] = {plane_cell(planes.resolution, m, 0, x, y),
                                 plane_cell(planes.resolution, m, 1, x, z),
                                 plane_cell(planes.resolution, m, 2, y, z)};
  const double* d = planes.data.data();
  std::fill(out, out + m, 0.0);
  for (const auto& c : cells) {
    for (std::size_t ch = 0; ch < m; ++ch) {
      out[ch] += c.w00 * d[c.i00 + ch] + c.w01 * d[c.i01 + ch] + c.w10 * d[c.i10 + ch] +
                 c.w11 * d[c.i11 + ch];
    }
  }
}

inline void triplane_point_scatter(const PlaneView& planes, const double* point,
                                   const double* grad, double* dplanes) {
  const std::size_t m = planes.channels;
  double x, y, z;
  clamp_point(point, x, y, z);
  const BilinearCell cells[3] = {plane_cell(planes.resolution, m, 0, x, y),
                                 plane_cell(planes.resolution, m, 1, x, z),
                                 plane_cell(planes.resolution, m, 2, y, z)};
  for (const auto& c : cells) {
    for (std::size_t ch = 0; ch < m; ++ch) {
      dplanes[c.i00 + ch] += c.w00 * grad[ch];
      dplanes[c.i01 + ch] += c.w01 * grad[ch];
      dplanes[c.i10 + ch] += c.w10 * grad[ch];
      dplanes[c.i11 + ch] += c.w11 * grad[ch];
    }
  }
}

}  // namespace adapter3d::kernels

#endif  // ADAPTER3D_SRC_PARALLEL_HPP
