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

// 8-bit RGB PNG in and out of the [-1,1] model range.

#ifndef ADAPTER3D_IMAGE_IO_HPP
#define ADAPTER3D_IMAGE_IO_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "adapter3d/generator.hpp"

namespace adapter3d {

/// (x+1)/2*255, rounded half to even, clamped to [0,255].
std::uint8_t to_byte(double x);
double from_byte(std::uint8_t b);

/// Interleaved HWC bytes.
std::vector<std::uint8_t> to_bytes(const RGBImage& img);

void write_png(const std::string& path, const RGBImage& img);
RGBImage read_png(const std::string& path);

/// Row-major tile layout; all tiles must share one size.
RGBImage tile_grid(const std::vector<RGBImage>& tiles, std::size_t columns);

}  // namespace adapter3d

#endif  // ADAPTER3D_IMAGE_IO_HPP
