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

#include "adapter3d/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>

#include "adapter3d/errors.hpp"

namespace adapter3d {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using File = std::unique_ptr<std::FILE, FileCloser>;

void check_rgb(const RGBImage& img) {
  if (!img.pixels.defined() || img.pixels.rank() != 3 || img.pixels.dim(0) != 3) {
    throw ConfigError("expected a [3,H,W] image");
  }
}

}  // namespace

std::uint8_t to_byte(double x) {
  if (std::isnan(x)) throw NumericalError("cannot quantize a NaN pixel");
  // nearbyint honours the default round-to-nearest-even mode.
  const double v = std::nearbyint((x + 1.0) * 0.5 * 255.0);
  return static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
}

double from_byte(std::uint8_t b) { return static_cast<double>(b) / 255.0 * 2.0 - 1.0; }

std::vector<std::uint8_t> to_bytes(const RGBImage& img) {
  check_rgb(img);
  const std::size_t h = img.height(), w = img.width();
  std::vector<std::uint8_t> out(h * w * 3);
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < h * w; ++i) out[i * 3 + c] = to_byte(img.pixels[c * h * w + i]);
  return out;
}

void write_png(const std::string& path, const RGBImage& img) {
  const auto bytes = to_bytes(img);
  const auto h = static_cast<png_uint_32>(img.height());
  const auto w = static_cast<png_uint_32>(img.width());
  File f(std::fopen(path.c_str(), "wb"));
  if (!f) throw ConfigError("cannot write '" + path + "'");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw InternalError("libpng initialisation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw ConfigError("libpng failed while writing '" + path + "'");
  }
  png_init_io(png, f.get());
  png_set_IHDR(png, info, w, h, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (png_uint_32 row = 0; row < h; ++row) {
    png_write_row(png, bytes.data() + static_cast<std::size_t>(row) * w * 3);
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

RGBImage read_png(const std::string& path) {
  File f(std::fopen(path.c_str(), "rb"));
  if (!f) throw ConfigError("cannot open image '" + path + "'");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw InternalError("libpng initialisation failed");
  }
  std::vector<std::uint8_t> bytes;
  png_uint_32 w = 0, h = 0;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw ConfigError("'" + path + "' is not a readable PNG");
  }
  png_init_io(png, f.get());
  png_read_info(png, info);
  png_set_expand(png);
  png_set_strip_16(png);
  png_set_strip_alpha(png);
  png_set_gray_to_rgb(png);
  png_read_update_info(png, info);
  w = png_get_image_width(png, info);
  h = png_get_image_height(png, info);
  if (png_get_rowbytes(png, info) != static_cast<std::size_t>(w) * 3) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw ConfigError("'" + path + "' could not be converted to 8-bit RGB");
  }
  bytes.resize(static_cast<std::size_t>(w) * h * 3);
  std::vector<png_bytep> rows(h);
  for (png_uint_32 r = 0; r < h; ++r) rows[r] = bytes.data() + static_cast<std::size_t>(r) * w * 3;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  const std::size_t n = static_cast<std::size_t>(w) * h;
  std::vector<double> pixels(3 * n);
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < n; ++i) pixels[c * n + i] = from_byte(bytes[i * 3 + c]);
  return {ad::Var::constant({3, h, w}, std::move(pixels))};
}

RGBImage tile_grid(const std::vector<RGBImage>& tiles, std::size_t columns) {
  if (tiles.empty() || columns == 0) throw ConfigError("tile_grid: need tiles and columns >= 1");
  for (const auto& t : tiles) check_rgb(t);
  const std::size_t th = tiles[0].height(), tw = tiles[0].width();
  for (const auto& t : tiles)
    if (t.height() != th || t.width() != tw) throw ConfigError("tile_grid: tiles differ in size");
  const std::size_t rows = (tiles.size() + columns - 1) / columns;
  const std::size_t H = rows * th, W = columns * tw;
  std::vector<double> out(3 * H * W, -1.0);
  for (std::size_t k = 0; k < tiles.size(); ++k) {
    const std::size_t oy = (k / columns) * th, ox = (k % columns) * tw;
    for (std::size_t c = 0; c < 3; ++c)
      for (std::size_t y = 0; y < th; ++y)
        for (std::size_t x = 0; x < tw; ++x)
          out[(c * H + oy + y) * W + ox + x] = tiles[k].pixels[(c * th + y) * tw + x];
  }
  return {ad::Var::constant({3, H, W}, std::move(out))};
}

}  // namespace adapter3d
