// Copyright 2026 The lossydetect Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "lossydetect/util/png.h"

#include <png.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <memory>
#include <vector>

#include "lossydetect/util/errors.h"

namespace lossydetect {
namespace {

// Anchor points of a viridis-like ramp.
constexpr std::array<std::array<float, 3>, 9> kRamp = {{
    {0.267f, 0.005f, 0.329f},
    {0.283f, 0.141f, 0.458f},
    {0.254f, 0.265f, 0.530f},
    {0.207f, 0.372f, 0.553f},
    {0.164f, 0.471f, 0.558f},
    {0.128f, 0.567f, 0.551f},
    {0.135f, 0.659f, 0.518f},
    {0.267f, 0.749f, 0.441f},
    {0.993f, 0.906f, 0.144f},
}};

std::array<uint8_t, 3> ramp(float x) {
  x = std::clamp(x, 0.0f, 1.0f) * (kRamp.size() - 1);
  const auto i = std::min<std::size_t>(static_cast<std::size_t>(x), kRamp.size() - 2);
  const float f = x - static_cast<float>(i);
  std::array<uint8_t, 3> rgb{};
  for (int c = 0; c < 3; ++c) {
    const float v = kRamp[i][c] * (1 - f) + kRamp[i + 1][c] * f;
    rgb[c] = static_cast<uint8_t>(std::lround(v * 255.0f));
  }
  return rgb;
}

}  // namespace

void write_png_rgb(const std::filesystem::path& path, int width, int height,
                   std::span<const uint8_t> rgb) {
  if (width <= 0 || height <= 0 ||
      rgb.size() != static_cast<std::size_t>(width) * height * 3) {
    throw ArgumentError("write_png_rgb: buffer does not match dimensions");
  }
  std::unique_ptr<FILE, int (*)(FILE*)> fp(std::fopen(path.c_str(), "wb"),
                                           &std::fclose);
  if (!fp) throw IoError("cannot open " + path.string() + " for writing");
  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw IoError("libpng initialisation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("libpng failed writing " + path.string());
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, width, height, 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < height; ++y) {
    png_write_row(png, const_cast<png_bytep>(rgb.data() +
                                             static_cast<std::size_t>(y) * width * 3));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

void write_heatmap_png(const std::filesystem::path& path, int rows, int cols,
                       std::span<const float> values, float lo, float hi) {
  if (values.size() != static_cast<std::size_t>(rows) * cols) {
    throw ArgumentError("write_heatmap_png: value count mismatch");
  }
  const float span = hi > lo ? hi - lo : 1.0f;
  std::vector<uint8_t> rgb(static_cast<std::size_t>(rows) * cols * 3);
  for (int r = 0; r < rows; ++r) {
    const int y = rows - 1 - r;  // row 0 at the bottom
    for (int c = 0; c < cols; ++c) {
      const auto px = ramp((values[static_cast<std::size_t>(r) * cols + c] - lo) / span);
      std::copy(px.begin(), px.end(),
                rgb.begin() + (static_cast<std::size_t>(y) * cols + c) * 3);
    }
  }
  write_png_rgb(path, cols, rows, rgb);
}

}  // namespace lossydetect
