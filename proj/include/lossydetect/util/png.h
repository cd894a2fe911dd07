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

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>

namespace lossydetect {

// Writes an 8-bit RGB PNG. `rgb` holds width*height*3 bytes, row-major, top row
// first.
void write_png_rgb(const std::filesystem::path& path, int width, int height,
                   std::span<const uint8_t> rgb);

// Maps a row-major matrix with `rows` frequency rows (row 0 = lowest
// frequency) to a PNG with low frequencies at the bottom, using a
// viridis-like ramp over [lo, hi].
void write_heatmap_png(const std::filesystem::path& path, int rows, int cols,
                       std::span<const float> values, float lo, float hi);

}  // namespace lossydetect
