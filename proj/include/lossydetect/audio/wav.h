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

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace lossydetect {

struct WavInfo {
  int sample_rate_hz = 0;
  int channels = 0;
  int bits_per_sample = 0;
  bool is_float = false;
  std::size_t frames = 0;
};

struct WavAudio {
  WavInfo info;
  // Interleaved samples scaled to [-1, 1].
  std::vector<float> samples;
};

// Reads only the header chunks. Throws IoError if the file is missing or not a
// RIFF/WAVE PCM or IEEE-float file.
WavInfo read_wav_info(const std::filesystem::path& path);

WavAudio read_wav(const std::filesystem::path& path);

// 16-bit PCM writer. `interleaved.size()` must be a multiple of `channels`.
void write_wav_pcm16(const std::filesystem::path& path, int sample_rate_hz,
                     int channels, std::span<const int16_t> interleaved);

}  // namespace lossydetect
