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
#include <filesystem>
#include <span>
#include <vector>

#include "lossydetect/util/random.h"

namespace lossydetect {

inline constexpr int kClipSamples = 88200;  // 2 s at 44.1 kHz
inline constexpr int kFftSize = 1024;
inline constexpr int kHopSize = 512;
inline constexpr int kNumBins = kFftSize / 2 + 1;  // 513
inline constexpr int kNumFrames = kClipSamples / kHopSize + 1;  // 173
inline constexpr double kBinHz = 44100.0 / kFftSize;  // exact in binary
inline constexpr double kNyquistHz = 22050.0;
inline constexpr float kFloorDb = -80.0f;

// Mono audio at 44.1 kHz, samples in [-1, 1].
struct AudioClip {
  std::vector<float> samples;
  int sample_rate_hz = 44100;

  std::size_t size() const { return samples.size(); }
  double duration_s() const {
    return static_cast<double>(samples.size()) / sample_rate_hz;
  }
};

// Log-magnitude spectrogram, row-major [bin][frame]; row 0 is DC.
struct Spectrogram {
  int n_bins = kNumBins;
  int n_frames = 0;
  std::vector<float> values;

  float& at(int bin, int frame) {
    return values[static_cast<std::size_t>(bin) * n_frames + frame];
  }
  float at(int bin, int frame) const {
    return values[static_cast<std::size_t>(bin) * n_frames + frame];
  }
  float min_value() const;
  float max_value() const;
  static constexpr double bin_hz() { return kBinHz; }
  static constexpr double frame_hop_s() { return kHopSize / 44100.0; }
};

struct MaskSpec {
  double cutoff_hz = kNyquistHz;
  float fill_value = 0.0f;
  int first_masked_bin = kNumBins;
};

// Channels averaged to mono. Throws FormatError("sample_rate") for rates other
// than 44.1 kHz and IoError for unreadable files.
AudioClip load_audio(const std::filesystem::path& path);

// Uniform start offset in [0, n - 88200]. Shorter clips are zero-padded to
// 88200 samples (with a warning) and returned unshifted.
AudioClip random_crop(const AudioClip& clip, Rng& rng,
                      double duration_s = 2.0);

// Hann-windowed STFT magnitude (n_fft 1024, hop 512, centered with reflect
// padding) of an arbitrary-length signal, row-major [bin][frame], linear scale.
Spectrogram stft_magnitude(std::span<const float> samples);

// Magnitude STFT converted to dB relative to its own maximum and floored at
// -80 dB. An all-zero input yields the floor everywhere.
Spectrogram spectrogram(const AudioClip& clip);
Spectrogram spectrogram(std::span<const float> samples);

// Smallest k with k * 44100/1024 > f_hz. Throws ArgumentError outside
// [0, 22050].
int bin_of_frequency(double f_hz);

// Sets every row >= bin_of_frequency(cutoff_hz) to the minimum of `s`.
Spectrogram apply_fixed_mask(const Spectrogram& s, double cutoff_hz);
MaskSpec apply_fixed_mask_in_place(Spectrogram& s, double cutoff_hz);

struct MaskedSpectrogram {
  Spectrogram spectrogram;
  MaskSpec mask;
};

// Cutoff drawn uniformly from [f_low_hz, 22050]. Throws ArgumentError if
// f_low_hz is outside [0, 22050].
MaskedSpectrogram apply_random_mask(const Spectrogram& s, Rng& rng,
                                    double f_low_hz = 14000.0);
MaskSpec apply_random_mask_in_place(Spectrogram& s, Rng& rng,
                                    double f_low_hz = 14000.0);

// Debug export: low frequencies at the bottom, dB range [-80, 0].
void write_spectrogram_png(const std::filesystem::path& path,
                           const Spectrogram& s);

}  // namespace lossydetect
