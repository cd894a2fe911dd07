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

#include "lossydetect/frontend/spectral.h"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <mutex>
#include <numbers>

#include "lossydetect/audio/wav.h"
#include "lossydetect/util/errors.h"
#include "lossydetect/util/log.h"
#include "lossydetect/util/png.h"

namespace lossydetect {
namespace {

constexpr float kAmin = 1e-10f;

struct FftwFree {
  void operator()(void* p) const { fftwf_free(p); }
};
template <typename T>
using FftwBuffer = std::unique_ptr<T[], FftwFree>;

// One shared r2c plan; fftwf_execute_dft_r2c is thread-safe once planned.
class FftPlan {
 public:
  static const FftPlan& instance() {
    static const FftPlan plan;
    return plan;
  }
  void execute(float* in, fftwf_complex* out) const { fftwf_execute_dft_r2c(plan_, in, out); }

 private:
  FftPlan() {
    FftwBuffer<float> in(fftwf_alloc_real(kFftSize));
    FftwBuffer<fftwf_complex> out(fftwf_alloc_complex(kNumBins));
    plan_ = fftwf_plan_dft_r2c_1d(kFftSize, in.get(), out.get(), FFTW_ESTIMATE);
  }
  fftwf_plan plan_;
};

const std::vector<float>& hann_window() {
  static const std::vector<float> w = [] {
    std::vector<float> v(kFftSize);
    for (int n = 0; n < kFftSize; ++n) {
      v[n] = static_cast<float>(0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * n / kFftSize));
    }
    return v;
  }();
  return w;
}

// Reflect padding without repeating the edge sample.
float reflect_at(std::span<const float> x, long i) {
  const long n = static_cast<long>(x.size());
  if (n == 1) return x[0];
  const long period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return x[i < n ? i : period - i];
}

}  // namespace

float Spectrogram::min_value() const {
  return values.empty() ? 0.0f : *std::min_element(values.begin(), values.end());
}

float Spectrogram::max_value() const {
  return values.empty() ? 0.0f : *std::max_element(values.begin(), values.end());
}

AudioClip load_audio(const std::filesystem::path& path) {
  const WavAudio wav = read_wav(path);
  if (wav.info.sample_rate_hz != 44100) {
    throw FormatError("sample_rate", path.string() + ": expected 44100 Hz, got " +
                                         std::to_string(wav.info.sample_rate_hz));
  }
  AudioClip clip;
  const int ch = wav.info.channels;
  clip.samples.resize(wav.info.frames);
  for (std::size_t i = 0; i < wav.info.frames; ++i) {
    float acc = 0.0f;
    for (int c = 0; c < ch; ++c) acc += wav.samples[i * ch + c];
    clip.samples[i] = acc / static_cast<float>(ch);
  }
  return clip;
}

AudioClip random_crop(const AudioClip& clip, Rng& rng, double duration_s) {
  const auto length = static_cast<std::size_t>(std::llround(duration_s * clip.sample_rate_hz));
  AudioClip out;
  out.sample_rate_hz = clip.sample_rate_hz;
  if (clip.size() < length) {
    log_warn() << "clip of " << clip.size() << " samples zero-padded to " << length;
    out.samples = clip.samples;
    out.samples.resize(length, 0.0f);
    return out;
  }
  std::uniform_int_distribution<std::size_t> offset(0, clip.size() - length);
  const std::size_t start = offset(rng);
  out.samples.assign(clip.samples.begin() + start, clip.samples.begin() + start + length);
  return out;
}

Spectrogram stft_magnitude(std::span<const float> samples) {
  if (samples.empty()) throw ArgumentError("stft_magnitude: empty signal");
  Spectrogram s;
  s.n_bins = kNumBins;
  s.n_frames = static_cast<int>(samples.size() / kHopSize) + 1;
  s.values.assign(static_cast<std::size_t>(s.n_bins) * s.n_frames, 0.0f);
  const auto& window = hann_window();
  const FftPlan& plan = FftPlan::instance();
  FftwBuffer<float> frame(fftwf_alloc_real(kFftSize));
  FftwBuffer<fftwf_complex> spec(fftwf_alloc_complex(kNumBins));
  const long pad = kFftSize / 2;
  const long n = static_cast<long>(samples.size());
  for (int t = 0; t < s.n_frames; ++t) {
    const long start = static_cast<long>(t) * kHopSize - pad;
    if (start >= 0 && start + kFftSize <= n) {
      for (int k = 0; k < kFftSize; ++k) frame[k] = samples[start + k] * window[k];
    } else {
      for (int k = 0; k < kFftSize; ++k) frame[k] = reflect_at(samples, start + k) * window[k];
    }
    plan.execute(frame.get(), spec.get());
    for (int b = 0; b < kNumBins; ++b) {
      s.at(b, t) = std::hypot(spec[b][0], spec[b][1]);
    }
  }
  return s;
}

Spectrogram spectrogram(std::span<const float> samples) {
  Spectrogram s = stft_magnitude(samples);
  const float peak = s.max_value();
  if (peak < kAmin) {
    std::fill(s.values.begin(), s.values.end(), kFloorDb);
    return s;
  }
  const float ref_db = 20.0f * std::log10(peak);
  for (float& v : s.values) {
    v = std::max(kFloorDb, 20.0f * std::log10(std::max(v, kAmin)) - ref_db);
  }
  return s;
}

Spectrogram spectrogram(const AudioClip& clip) { return spectrogram(clip.samples); }

int bin_of_frequency(double f_hz) {
  if (!(f_hz >= 0.0 && f_hz <= kNyquistHz)) {
    throw ArgumentError("frequency outside [0, 22050] Hz: " + std::to_string(f_hz));
  }
  int k = static_cast<int>(std::floor(f_hz / kBinHz)) + 1;
  while (k > 0 && (k - 1) * kBinHz > f_hz) --k;
  while (k * kBinHz <= f_hz) ++k;
  return k;
}

MaskSpec apply_fixed_mask_in_place(Spectrogram& s, double cutoff_hz) {
  MaskSpec mask;
  mask.cutoff_hz = cutoff_hz;
  mask.first_masked_bin = std::min(bin_of_frequency(cutoff_hz), s.n_bins);
  mask.fill_value = s.min_value();
  std::fill(s.values.begin() + static_cast<std::ptrdiff_t>(mask.first_masked_bin) * s.n_frames,
            s.values.end(), mask.fill_value);
  return mask;
}

Spectrogram apply_fixed_mask(const Spectrogram& s, double cutoff_hz) {
  Spectrogram out = s;
  apply_fixed_mask_in_place(out, cutoff_hz);
  return out;
}

MaskSpec apply_random_mask_in_place(Spectrogram& s, Rng& rng, double f_low_hz) {
  if (!(f_low_hz >= 0.0 && f_low_hz <= kNyquistHz)) {
    throw ArgumentError("mask lower bound outside [0, 22050] Hz");
  }
  const double cutoff = std::uniform_real_distribution<double>(f_low_hz, kNyquistHz)(rng);
  return apply_fixed_mask_in_place(s, cutoff);
}

MaskedSpectrogram apply_random_mask(const Spectrogram& s, Rng& rng, double f_low_hz) {
  MaskedSpectrogram out{s, {}};
  out.mask = apply_random_mask_in_place(out.spectrogram, rng, f_low_hz);
  return out;
}

void write_spectrogram_png(const std::filesystem::path& path, const Spectrogram& s) {
  write_heatmap_png(path, s.n_bins, s.n_frames, s.values, kFloorDb, 0.0f);
}

}  // namespace lossydetect
