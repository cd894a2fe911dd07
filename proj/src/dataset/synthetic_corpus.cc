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

#include "lossydetect/dataset/synthetic_corpus.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "lossydetect/audio/wav.h"
#include "lossydetect/util/errors.h"
#include "lossydetect/util/random.h"
#include "lossydetect/util/thread_pool.h"

namespace lossydetect {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kTopPartialHz = 21800.0;
constexpr double kChordRatios[] = {1.0, 1.25, 1.5};

double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

// Adds amp * sin(w n + phase) for n in [0, out.size()) using a rotating
// phasor; renormalised periodically to bound drift.
void add_partial(std::vector<double>& out, double freq_hz, double amp,
                 double phase) {
  const double w = kTwoPi * freq_hz / kSampleRateHz;
  const double cw = std::cos(w), sw = std::sin(w);
  double c = std::cos(phase), s = std::sin(phase);
  for (std::size_t n = 0; n < out.size(); ++n) {
    out[n] += amp * s;
    const double nc = c * cw - s * sw;
    s = s * cw + c * sw;
    c = nc;
    if ((n & 4095) == 4095) {
      const double r = 1.0 / std::sqrt(c * c + s * s);
      c *= r;
      s *= r;
    }
  }
}

}  // namespace

std::vector<int16_t> render_synthetic_track(uint64_t seed, int index,
                                            double duration_s, int channels) {
  if (duration_s <= 0.0) throw ArgumentError("duration must be positive");
  if (channels < 1 || channels > 2) throw ArgumentError("channels must be 1 or 2");
  Rng rng = make_rng(seed, static_cast<uint64_t>(index), 0x5eed);
  const std::size_t n = static_cast<std::size_t>(std::llround(duration_s * kSampleRateHz));

  // Per-track timbre: spectral tilt of the partials and a smooth fourth-order
  // rolloff corner, so tracks range from dark to bright.
  const double tilt = uniform(rng, 0.6, 1.8);
  const double bright_hz = uniform(rng, 4000.0, 22000.0);
  const double chord_s = uniform(rng, 1.0, 2.5);
  const std::size_t n_chords = std::max<std::size_t>(1, static_cast<std::size_t>(duration_s / chord_s));
  const std::size_t seg = n / n_chords + 1;

  std::vector<std::vector<double>> mix(channels, std::vector<double>(n, 0.0));
  for (std::size_t chord = 0; chord < n_chords; ++chord) {
    const std::size_t begin = chord * seg;
    const std::size_t end = std::min(n, begin + seg);
    if (begin >= end) break;
    const double root = uniform(rng, 80.0, 400.0);
    const double decay = uniform(rng, 0.3, 2.0);
    std::vector<std::vector<double>> tone(channels, std::vector<double>(end - begin, 0.0));
    for (double ratio : kChordRatios) {
      const double f0 = root * ratio * (1.0 + uniform(rng, -0.003, 0.003));
      for (int k = 1; f0 * k < kTopPartialHz; ++k) {
        const double f = f0 * k;
        const double amp = std::pow(static_cast<double>(k), -tilt) /
                           std::sqrt(1.0 + std::pow(f / bright_hz, 4.0));
        for (int ch = 0; ch < channels; ++ch) {
          add_partial(tone[ch], f * (1.0 + ch * 2e-4), amp, uniform(rng, 0.0, kTwoPi));
        }
      }
    }
    for (int ch = 0; ch < channels; ++ch) {
      for (std::size_t i = 0; i < tone[ch].size(); ++i) {
        const double t = static_cast<double>(i) / kSampleRateHz;
        const double env = std::min(1.0, t / 0.02) * std::exp(-t * decay);
        mix[ch][begin + i] = tone[ch][i] * env;
      }
    }
  }
  double peak = 0.0;
  for (const auto& c : mix) for (double v : c) peak = std::max(peak, std::abs(v));
  if (peak > 0.0) {
    for (auto& c : mix) for (double& v : c) v *= 0.5 / peak;
  }

  // Broadband transients: decaying white-noise bursts on a regular grid.
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double period = uniform(rng, 0.25, 0.6);
  const std::size_t burst = static_cast<std::size_t>(0.05 * kSampleRateHz);
  for (double start = uniform(rng, 0.0, period); start < duration_s; start += period) {
    const std::size_t i0 = static_cast<std::size_t>(start * kSampleRateHz);
    const double rate = uniform(rng, 60.0, 150.0);
    const double gain = uniform(rng, 0.1, 0.4);
    for (std::size_t j = 0; j < burst && i0 + j < n; ++j) {
      const double env = gain * std::exp(-static_cast<double>(j) / kSampleRateHz * rate);
      for (int ch = 0; ch < channels; ++ch) mix[ch][i0 + j] += env * gauss(rng);
    }
  }

  // Wideband noise bed.
  const double noise = std::pow(10.0, -uniform(rng, 50.0, 62.0) / 20.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (int ch = 0; ch < channels; ++ch) mix[ch][i] += noise * gauss(rng);
  }

  peak = 0.0;
  for (const auto& c : mix) for (double v : c) peak = std::max(peak, std::abs(v));
  const double scale = peak > 0.9 ? 0.9 / peak : 1.0;
  std::vector<int16_t> out(n * channels);
  for (std::size_t i = 0; i < n; ++i) {
    for (int ch = 0; ch < channels; ++ch) {
      const double v = std::clamp(mix[ch][i] * scale * 32767.0, -32768.0, 32767.0);
      out[i * channels + ch] = static_cast<int16_t>(std::lround(v));
    }
  }
  return out;
}

std::vector<SourceTrack> generate_synthetic_corpus(
    const SyntheticCorpusOptions& options, const std::filesystem::path& out_dir) {
  if (options.n_tracks < 1) throw ArgumentError("n_tracks must be >= 1");
  if (options.duration_s < kMinSourceDurationS) {
    throw ArgumentError("duration_s must be >= 4");
  }
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec || !std::filesystem::is_directory(out_dir)) {
    throw IoError("cannot create corpus directory " + out_dir.string());
  }
  std::vector<SourceTrack> tracks(options.n_tracks);
  parallel_for(tracks.size(), options.workers, [&](std::size_t i) {
    char name[32];
    std::snprintf(name, sizeof(name), "syn_%05zu", i);
    const auto path = out_dir / (std::string(name) + ".wav");
    const auto pcm = render_synthetic_track(options.seed, static_cast<int>(i),
                                            options.duration_s, options.channels);
    write_wav_pcm16(path, kSampleRateHz, options.channels, pcm);
    SourceTrack& t = tracks[i];
    t.track_id = name;
    t.path = path;
    t.sample_rate_hz = kSampleRateHz;
    t.bit_depth = kBitDepth;
    t.channels = options.channels;
    t.duration_s = static_cast<double>(pcm.size() / options.channels) / kSampleRateHz;
  });
  return tracks;
}

}  // namespace lossydetect
