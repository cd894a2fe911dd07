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

#include "lossydetect/dataset/builder.h"

#include <algorithm>
#include <fstream>
#include <mutex>
#include <sstream>

#include "lossydetect/audio/wav.h"
#include "lossydetect/dataset/encoding.h"
#include "lossydetect/frontend/spectral.h"
#include "lossydetect/util/errors.h"
#include "lossydetect/util/log.h"
#include "lossydetect/util/thread_pool.h"

namespace lossydetect {
namespace {

std::vector<float> mono_samples(const std::filesystem::path& path) {
  const WavAudio wav = read_wav(path);
  const int ch = wav.info.channels;
  std::vector<float> mono(wav.info.frames);
  for (std::size_t i = 0; i < mono.size(); ++i) {
    float acc = 0.0f;
    for (int c = 0; c < ch; ++c) acc += wav.samples[i * ch + c];
    mono[i] = acc / static_cast<float>(ch);
  }
  return mono;
}

double median_band_power(std::span<const float> mono, int first_bin) {
  const Spectrogram s = stft_magnitude(mono);
  std::vector<double> per_frame(s.n_frames, 0.0);
  for (int b = first_bin; b < s.n_bins; ++b) {
    for (int f = 0; f < s.n_frames; ++f) {
      const double m = s.at(b, f);
      per_frame[f] += m * m;
    }
  }
  if (per_frame.empty()) return 0.0;
  auto mid = per_frame.begin() + per_frame.size() / 2;
  std::nth_element(per_frame.begin(), mid, per_frame.end());
  return *mid;
}

std::filesystem::path storable_path(const std::filesystem::path& file,
                                    const std::filesystem::path& base) {
  const auto abs_file = std::filesystem::absolute(file).lexically_normal();
  const auto rel = abs_file.lexically_relative(std::filesystem::absolute(base).lexically_normal());
  return rel.empty() ? abs_file : rel;
}

std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

double band_energy_ratio(std::span<const float> lossless_mono,
                         std::span<const float> lossy_mono, double f_hz) {
  const int first_bin = bin_of_frequency(std::min(f_hz, kNyquistHz));
  if (first_bin >= kNumBins) return 0.0;
  // Per-bin power of 16-bit quantization noise under a Hann window:
  // (2^-15)^2 / 12 * sum(w^2), sum(w^2) = 3/8 * 1024.
  const double lsb = 1.0 / 32768.0;
  const double noise_per_bin = lsb * lsb / 12.0 * 384.0;
  const double floor = 10.0 * noise_per_bin * (kNumBins - first_bin);
  const double ref = median_band_power(lossless_mono, first_bin);
  if (ref <= floor) return 0.0;
  return median_band_power(lossy_mono, first_bin) / ref;
}

double band_energy_ratio(const std::filesystem::path& lossless,
                         const std::filesystem::path& lossy, double f_hz) {
  const auto a = mono_samples(lossless);
  const auto b = mono_samples(lossy);
  return band_energy_ratio(a, b, f_hz);
}

Manifest build_dataset(std::span<const SourceTrack> sources, DatasetId dataset_id,
                       const DatasetSeeds& seeds, const Transcoder& transcoder,
                       const BuildOptions& options) {
  if (sources.empty()) throw EmptyCorpusError("build_dataset: no source tracks");
  if (options.out_dir.empty()) throw ArgumentError("build_dataset: out_dir not set");
  const auto lossy_dir = options.out_dir / "lossy";
  std::filesystem::create_directories(lossy_dir);

  std::vector<std::string> ids;
  for (const auto& s : sources) ids.push_back(s.track_id);
  const auto splits = split_assign(ids, seeds.split);

  Manifest m;
  m.dataset_id = dataset_id;
  m.corpus_seed = seeds.corpus;
  m.encoding_seed = seeds.encoding;
  m.split_seed = seeds.split;
  m.transcoder_version = transcoder.version();
  m.base_dir = options.out_dir;
  for (Codec c : options.codecs) {
    m.codec_variants[std::string(to_string(c))] = transcoder.encoder_for(c);
  }

  struct Outcome {
    std::optional<EncodingSpec> spec;
    std::vector<std::string> commands;
    std::string failure;
  };
  std::vector<Outcome> outcomes(sources.size());
  std::mutex log_mutex;
  parallel_for(sources.size(), options.workers, [&](std::size_t i) {
    const SourceTrack& src = sources[i];
    Outcome& o = outcomes[i];
    const EncodingSpec spec = assign_encoding(src.track_id, dataset_id, seeds.encoding,
                                              options.codecs);
    const auto out = lossy_dir / (src.track_id + ".wav");
    auto tmp = out;
    tmp.replace_extension(Transcoder::extension_for(spec.codec));
    o.commands = {format_command(transcoder.encode_args(src.path, spec, tmp)),
                  format_command(transcoder.decode_args(tmp, out))};
    const auto stamp_path = std::filesystem::path(out.string() + ".cmd");
    const std::string stamp = o.commands[0] + "\n" + o.commands[1] + "\n";
    try {
      const bool reusable = std::filesystem::exists(out) &&
                            std::filesystem::exists(stamp_path) &&
                            read_text(stamp_path) == stamp;
      if (!reusable) {
        std::filesystem::remove(stamp_path);
        transcoder.transcode(src, spec, out);
        std::ofstream(stamp_path) << stamp;
      }
      if (options.verify_cutoff && spec.cutoff_hz) {
        const double ratio = band_energy_ratio(src.path, out, *spec.cutoff_hz + 1000.0);
        if (ratio >= 0.01) {
          o.failure = "cutoff_not_honored: band energy ratio " + std::to_string(ratio);
          return;
        }
      }
      o.spec = spec;
    } catch (const TranscodeError& e) {
      std::lock_guard<std::mutex> lock(log_mutex);
      log_error() << e.what() << "\n" << e.stderr_text();
      o.failure = e.what();
    } catch (const IoError& e) {
      o.failure = e.what();
    }
  });

  for (std::size_t i = 0; i < sources.size(); ++i) {
    const SourceTrack& src = sources[i];
    const Outcome& o = outcomes[i];
    m.commands[src.track_id] = o.commands;
    if (!o.spec) {
      m.excluded[src.track_id] = o.failure;
      continue;
    }
    const Split split = splits.at(src.track_id);
    TrackRecord lossless{src.track_id, storable_path(src.path, options.out_dir),
                         Label::kLossless, std::nullopt, dataset_id, split};
    TrackRecord lossy{src.track_id,
                      storable_path(lossy_dir / (src.track_id + ".wav"), options.out_dir),
                      Label::kLossy, o.spec, dataset_id, split};
    m.records.push_back(std::move(lossless));
    m.records.push_back(std::move(lossy));
  }
  std::stable_sort(m.records.begin(), m.records.end(), [](const auto& a, const auto& b) {
    if (a.track_id != b.track_id) return a.track_id < b.track_id;
    return a.label < b.label;
  });

  const double excluded = static_cast<double>(m.excluded.size());
  if (excluded > options.max_excluded_fraction * static_cast<double>(sources.size())) {
    std::string detail;
    for (const auto& [id, why] : m.excluded) detail += id + ": " + why + "\n";
    throw TranscodeError("dataset build failed: " + std::to_string(m.excluded.size()) +
                             " of " + std::to_string(sources.size()) + " tracks excluded",
                         detail);
  }
  return m;
}

}  // namespace lossydetect
