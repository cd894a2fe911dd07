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

#include "lossydetect/dataset/corpus.h"

#include <algorithm>

#include "lossydetect/audio/wav.h"
#include "lossydetect/util/errors.h"
#include "lossydetect/util/log.h"

namespace lossydetect {

SourceTrack validate_source(const std::filesystem::path& path) {
  const WavInfo info = read_wav_info(path);
  if (info.sample_rate_hz != kSampleRateHz) {
    throw FormatError("sample_rate", path.string() + ": sample rate " +
                                         std::to_string(info.sample_rate_hz));
  }
  if (info.is_float || info.bits_per_sample != kBitDepth) {
    throw FormatError("bit_depth", path.string() + ": not 16-bit PCM");
  }
  SourceTrack t;
  t.track_id = path.stem().string();
  t.path = path;
  t.sample_rate_hz = info.sample_rate_hz;
  t.bit_depth = info.bits_per_sample;
  t.channels = info.channels;
  t.duration_s = static_cast<double>(info.frames) / info.sample_rate_hz;
  if (t.duration_s < kMinSourceDurationS) {
    throw FormatError("duration", path.string() + ": shorter than 4 s");
  }
  return t;
}

IngestResult ingest_corpus(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw IoError("corpus directory does not exist: " + dir.string());
  }
  IngestResult result;
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    std::string ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
    if (ext == ".wav") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    try {
      result.tracks.push_back(validate_source(f));
    } catch (const FormatError& e) {
      result.skipped.push_back({f, e.reason()});
      log_warn() << "skipping " << f.string() << " (" << e.reason() << ")";
    } catch (const IoError& e) {
      result.skipped.push_back({f, "unreadable"});
      log_warn() << "skipping " << f.string() << " (unreadable: " << e.what() << ")";
    }
  }
  if (result.tracks.empty()) {
    throw EmptyCorpusError("no valid 16-bit 44.1 kHz WAV of at least 4 s in " +
                           dir.string());
  }
  return result;
}

}  // namespace lossydetect
