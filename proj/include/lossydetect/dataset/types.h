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

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace lossydetect {

enum class Codec { kMp3Lame, kFdkAac, kVorbis };
enum class Label { kLossless = 0, kLossy = 1 };
enum class DatasetId { kDs1, kDs2 };
enum class Split { kTrain, kVal, kTest };

inline constexpr std::array<Codec, 3> kAllCodecs = {
    Codec::kFdkAac, Codec::kVorbis, Codec::kMp3Lame};
inline constexpr std::array<int, 3> kBitratesKbps = {128, 256, 320};
inline constexpr std::array<int, 4> kCutoffsHz = {14000, 16000, 18000, 20000};

inline constexpr int kSampleRateHz = 44100;
inline constexpr int kBitDepth = 16;
inline constexpr double kMinSourceDurationS = 4.0;

std::string_view to_string(Codec codec);
std::string_view to_string(Label label);
std::string_view to_string(DatasetId id);
std::string_view to_string(Split split);

// Accepts both the short names ("mp3lame") and encoder names ("libmp3lame").
Codec parse_codec(std::string_view name);
Label parse_label(std::string_view name);
DatasetId parse_dataset_id(std::string_view name);
Split parse_split(std::string_view name);
std::vector<Codec> parse_codec_list(std::string_view comma_separated);

struct SourceTrack {
  std::string track_id;
  std::filesystem::path path;
  double duration_s = 0.0;
  int sample_rate_hz = 0;
  int bit_depth = 0;
  int channels = 0;
};

struct EncodingSpec {
  Codec codec = Codec::kMp3Lame;
  int bitrate_kbps = 128;
  std::optional<int> cutoff_hz;

  bool operator==(const EncodingSpec&) const = default;
};

struct TrackRecord {
  std::string track_id;
  // As stored in the manifest: relative to the manifest directory when the
  // file lives under it, absolute otherwise.
  std::filesystem::path audio_path;
  Label label = Label::kLossless;
  std::optional<EncodingSpec> encoding;  // present iff label == kLossy
  DatasetId dataset_id = DatasetId::kDs1;
  Split split = Split::kTrain;

  bool operator==(const TrackRecord&) const = default;
};

struct DatasetSeeds {
  uint64_t corpus = 1;
  uint64_t encoding = 1;
  uint64_t split = 1;
};

struct Manifest {
  DatasetId dataset_id = DatasetId::kDs1;
  std::vector<TrackRecord> records;
  uint64_t corpus_seed = 0;
  uint64_t encoding_seed = 0;
  uint64_t split_seed = 0;
  std::string transcoder_version;
  // Codec -> encoder actually used, e.g. fdk_aac -> "aac" when the nonfree
  // encoder is missing from the transcoder build.
  std::map<std::string, std::string> codec_variants;
  // track_id -> {encode command, decode command}.
  std::map<std::string, std::vector<std::string>> commands;
  // track_id -> reason, for tracks dropped during the build.
  std::map<std::string, std::string> excluded;
  // Directory that relative audio paths resolve against.
  std::filesystem::path base_dir;

  std::filesystem::path resolve(const TrackRecord& record) const {
    return record.audio_path.is_absolute() ? record.audio_path
                                           : base_dir / record.audio_path;
  }
};

}  // namespace lossydetect
