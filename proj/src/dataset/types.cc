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

#include "lossydetect/dataset/types.h"

#include <sstream>

#include "lossydetect/util/errors.h"

namespace lossydetect {

std::string_view to_string(Codec codec) {
  switch (codec) {
    case Codec::kMp3Lame: return "mp3lame";
    case Codec::kFdkAac: return "fdk_aac";
    case Codec::kVorbis: return "vorbis";
  }
  return "?";
}

std::string_view to_string(Label label) {
  return label == Label::kLossy ? "lossy" : "lossless";
}

std::string_view to_string(DatasetId id) {
  return id == DatasetId::kDs2 ? "ds2" : "ds1";
}

std::string_view to_string(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
  }
  return "?";
}

Codec parse_codec(std::string_view name) {
  if (name == "mp3lame" || name == "libmp3lame" || name == "mp3") return Codec::kMp3Lame;
  if (name == "fdk_aac" || name == "libfdk_aac" || name == "aac") return Codec::kFdkAac;
  if (name == "vorbis" || name == "libvorbis" || name == "ogg") return Codec::kVorbis;
  throw ArgumentError("unknown codec: " + std::string(name));
}

Label parse_label(std::string_view name) {
  if (name == "lossless") return Label::kLossless;
  if (name == "lossy") return Label::kLossy;
  throw ArgumentError("unknown label: " + std::string(name));
}

DatasetId parse_dataset_id(std::string_view name) {
  if (name == "ds1") return DatasetId::kDs1;
  if (name == "ds2") return DatasetId::kDs2;
  throw ArgumentError("unknown dataset id: " + std::string(name));
}

Split parse_split(std::string_view name) {
  if (name == "train") return Split::kTrain;
  if (name == "val") return Split::kVal;
  if (name == "test") return Split::kTest;
  throw ArgumentError("unknown split: " + std::string(name));
}

std::vector<Codec> parse_codec_list(std::string_view comma_separated) {
  std::vector<Codec> out;
  std::string item;
  std::istringstream in{std::string(comma_separated)};
  while (std::getline(in, item, ',')) {
    if (item.empty()) continue;
    const Codec c = parse_codec(item);
    bool seen = false;
    for (Codec o : out) seen |= o == c;
    if (!seen) out.push_back(c);
  }
  if (out.empty()) throw ArgumentError("empty codec list");
  return out;
}

}  // namespace lossydetect
