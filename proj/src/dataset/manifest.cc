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

#include "lossydetect/dataset/manifest.h"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "lossydetect/util/errors.h"
#include "lossydetect/util/random.h"

namespace lossydetect {

using nlohmann::json;
using nlohmann::ordered_json;

ordered_json record_to_json(const TrackRecord& r) {
  ordered_json j;
  j["track_id"] = r.track_id;
  j["audio_path"] = r.audio_path.generic_string();
  j["label"] = std::string(to_string(r.label));
  if (r.encoding) {
    j["codec"] = std::string(to_string(r.encoding->codec));
    j["bitrate_kbps"] = r.encoding->bitrate_kbps;
    j["cutoff_hz"] = r.encoding->cutoff_hz ? json(*r.encoding->cutoff_hz) : json(nullptr);
  } else {
    j["codec"] = nullptr;
    j["bitrate_kbps"] = nullptr;
    j["cutoff_hz"] = nullptr;
  }
  j["dataset_id"] = std::string(to_string(r.dataset_id));
  j["split"] = std::string(to_string(r.split));
  return j;
}

TrackRecord record_from_json(const json& j) {
  TrackRecord r;
  r.track_id = j.at("track_id").get<std::string>();
  r.audio_path = j.at("audio_path").get<std::string>();
  r.label = parse_label(j.at("label").get<std::string>());
  if (!j.at("codec").is_null()) {
    EncodingSpec spec;
    spec.codec = parse_codec(j.at("codec").get<std::string>());
    spec.bitrate_kbps = j.at("bitrate_kbps").get<int>();
    if (!j.at("cutoff_hz").is_null()) spec.cutoff_hz = j.at("cutoff_hz").get<int>();
    r.encoding = spec;
  }
  r.dataset_id = parse_dataset_id(j.at("dataset_id").get<std::string>());
  r.split = parse_split(j.at("split").get<std::string>());
  if ((r.label == Label::kLossy) != r.encoding.has_value()) {
    throw ContractError("record " + r.track_id + ": lossy label must carry an encoding");
  }
  return r;
}

std::string manifest_jsonl(const Manifest& m) {
  std::string out;
  for (const auto& r : m.records) {
    out += record_to_json(r).dump();
    out += '\n';
  }
  return out;
}

std::string manifest_digest(const Manifest& m) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(manifest_jsonl(m))));
  return buf;
}

ordered_json manifest_header(const Manifest& m) {
  ordered_json j;
  j["format_version"] = 1;
  j["dataset_id"] = std::string(to_string(m.dataset_id));
  j["record_count"] = m.records.size();
  j["corpus_seed"] = m.corpus_seed;
  j["encoding_seed"] = m.encoding_seed;
  j["split_seed"] = m.split_seed;
  j["transcoder_version"] = m.transcoder_version;
  j["codec_variants"] = m.codec_variants;
  j["commands"] = m.commands;
  j["excluded"] = m.excluded;
  return j;
}

void write_manifest(const Manifest& m, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "manifest.jsonl", std::ios::binary);
    if (!out) throw IoError("cannot write " + (dir / "manifest.jsonl").string());
    out << manifest_jsonl(m);
  }
  std::ofstream side(dir / "manifest.json", std::ios::binary);
  if (!side) throw IoError("cannot write " + (dir / "manifest.json").string());
  side << manifest_header(m).dump(2) << '\n';
}

Manifest read_manifest(const std::filesystem::path& path) {
  const auto jsonl = std::filesystem::is_directory(path) ? path / "manifest.jsonl" : path;
  std::ifstream in(jsonl);
  if (!in) throw IoError("cannot open manifest " + jsonl.string());
  Manifest m;
  m.base_dir = jsonl.parent_path();
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      m.records.push_back(record_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw IoError(jsonl.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (!m.records.empty()) m.dataset_id = m.records.front().dataset_id;
  const auto sidecar = jsonl.parent_path() / "manifest.json";
  if (std::ifstream side{sidecar}) {
    const json h = json::parse(side);
    m.dataset_id = parse_dataset_id(h.at("dataset_id").get<std::string>());
    m.corpus_seed = h.value("corpus_seed", uint64_t{0});
    m.encoding_seed = h.value("encoding_seed", uint64_t{0});
    m.split_seed = h.value("split_seed", uint64_t{0});
    m.transcoder_version = h.value("transcoder_version", std::string());
    if (h.contains("codec_variants")) m.codec_variants = h["codec_variants"].get<decltype(m.codec_variants)>();
    if (h.contains("commands")) m.commands = h["commands"].get<decltype(m.commands)>();
    if (h.contains("excluded")) m.excluded = h["excluded"].get<decltype(m.excluded)>();
  }
  return m;
}

}  // namespace lossydetect
