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

#include <filesystem>
#include <string>

#include "json.hpp"
#include "lossydetect/dataset/types.h"

namespace lossydetect {

// One JSON object per line with exactly the keys track_id, audio_path, label,
// codec, bitrate_kbps, cutoff_hz, dataset_id, split.
nlohmann::ordered_json record_to_json(const TrackRecord& record);
TrackRecord record_from_json(const nlohmann::json& j);

std::string manifest_jsonl(const Manifest& manifest);
nlohmann::ordered_json manifest_header(const Manifest& manifest);

// 16 hex digits of FNV-1a over manifest_jsonl(); identifies the record set.
std::string manifest_digest(const Manifest& manifest);

// Writes <dir>/manifest.jsonl and the sidecar <dir>/manifest.json.
void write_manifest(const Manifest& manifest, const std::filesystem::path& dir);

// Accepts either the .jsonl path or its directory. Reads the sidecar when it
// exists.
Manifest read_manifest(const std::filesystem::path& path);

}  // namespace lossydetect
