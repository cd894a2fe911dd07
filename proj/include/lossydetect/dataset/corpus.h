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
#include <vector>

#include "lossydetect/dataset/types.h"

namespace lossydetect {

struct SkippedFile {
  std::filesystem::path path;
  // One of: "unreadable", "sample_rate", "bit_depth", "duration".
  std::string reason;
};

struct IngestResult {
  std::vector<SourceTrack> tracks;  // sorted by track_id
  std::vector<SkippedFile> skipped;
};

// Checks one file against the SourceTrack invariants. Throws FormatError
// (reason() names the violated invariant) or IoError.
SourceTrack validate_source(const std::filesystem::path& path);

// Scans `dir` (non-recursive) for *.wav files. Track ids are file stems.
// Throws EmptyCorpusError when no file passes validation.
IngestResult ingest_corpus(const std::filesystem::path& dir);

}  // namespace lossydetect
