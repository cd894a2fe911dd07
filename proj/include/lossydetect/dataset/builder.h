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
#include <optional>
#include <span>
#include <vector>

#include "lossydetect/dataset/transcoder.h"
#include "lossydetect/dataset/types.h"

namespace lossydetect {

struct BuildOptions {
  std::filesystem::path out_dir;  // the dataset directory, e.g. data/ds1
  std::vector<Codec> codecs{kAllCodecs.begin(), kAllCodecs.end()};
  int workers = 1;
  // Verify the requested cutoff on every lossy file that has one.
  bool verify_cutoff = true;
  // The build fails when more than this fraction of tracks is excluded.
  double max_excluded_fraction = 0.01;
};

// Median over frames of the linear power in bins above `f_hz`, lossy over
// lossless. Returns 0 when the lossless band holds nothing but quantization
// noise (within 10 dB of the 16-bit floor).
double band_energy_ratio(std::span<const float> lossless_mono,
                         std::span<const float> lossy_mono, double f_hz);

// Same ratio computed from two files on disk (channels averaged).
double band_energy_ratio(const std::filesystem::path& lossless,
                         const std::filesystem::path& lossy, double f_hz);

// One lossless and one lossy record per source track, sorted by track_id with
// the lossless record first. Lossy audio goes to <out_dir>/lossy/. Existing
// outputs whose command stamp matches are reused.
Manifest build_dataset(std::span<const SourceTrack> sources,
                       DatasetId dataset_id, const DatasetSeeds& seeds,
                       const Transcoder& transcoder,
                       const BuildOptions& options);

}  // namespace lossydetect
