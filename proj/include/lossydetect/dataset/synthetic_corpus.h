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

#include <cstdint>
#include <filesystem>
#include <vector>

#include "lossydetect/dataset/types.h"

namespace lossydetect {

struct SyntheticCorpusOptions {
  int n_tracks = 1;
  double duration_s = 10.0;
  uint64_t seed = 1;
  int channels = 2;
  int workers = 1;
};

// Writes n_tracks 16-bit 44.1 kHz WAV files named syn_<index>.wav. Each track
// mixes a harmonic chord progression whose partials reach past 20 kHz,
// periodic broadband transients and a low wideband noise bed. Tracks also vary
// in spectral tilt and brightness so that the top octave is not uniformly
// loud. Output is a pure function of (seed, index, duration, channels).
std::vector<SourceTrack> generate_synthetic_corpus(
    const SyntheticCorpusOptions& options, const std::filesystem::path& out_dir);

// Renders one track without touching the filesystem; interleaved int16.
std::vector<int16_t> render_synthetic_track(uint64_t seed, int index,
                                            double duration_s, int channels);

}  // namespace lossydetect
