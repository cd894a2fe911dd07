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
#include <map>
#include <span>
#include <string>
#include <vector>

#include "lossydetect/dataset/types.h"

namespace lossydetect {

// Draws codec and bitrate uniformly from `codecs` x kBitratesKbps, keyed by
// (seed, track_id) only, so ds1 and ds2 agree on both. ds2 additionally draws
// a cutoff from kCutoffsHz.
EncodingSpec assign_encoding(std::string_view track_id, DatasetId dataset_id,
                             uint64_t seed,
                             std::span<const Codec> codecs = kAllCodecs);

struct SplitCounts {
  std::size_t train = 0;
  std::size_t val = 0;
  std::size_t test = 0;
};

// 70/10/20 partition sizes: train = floor(0.7n), test = ceil(0.2n), val takes
// the rest. Every part is within one track of its exact share and test is
// never empty.
SplitCounts split_counts(std::size_t n);

// Sorts ids, shuffles them with a seed-keyed permutation and cuts the result
// according to split_counts(). Throws ArgumentError on empty input or
// duplicate ids.
std::map<std::string, Split> split_assign(std::vector<std::string> track_ids,
                                          uint64_t seed);

}  // namespace lossydetect
