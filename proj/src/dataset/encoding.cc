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

#include "lossydetect/dataset/encoding.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "lossydetect/util/errors.h"
#include "lossydetect/util/random.h"

namespace lossydetect {
namespace {

// Counter streams within a track's key.
constexpr uint64_t kCodecStream = 0;
constexpr uint64_t kBitrateStream = 1;
constexpr uint64_t kCutoffStream = 2;

}  // namespace

EncodingSpec assign_encoding(std::string_view track_id, DatasetId dataset_id,
                             uint64_t seed, std::span<const Codec> codecs) {
  if (dataset_id != DatasetId::kDs1 && dataset_id != DatasetId::kDs2) {
    throw ArgumentError("assign_encoding: unknown dataset id");
  }
  if (codecs.empty()) throw ArgumentError("assign_encoding: no codecs allowed");
  const CounterRng rng(mix_seed(seed, fnv1a64(track_id)));
  EncodingSpec spec;
  spec.codec = codecs[rng.index(kCodecStream, codecs.size())];
  spec.bitrate_kbps = kBitratesKbps[rng.index(kBitrateStream, kBitratesKbps.size())];
  if (dataset_id == DatasetId::kDs2) {
    spec.cutoff_hz = kCutoffsHz[rng.index(kCutoffStream, kCutoffsHz.size())];
  }
  return spec;
}

SplitCounts split_counts(std::size_t n) {
  SplitCounts c;
  c.train = (n * 7) / 10;
  c.test = (n * 2 + 9) / 10;  // ceil(0.2 n)
  c.val = n - c.train - c.test;
  return c;
}

std::map<std::string, Split> split_assign(std::vector<std::string> track_ids,
                                          uint64_t seed) {
  if (track_ids.empty()) throw ArgumentError("split_assign: no track ids");
  std::sort(track_ids.begin(), track_ids.end());
  if (std::adjacent_find(track_ids.begin(), track_ids.end()) != track_ids.end()) {
    throw ArgumentError("split_assign: duplicate track ids");
  }
  const CounterRng rng(seed, "split");
  for (std::size_t i = track_ids.size() - 1; i > 0; --i) {
    std::swap(track_ids[i], track_ids[rng.index(i, i + 1)]);
  }
  const SplitCounts counts = split_counts(track_ids.size());
  std::map<std::string, Split> out;
  for (std::size_t i = 0; i < track_ids.size(); ++i) {
    const Split s = i < counts.train                ? Split::kTrain
                    : i < counts.train + counts.val ? Split::kVal
                                                    : Split::kTest;
    out.emplace(track_ids[i], s);
  }
  return out;
}

}  // namespace lossydetect
