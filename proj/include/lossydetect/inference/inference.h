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

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "lossydetect/dataset/types.h"
#include "lossydetect/frontend/spectral.h"
#include "lossydetect/model/network.h"

namespace lossydetect {

inline constexpr int kWindowHop = 44100;

struct PredictionRecord {
  std::string track_id;
  std::string audio_path;
  double p_lossy = 0.0;
  std::vector<double> window_probs;
  std::optional<Label> label_true;
  std::optional<EncodingSpec> encoding;
  std::optional<DatasetId> dataset_id;
  std::optional<Split> split;
  Label predicted = Label::kLossless;
  double threshold = 0.5;
  // Non-empty when the audio could not be scored.
  std::string error;

  bool ok() const { return error.empty(); }
  bool correct() const { return ok() && label_true && *label_true == predicted; }
};

// 1 for clips up to 88200 samples, else 1 + ceil((n - 88200) / 44100).
std::size_t window_count(std::size_t n_samples);

// 2 s windows at a 1 s hop; the last one is zero-padded. Throws ArgumentError
// on an empty clip.
std::vector<AudioClip> windows(const AudioClip& clip);

// Ties go to lossy.
Label threshold_label(double p_lossy, double threshold);
double mean_probability(std::span<const double> window_probs);

// Per-window lossy probabilities for one clip, windows batched `batch` at a
// time. No mask is applied.
std::vector<double> window_probabilities(const Network<float>& network,
                                         const AudioClip& clip, int batch = 16);

// Scores one file. Decoding problems become an error record, not an
// exception.
PredictionRecord predict_track(const std::filesystem::path& path,
                               const Network<float>& network,
                               double threshold = 0.5);
PredictionRecord predict_track(const std::filesystem::path& path,
                               const std::filesystem::path& checkpoint,
                               double threshold = 0.5);

// One record per manifest entry of `split`, ordered by (track_id, label).
std::vector<PredictionRecord> predict_manifest(const Manifest& manifest,
                                               const Network<float>& network,
                                               Split split = Split::kTest,
                                               double threshold = 0.5,
                                               int workers = 1);

nlohmann::ordered_json prediction_to_json(const PredictionRecord& record);
PredictionRecord prediction_from_json(const nlohmann::json& j);
void write_predictions(const std::filesystem::path& path,
                       std::span<const PredictionRecord> records);
std::vector<PredictionRecord> read_predictions(const std::filesystem::path& path);

}  // namespace lossydetect
