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
#include <optional>
#include <vector>

#include "json.hpp"
#include "lossydetect/dataset/types.h"
#include "lossydetect/frontend/spectral.h"
#include "lossydetect/model/config.h"

namespace lossydetect {

struct TrainConfig {
  int batch_size = 32;
  int max_epochs = 100;
  double learning_rate = 1e-3;
  int early_stop_patience = 10;
  uint64_t seed = 1;
  bool mask_enabled = false;
  // Probability of masking an example when mask_enabled; 1.0 masks all.
  double mask_probability = 1.0;
  double mask_low_hz = 14000.0;
  // Threads preparing examples ahead of the optimizer.
  int workers = 1;
  // Prepared batches buffered between loaders and the optimizer.
  int queue_depth = 2;
  // Stop starting new epochs after this many seconds (0 = unlimited).
  double time_budget_s = 0.0;

  void validate() const;
};

void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

struct Example {
  Spectrogram spectrogram;
  int label = 0;
  std::optional<MaskSpec> mask;
};

// load -> mono -> random 2 s crop -> spectrogram -> random mask with
// probability mask_probability when enabled. Throws ContractError for test
// records.
Example make_example(const Manifest& manifest, const TrackRecord& record,
                     Rng& rng, const TrainConfig& config);

struct EpochMetrics {
  int epoch = 0;
  double train_loss = 0.0;
  double val_accuracy = 0.0;
  double seconds = 0.0;
  int skipped_examples = 0;
};

struct TrainResult {
  std::filesystem::path checkpoint;
  double best_val_accuracy = 0.0;
  int best_epoch = -1;
  std::vector<EpochMetrics> history;
};

// Adam on the 2-class cross entropy, one random crop per training record per
// epoch. After each epoch the track-level validation accuracy decides whether
// <run_dir>/best.ckpt is replaced. Also writes config.json, metrics.csv and
// train.log into run_dir. Throws DivergenceError on a non-finite loss.
TrainResult train(const Manifest& ds1, const ModelConfig& model_config,
                  const TrainConfig& train_config,
                  const std::filesystem::path& run_dir);

}  // namespace lossydetect
