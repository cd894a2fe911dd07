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

#include <array>
#include <utility>

#include "json.hpp"

namespace lossydetect {

struct ModelConfig {
  int n_fft = 1024;
  int n_frames = 173;
  std::array<int, 4> conv_channels = {16, 32, 64, 128};
  int kernel = 3;
  // (frequency, time) pooling per block.
  std::array<std::pair<int, int>, 4> pool_sizes = {
      {{2, 2}, {2, 2}, {2, 2}, {2, 4}}};
  int lstm_hidden = 128;
  int lstm_layers = 2;
  bool bidirectional = true;
  int head_width = 256;
  int n_classes = 2;
  bool mask_enabled = false;
  double mask_low_hz = 14000.0;

  int n_bins() const { return n_fft / 2 + 1; }
  int directions() const { return bidirectional ? 2 : 1; }

  // Throws ArgumentError when an invariant is violated (fixed pooling layout,
  // head_width = directions * lstm_hidden, 3x3 kernel, 2 classes, ...).
  void validate() const;

  bool operator==(const ModelConfig&) const = default;
};

void to_json(nlohmann::json& j, const ModelConfig& c);
void from_json(const nlohmann::json& j, ModelConfig& c);

}  // namespace lossydetect
