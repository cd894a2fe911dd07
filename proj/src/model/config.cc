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

#include "lossydetect/model/config.h"

#include "lossydetect/util/errors.h"

namespace lossydetect {

void ModelConfig::validate() const {
  if (n_fft != 1024) throw ArgumentError("n_fft must be 1024");
  if (n_frames < 1) throw ArgumentError("n_frames must be positive");
  for (int c : conv_channels) {
    if (c < 1) throw ArgumentError("conv channel counts must be positive");
  }
  if (kernel != 3) throw ArgumentError("kernel must be (3,3)");
  const ModelConfig reference;
  if (pool_sizes != reference.pool_sizes) {
    throw ArgumentError("pool sizes are fixed at (2,2),(2,2),(2,2),(2,4)");
  }
  if (lstm_hidden < 1 || lstm_layers < 1) throw ArgumentError("invalid LSTM size");
  if (head_width != directions() * lstm_hidden) {
    throw ArgumentError("head_width must equal directions * lstm_hidden");
  }
  if (n_classes != 2) throw ArgumentError("n_classes must be 2");
  if (mask_low_hz < 0.0 || mask_low_hz > 22050.0) {
    throw ArgumentError("mask_low_hz outside [0, 22050]");
  }
  int h = n_bins(), w = n_frames;
  for (const auto& [ph, pw] : pool_sizes) {
    h /= ph;
    w /= pw;
  }
  if (h < 1 || w < 1) throw ArgumentError("input too small for four pooling stages");
}

void to_json(nlohmann::json& j, const ModelConfig& c) {
  nlohmann::json pools = nlohmann::json::array();
  for (const auto& [ph, pw] : c.pool_sizes) pools.push_back({ph, pw});
  j = nlohmann::json{{"n_fft", c.n_fft},
                     {"n_frames", c.n_frames},
                     {"conv_channels", c.conv_channels},
                     {"kernel", {c.kernel, c.kernel}},
                     {"pool_sizes", pools},
                     {"lstm_hidden", c.lstm_hidden},
                     {"lstm_layers", c.lstm_layers},
                     {"bidirectional", c.bidirectional},
                     {"head_width", c.head_width},
                     {"n_classes", c.n_classes},
                     {"mask_enabled", c.mask_enabled},
                     {"mask_low_hz", c.mask_low_hz}};
}

void from_json(const nlohmann::json& j, ModelConfig& c) {
  const ModelConfig d;
  c.n_fft = j.value("n_fft", d.n_fft);
  c.n_frames = j.value("n_frames", d.n_frames);
  c.conv_channels = j.value("conv_channels", d.conv_channels);
  if (j.contains("kernel")) {
    const auto& k = j["kernel"];
    c.kernel = k.is_array() ? k.at(0).get<int>() : k.get<int>();
  }
  if (j.contains("pool_sizes")) {
    const auto& p = j["pool_sizes"];
    if (p.size() != 4) throw ArgumentError("pool_sizes needs 4 entries");
    for (std::size_t i = 0; i < 4; ++i) {
      c.pool_sizes[i] = {p[i].at(0).get<int>(), p[i].at(1).get<int>()};
    }
  }
  c.lstm_hidden = j.value("lstm_hidden", d.lstm_hidden);
  c.lstm_layers = j.value("lstm_layers", d.lstm_layers);
  c.bidirectional = j.value("bidirectional", d.bidirectional);
  c.head_width = j.value("head_width", c.directions() * c.lstm_hidden);
  c.n_classes = j.value("n_classes", d.n_classes);
  c.mask_enabled = j.value("mask_enabled", d.mask_enabled);
  c.mask_low_hz = j.value("mask_low_hz", d.mask_low_hz);
}

}  // namespace lossydetect
