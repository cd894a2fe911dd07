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
#include <cstdint>
#include <span>
#include <vector>

#include "lossydetect/model/config.h"
#include "lossydetect/model/parameters.h"

namespace lossydetect {

// Batch of spectrograms in [B, 1, n_bins, n_frames] layout.
template <typename T>
struct BatchView {
  std::span<const T> data;
  std::array<int, 4> shape{};
};

// Activations kept by forward() for backward().
template <typename T>
struct ForwardCache {
  struct ConvBlock {
    int c_in = 0, c_out = 0, h = 0, w = 0, out_h = 0, out_w = 0;
    std::vector<T> input;       // [B, c_in, h, w]
    std::vector<T> activation;  // ReLU output, the batch-norm input
    std::vector<T> mean, inv_std;
    std::vector<int32_t> argmax;  // pooled cell -> index within its h*w plane
  };
  struct LstmDirection {
    std::vector<T> gates;  // [steps*B, 4H]: i, f, g, o after activation
    std::vector<T> cell;   // [steps*B, H]
    std::vector<T> hidden; // [steps*B, H]
  };
  struct LstmLayer {
    int input_size = 0;
    std::vector<T> input;  // [steps*B, input_size], step-major
    std::vector<LstmDirection> directions;
  };

  int batch = 0;
  bool training = false;
  int steps = 0;
  std::vector<ConvBlock> blocks;
  std::vector<LstmLayer> lstm;
  std::vector<T> features;  // [B, head_width]
  std::vector<T> probabilities;
};

// 4 x (3x3 same conv -> ReLU -> batch norm -> max pool), a stacked
// (bi)directional LSTM over the pooled time axis, and a dense softmax head fed
// by the final hidden state of each direction of the top layer.
template <typename T>
class Network {
 public:
  explicit Network(ModelConfig config);

  const ModelConfig& config() const { return config_; }
  ParameterSet<T>& parameters() { return params_; }
  const ParameterSet<T>& parameters() const { return params_; }

  // Replaces parameters; shapes and names must match this config.
  void set_parameters(ParameterSet<T> params);

  // Deterministic given seed: He-normal conv weights, uniform(+-1/sqrt(fan_in))
  // LSTM and dense weights, zero biases, batch-norm scale 1 and shift 0.
  void initialize(uint64_t seed);

  // Returns row-major [B, n_classes] probabilities. In training mode batch
  // statistics are used and running statistics updated. Throws ContractError
  // unless the shape is exactly [B, 1, n_bins, n_frames] with B >= 1.
  std::vector<T> forward(BatchView<T> input, bool training_mode,
                         ForwardCache<T>* cache = nullptr);

  // Inference-mode forward; safe to call concurrently.
  std::vector<T> infer(BatchView<T> input, ForwardCache<T>* cache = nullptr) const;

  // Back-propagates d(objective)/d(logits) ([B, n_classes]). Gradients are
  // accumulated into `grads` (layout of zeros_like()) when non-null, and
  // d(objective)/d(input) written to `input_grad` when non-null.
  void backward(const ForwardCache<T>& cache, std::span<const T> logit_grad,
                ParameterSet<T>* grads, std::vector<T>* input_grad) const;

  // Spatial size of the map leaving each conv block, {freq, time}.
  std::array<std::pair<int, int>, 4> block_output_sizes() const;
  int sequence_feature_size() const;

 private:
  std::vector<T> run(BatchView<T> input, bool training,
                     ForwardCache<T>* cache) const;
  void update_running_stats(const ForwardCache<T>& cache);

  ModelConfig config_;
  ParameterSet<T> params_;
  // Tensor indices.
  std::array<int, 4> conv_w_{}, conv_b_{}, bn_gamma_{}, bn_beta_{};
  std::array<int, 4> bn_mean_{}, bn_var_{};
  std::vector<std::array<int, 3>> lstm_idx_;  // per layer*dir: w_ih, w_hh, b
  int head_w_ = 0, head_b_ = 0;
};

// Mean over the batch of -log(max(p[label], 1e-7)).
template <typename T>
T cross_entropy(std::span<const T> probabilities, std::span<const int> labels,
                int n_classes = 2);

// d cross_entropy / d logits, [B, n_classes].
template <typename T>
std::vector<T> cross_entropy_logit_grad(std::span<const T> probabilities,
                                        std::span<const int> labels,
                                        int n_classes = 2);

// d p[cls] / d logits for each row, [B, n_classes].
template <typename T>
std::vector<T> probability_logit_grad(std::span<const T> probabilities,
                                      int cls, int n_classes = 2);

// Closed-form learnable parameter count for a config.
std::size_t expected_parameter_count(const ModelConfig& config);

}  // namespace lossydetect
