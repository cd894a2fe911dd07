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

#include <algorithm>
#include <cstddef>
#include <string>
#include <vector>

namespace lossydetect {

template <typename T>
struct Tensor {
  std::string name;
  std::vector<int> shape;
  std::vector<T> values;

  std::size_t numel() const {
    std::size_t n = 1;
    for (int d : shape) n *= static_cast<std::size_t>(d);
    return n;
  }
};

// Learnable tensors plus non-learnable buffers (batch-norm running
// statistics). Gradients use the same layout with empty buffers.
template <typename T>
struct ParameterSet {
  std::vector<Tensor<T>> tensors;
  std::vector<Tensor<T>> buffers;

  std::size_t num_parameters() const {
    std::size_t n = 0;
    for (const auto& t : tensors) n += t.values.size();
    return n;
  }

  // Same shapes, zero-filled, no buffers.
  ParameterSet zeros_like() const {
    ParameterSet out;
    out.tensors = tensors;
    for (auto& t : out.tensors) std::fill(t.values.begin(), t.values.end(), T{});
    return out;
  }

  void set_zero() {
    for (auto& t : tensors) std::fill(t.values.begin(), t.values.end(), T{});
  }

  template <typename U>
  ParameterSet<U> cast() const {
    ParameterSet<U> out;
    auto convert = [](const std::vector<Tensor<T>>& src,
                      std::vector<Tensor<U>>& dst) {
      for (const auto& t : src) {
        dst.push_back({t.name, t.shape, {t.values.begin(), t.values.end()}});
      }
    };
    convert(tensors, out.tensors);
    convert(buffers, out.buffers);
    return out;
  }
};

}  // namespace lossydetect
