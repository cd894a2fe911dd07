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

#include "json.hpp"
#include "lossydetect/model/config.h"
#include "lossydetect/model/network.h"

namespace lossydetect {

inline constexpr uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  ModelConfig config;
  ParameterSet<float> parameters;
  // seeds, epoch, validation accuracy, train config, ...
  nlohmann::json metadata = nlohmann::json::object();

  Network<float> make_network() const;
};

// Binary archive: magic "LDCKPT\0\0", u32 version, u64 JSON length, JSON
// header {config, metadata, tensors: [{name, shape, kind}]}, then raw
// little-endian float32 data in header order.
void save_checkpoint(const std::filesystem::path& path,
                     const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace lossydetect
