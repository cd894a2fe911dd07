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

#include "lossydetect/model/checkpoint.h"

#include <array>
#include <cstring>
#include <fstream>

#include "lossydetect/util/errors.h"

namespace lossydetect {
namespace {

constexpr std::array<char, 8> kMagic = {'L', 'D', 'C', 'K', 'P', 'T', '\0', '\0'};

template <typename U>
void write_pod(std::ostream& out, U v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(U));
}

template <typename U>
U read_pod(std::istream& in) {
  U v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(U));
  return v;
}

}  // namespace

Network<float> Checkpoint::make_network() const {
  Network<float> net(config);
  net.set_parameters(parameters);
  return net;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  nlohmann::json header;
  header["config"] = checkpoint.config;
  header["metadata"] = checkpoint.metadata;
  header["tensors"] = nlohmann::json::array();
  auto describe = [&](const std::vector<Tensor<float>>& list, const char* kind) {
    for (const auto& t : list) {
      header["tensors"].push_back({{"name", t.name}, {"shape", t.shape}, {"kind", kind}});
    }
  };
  describe(checkpoint.parameters.tensors, "parameter");
  describe(checkpoint.parameters.buffers, "buffer");
  const std::string text = header.dump();

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write checkpoint " + tmp.string());
    out.write(kMagic.data(), kMagic.size());
    write_pod<uint32_t>(out, kCheckpointVersion);
    write_pod<uint64_t>(out, text.size());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    auto dump = [&](const std::vector<Tensor<float>>& list) {
      for (const auto& t : list) {
        out.write(reinterpret_cast<const char*>(t.values.data()),
                  static_cast<std::streamsize>(t.values.size() * sizeof(float)));
      }
    };
    dump(checkpoint.parameters.tensors);
    dump(checkpoint.parameters.buffers);
    if (!out) throw IoError("failed writing checkpoint " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) throw FormatError("magic", path.string() + " is not a checkpoint");
  const auto version = read_pod<uint32_t>(in);
  if (version != kCheckpointVersion) {
    throw FormatError("version", "unsupported checkpoint version " + std::to_string(version));
  }
  const auto len = read_pod<uint64_t>(in);
  if (!in || len > (1u << 26)) throw FormatError("header", "corrupt checkpoint header");
  std::string text(len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(len));
  if (!in) throw FormatError("header", "truncated checkpoint header");

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("header", std::string("checkpoint header: ") + e.what());
  }
  Checkpoint ckpt;
  ckpt.config = header.at("config").get<ModelConfig>();
  ckpt.metadata = header.value("metadata", nlohmann::json::object());

  // Shapes must agree with a freshly constructed network for this config.
  ParameterSet<float> params = Network<float>(ckpt.config).parameters();
  std::size_t t_i = 0, b_i = 0;
  for (const auto& entry : header.at("tensors")) {
    const bool buffer = entry.at("kind").get<std::string>() == "buffer";
    auto& list = buffer ? params.buffers : params.tensors;
    std::size_t& i = buffer ? b_i : t_i;
    if (i >= list.size() || list[i].name != entry.at("name").get<std::string>() ||
        list[i].shape != entry.at("shape").get<std::vector<int>>()) {
      throw FormatError("tensors", "checkpoint tensor layout does not match its config");
    }
    ++i;
  }
  if (t_i != params.tensors.size() || b_i != params.buffers.size()) {
    throw FormatError("tensors", "checkpoint is missing tensors");
  }
  auto load = [&](std::vector<Tensor<float>>& list) {
    for (auto& t : list) {
      in.read(reinterpret_cast<char*>(t.values.data()),
              static_cast<std::streamsize>(t.values.size() * sizeof(float)));
    }
  };
  load(params.tensors);
  load(params.buffers);
  if (!in) throw FormatError("data", "truncated checkpoint data");
  ckpt.parameters = std::move(params);
  return ckpt;
}

}  // namespace lossydetect
