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

#include <gtest/gtest.h>

#include <fstream>

#include "lossydetect/model/checkpoint.h"
#include "lossydetect/util/errors.h"

namespace lossydetect {
namespace {

ModelConfig small_config() {
  ModelConfig c;
  c.conv_channels = {2, 3, 4, 5};
  c.lstm_hidden = 4;
  c.head_width = 8;
  return c;
}

class CheckpointTest : public ::testing::Test {
 protected:
  void SetUp() override {
    path_ = std::filesystem::temp_directory_path() / "lossydetect_checkpoint_test.ckpt";
  }
  void TearDown() override { std::filesystem::remove(path_); }
  std::filesystem::path path_;
};

TEST_F(CheckpointTest, RoundTrip) {
  Network<float> net(small_config());
  net.initialize(5);
  Checkpoint c{small_config(), net.parameters(), {{"epoch", 3}, {"seed", 11}}};
  save_checkpoint(path_, c);
  const Checkpoint back = load_checkpoint(path_);
  EXPECT_EQ(back.config, c.config);
  EXPECT_EQ(back.metadata["epoch"], 3);
  ASSERT_EQ(back.parameters.tensors.size(), c.parameters.tensors.size());
  for (std::size_t i = 0; i < c.parameters.tensors.size(); ++i) {
    EXPECT_EQ(back.parameters.tensors[i].name, c.parameters.tensors[i].name);
    EXPECT_EQ(back.parameters.tensors[i].values, c.parameters.tensors[i].values);
  }
  for (std::size_t i = 0; i < c.parameters.buffers.size(); ++i) {
    EXPECT_EQ(back.parameters.buffers[i].values, c.parameters.buffers[i].values);
  }
  // Same weights, same outputs.
  std::vector<float> x(513 * 173, -40.0f);
  for (std::size_t i = 0; i < x.size(); i += 7) x[i] = -10.0f;
  EXPECT_EQ(back.make_network().infer({x, {1, 1, 513, 173}}), net.infer({x, {1, 1, 513, 173}}));
}

TEST_F(CheckpointTest, RejectsCorruption) {
  Network<float> net(small_config());
  net.initialize(1);
  save_checkpoint(path_, Checkpoint{small_config(), net.parameters(), {}});
  std::string bytes;
  {
    std::ifstream in(path_, std::ios::binary);
    bytes.assign(std::istreambuf_iterator<char>(in), {});
  }
  auto write = [&](const std::string& b) {
    std::ofstream out(path_, std::ios::binary | std::ios::trunc);
    out << b;
  };
  std::string bad = bytes;
  bad[0] = 'X';
  write(bad);
  EXPECT_THROW(load_checkpoint(path_), FormatError);
  write(bytes.substr(0, bytes.size() - 4));
  EXPECT_THROW(load_checkpoint(path_), FormatError);
  EXPECT_THROW(load_checkpoint(path_.string() + ".missing"), IoError);
}

}  // namespace
}  // namespace lossydetect
