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

#include <cmath>
#include <random>

#include "lossydetect/model/network.h"
#include "lossydetect/util/errors.h"

namespace lossydetect {
namespace {

ModelConfig tiny_config() {
  ModelConfig c;
  c.conv_channels = {2, 2, 2, 2};
  c.n_frames = 40;
  c.lstm_hidden = 3;
  c.head_width = 6;
  return c;
}

std::vector<double> random_input(int batch, const ModelConfig& c, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, 1.0);
  std::vector<double> x(static_cast<std::size_t>(batch) * c.n_bins() * c.n_frames);
  for (double& v : x) v = dist(rng);
  return x;
}

TEST(NetworkTest, ParameterCountMatchesClosedForm) {
  ModelConfig c;
  Network<float> net(c);
  // Independent tally of the reference architecture.
  std::size_t conv = (16 * 1 * 9 + 16) + (32 * 16 * 9 + 32) + (64 * 32 * 9 + 64) +
                     (128 * 64 * 9 + 128);
  std::size_t bn = 2 * (16 + 32 + 64 + 128);
  std::size_t l0 = 2 * (4 * 128 * (128 * 32) + 4 * 128 * 128 + 4 * 128);
  std::size_t l1 = 2 * (4 * 128 * 256 + 4 * 128 * 128 + 4 * 128);
  std::size_t head = 2 * 256 + 2;
  EXPECT_EQ(net.parameters().num_parameters(), conv + bn + l0 + l1 + head);
  EXPECT_EQ(expected_parameter_count(c), conv + bn + l0 + l1 + head);
  EXPECT_EQ(net.sequence_feature_size(), 4096);
  EXPECT_EQ(net.block_output_sizes()[3], std::make_pair(32, 5));
}

TEST(NetworkTest, RejectsWrongShape) {
  Network<float> net(ModelConfig{});
  std::vector<float> x(513 * 172);
  EXPECT_THROW(net.infer({x, {1, 1, 513, 172}}), ContractError);
  EXPECT_THROW(net.infer({x, {0, 1, 513, 172}}), ContractError);
}

TEST(NetworkTest, SoftmaxOnSimplex) {
  ModelConfig c = tiny_config();
  Network<double> net(c);
  net.initialize(3);
  auto x = random_input(4, c, 9);
  auto p = net.infer({x, {4, 1, c.n_bins(), c.n_frames}});
  ASSERT_EQ(p.size(), 8u);
  for (int b = 0; b < 4; ++b) {
    EXPECT_GE(p[2 * b], 0.0);
    EXPECT_GE(p[2 * b + 1], 0.0);
    EXPECT_NEAR(p[2 * b] + p[2 * b + 1], 1.0, 1e-12);
  }
}

TEST(NetworkTest, CrossEntropyMatchesDefinition) {
  std::vector<double> p = {0.2, 0.8, 0.9, 0.1, 1.0, 0.0};
  std::vector<int> y = {1, 1, 1};
  const double expect = -(std::log(0.8) + std::log(0.1) + std::log(1e-7)) / 3.0;
  EXPECT_NEAR(cross_entropy<double>(p, y), expect, 1e-12);
}

// Central differences in double precision against the analytic gradient.
double relative_error(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-8});
}

void check_gradients(bool training) {
  ModelConfig c = tiny_config();
  Network<double> net(c);
  net.initialize(11);
  const int batch = 3;
  auto x = random_input(batch, c, 5);
  std::vector<int> labels = {0, 1, 1};
  BatchView<double> view{x, {batch, 1, c.n_bins(), c.n_frames}};
  if (!training) {
    // Non-trivial running statistics.
    for (int i = 0; i < 3; ++i) net.forward(view, true);
  }

  auto loss_at = [&](Network<double>& n) {
    auto p = training ? n.forward(view, true) : n.infer(view);
    return cross_entropy<double>(p, labels);
  };

  ForwardCache<double> cache;
  auto probs = training ? net.forward(view, true, &cache) : net.infer(view, &cache);
  auto dlogits = cross_entropy_logit_grad<double>(probs, labels);
  auto grads = net.parameters().zeros_like();
  std::vector<double> dx;
  net.backward(cache, dlogits, &grads, &dx);

  std::mt19937_64 rng(17);
  const double h = 1e-6;
  int checked = 0;
  while (checked < 20) {
    auto& tensors = net.parameters().tensors;
    const std::size_t ti = rng() % tensors.size();
    const std::size_t vi = rng() % tensors[ti].values.size();
    const double analytic = grads.tensors[ti].values[vi];
    if (std::abs(analytic) < 1e-7) continue;
    const double orig = tensors[ti].values[vi];
    tensors[ti].values[vi] = orig + h;
    const double up = loss_at(net);
    tensors[ti].values[vi] = orig - h;
    const double down = loss_at(net);
    tensors[ti].values[vi] = orig;
    const double numeric = (up - down) / (2 * h);
    EXPECT_LT(relative_error(analytic, numeric), 1e-3)
        << tensors[ti].name << "[" << vi << "] analytic " << analytic << " numeric "
        << numeric;
    ++checked;
  }

  // Input gradient at a handful of cells.
  for (int k = 0; k < 10; ++k) {
    const std::size_t i = rng() % x.size();
    if (std::abs(dx[i]) < 1e-9) continue;
    const double orig = x[i];
    x[i] = orig + h;
    const double up = loss_at(net);
    x[i] = orig - h;
    const double down = loss_at(net);
    x[i] = orig;
    EXPECT_LT(relative_error(dx[i], (up - down) / (2 * h)), 1e-3) << "input[" << i << "]";
  }
}

TEST(NetworkTest, GradientsMatchFiniteDifferencesTraining) { check_gradients(true); }
TEST(NetworkTest, GradientsMatchFiniteDifferencesInference) { check_gradients(false); }

}  // namespace
}  // namespace lossydetect
