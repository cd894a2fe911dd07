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

#include <algorithm>
#include <random>

#include <cmath>

#include "lossydetect/audio/wav.h"
#include "lossydetect/inference/inference.h"
#include "lossydetect/util/errors.h"
#include "lossydetect/util/random.h"

namespace lossydetect {
namespace {

ModelConfig small_config() {
  ModelConfig c;
  c.conv_channels = {2, 2, 2, 2};
  c.lstm_hidden = 4;
  c.head_width = 8;
  return c;
}

// Counts windows by sliding a 2 s frame at a 1 s hop until the clip end is
// covered.
std::size_t window_count_oracle(std::size_t n) {
  std::size_t count = 1, end = 88200;
  while (end < n) {
    ++count;
    end += 44100;
  }
  return count;
}

TEST(Windows, CountFormula) {
  EXPECT_EQ(window_count(1), 1u);
  EXPECT_EQ(window_count(88200), 1u);
  EXPECT_EQ(window_count(88201), 2u);
  EXPECT_EQ(window_count(132300), 2u);
  EXPECT_EQ(window_count(132301), 3u);
  EXPECT_EQ(window_count(441000), 9u);
  Rng rng(17);
  std::uniform_int_distribution<std::size_t> u(1, 44100 * 600);
  for (int i = 0; i < 1000; ++i) {
    const std::size_t n = u(rng);
    ASSERT_EQ(window_count(n), window_count_oracle(n)) << n;
  }
}

TEST(Windows, ContentAndPadding) {
  AudioClip clip;
  clip.samples.resize(100000);
  for (std::size_t i = 0; i < clip.samples.size(); ++i) clip.samples[i] = static_cast<float>(i + 1);
  const auto w = windows(clip);
  ASSERT_EQ(w.size(), 2u);
  for (const auto& x : w) ASSERT_EQ(x.size(), 88200u);
  EXPECT_EQ(w[0].samples[0], 1.0f);
  EXPECT_EQ(w[1].samples[0], 44101.0f);
  EXPECT_EQ(w[1].samples[100000 - 44100 - 1], 100000.0f);
  EXPECT_EQ(w[1].samples[100000 - 44100], 0.0f);
  EXPECT_THROW(windows(AudioClip{}), ArgumentError);
}

TEST(Aggregation, ThresholdAndMean) {
  EXPECT_EQ(threshold_label(0.5, 0.5), Label::kLossy);
  EXPECT_EQ(threshold_label(0.4999, 0.5), Label::kLossless);
  const std::vector<double> p = {0.1, 0.4, 0.7};
  EXPECT_DOUBLE_EQ(mean_probability(p), 0.4);
}

class TrackFixture : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = std::filesystem::temp_directory_path() / "lossydetect_inference_test";
    std::filesystem::create_directories(dir_);
    std::vector<int16_t> pcm(150000);
    Rng rng(2);
    std::uniform_int_distribution<int> u(-8000, 8000);
    for (auto& v : pcm) v = static_cast<int16_t>(u(rng));
    write_wav_pcm16(dir_ / "a.wav", 44100, 1, pcm);
    net_.initialize(4);
  }
  void TearDown() override { std::filesystem::remove_all(dir_); }

  std::filesystem::path dir_;
  Network<float> net_{small_config()};
};

TEST_F(TrackFixture, TrackProbabilityIsMeanOfWindows) {
  const PredictionRecord r = predict_track(dir_ / "a.wav", net_, 0.5);
  ASSERT_TRUE(r.ok()) << r.error;
  ASSERT_EQ(r.window_probs.size(), window_count(150000));
  double sum = 0.0;
  for (double p : r.window_probs) {
    EXPECT_GE(p, 0.0);
    EXPECT_LE(p, 1.0);
    sum += p;
  }
  EXPECT_NEAR(r.p_lossy, sum / r.window_probs.size(), 1e-12);
  EXPECT_EQ(r.predicted, r.p_lossy >= 0.5 ? Label::kLossy : Label::kLossless);

  // Batching does not change per-window results.
  const AudioClip clip = load_audio(dir_ / "a.wav");
  const auto one = window_probabilities(net_, clip, 1);
  const auto many = window_probabilities(net_, clip, 16);
  ASSERT_EQ(one.size(), many.size());
  for (std::size_t i = 0; i < one.size(); ++i) EXPECT_NEAR(one[i], many[i], 1e-5);
}

TEST_F(TrackFixture, UnreadableFileBecomesErrorRecord) {
  const PredictionRecord r = predict_track(dir_ / "missing.wav", net_);
  EXPECT_FALSE(r.ok());
  EXPECT_FALSE(r.correct());
}

TEST_F(TrackFixture, ManifestPredictionsFilterAndOrder) {
  Manifest m;
  m.base_dir = dir_;
  m.records = {
      {"b", "a.wav", Label::kLossless, std::nullopt, DatasetId::kDs1, Split::kTest},
      {"a", "a.wav", Label::kLossy, EncodingSpec{Codec::kVorbis, 128, {}}, DatasetId::kDs1,
       Split::kTest},
      {"a", "a.wav", Label::kLossless, std::nullopt, DatasetId::kDs1, Split::kTest},
      {"c", "a.wav", Label::kLossless, std::nullopt, DatasetId::kDs1, Split::kTrain},
      {"d", "gone.wav", Label::kLossless, std::nullopt, DatasetId::kDs1, Split::kTest},
  };
  const auto preds = predict_manifest(m, net_, Split::kTest, 0.5, 2);
  ASSERT_EQ(preds.size(), 4u);
  EXPECT_EQ(preds[0].track_id, "a");
  EXPECT_EQ(*preds[0].label_true, Label::kLossless);
  EXPECT_EQ(*preds[1].label_true, Label::kLossy);
  EXPECT_EQ(preds[1].encoding->codec, Codec::kVorbis);
  EXPECT_EQ(preds[2].track_id, "b");
  EXPECT_FALSE(preds[3].ok());
  EXPECT_NEAR(preds[0].p_lossy, preds[1].p_lossy, 1e-12);

  const auto path = dir_ / "preds.jsonl";
  write_predictions(path, preds);
  const auto back = read_predictions(path);
  ASSERT_EQ(back.size(), preds.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    EXPECT_EQ(back[i].track_id, preds[i].track_id);
    EXPECT_EQ(back[i].label_true, preds[i].label_true);
    EXPECT_EQ(back[i].encoding, preds[i].encoding);
    EXPECT_EQ(back[i].window_probs.size(), preds[i].window_probs.size());
    EXPECT_NEAR(back[i].p_lossy, preds[i].p_lossy, 1e-12);
    EXPECT_EQ(back[i].error, preds[i].error);
  }
}

}  // namespace
}  // namespace lossydetect
