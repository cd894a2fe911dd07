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
#include <fstream>

#include "lossydetect/audio/wav.h"
#include "lossydetect/model/checkpoint.h"
#include "lossydetect/training/trainer.h"
#include "lossydetect/util/errors.h"
#include "lossydetect/util/random.h"

namespace lossydetect {
namespace {

ModelConfig small_config() {
  ModelConfig c;
  c.conv_channels = {4, 4, 4, 4};
  c.lstm_hidden = 8;
  c.head_width = 16;
  return c;
}

// Lossless tracks are broadband noise; their "lossy" twins pass through a
// 5-tap moving average, which strongly attenuates everything above 8 kHz.
class TinyDataset : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = std::filesystem::temp_directory_path() /
           ("lossydetect_training_test_" +
            std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    std::filesystem::remove_all(dir_);
    std::filesystem::create_directories(dir_);
    manifest_.base_dir = dir_;
    for (int i = 0; i < 10; ++i) {
      const std::string id = "t" + std::to_string(i);
      Rng rng(100 + i);
      std::normal_distribution<double> g(0.0, 3000.0);
      std::vector<double> x(3 * 44100);
      for (double& v : x) v = g(rng);
      std::vector<int16_t> clean(x.size()), dull(x.size());
      for (std::size_t n = 0; n < x.size(); ++n) {
        clean[n] = static_cast<int16_t>(std::clamp(x[n], -32768.0, 32767.0));
        double acc = 0.0;
        for (int k = 0; k < 5 && k <= static_cast<int>(n); ++k) acc += x[n - k];
        dull[n] = static_cast<int16_t>(std::clamp(acc / 5.0, -32768.0, 32767.0));
      }
      write_wav_pcm16(dir_ / (id + ".wav"), 44100, 1, clean);
      write_wav_pcm16(dir_ / (id + "_lossy.wav"), 44100, 1, dull);
      const Split split = i < 6 ? Split::kTrain : i < 8 ? Split::kVal : Split::kTest;
      manifest_.records.push_back(
          {id, id + ".wav", Label::kLossless, std::nullopt, DatasetId::kDs1, split});
      manifest_.records.push_back({id, id + "_lossy.wav", Label::kLossy,
                                   EncodingSpec{Codec::kMp3Lame, 128, {}}, DatasetId::kDs1,
                                   split});
    }
  }
  void TearDown() override { std::filesystem::remove_all(dir_); }

  TrainConfig config(int epochs) const {
    TrainConfig c;
    c.batch_size = 4;
    c.max_epochs = epochs;
    c.learning_rate = 3e-3;
    c.early_stop_patience = epochs;
    c.seed = 7;
    return c;
  }

  std::filesystem::path dir_;
  Manifest manifest_;
};

TEST_F(TinyDataset, TestRecordsAreRefused) {
  Rng rng(1);
  const TrainConfig c = config(1);
  EXPECT_THROW(make_example(manifest_, manifest_.records.back(), rng, c), ContractError);
  const Example e = make_example(manifest_, manifest_.records.front(), rng, c);
  EXPECT_EQ(e.spectrogram.n_frames, 173);
  EXPECT_EQ(e.label, 0);
  EXPECT_FALSE(e.mask.has_value());
}

TEST_F(TinyDataset, MaskProbabilityControlsMasking) {
  TrainConfig c = config(1);
  c.mask_enabled = true;
  c.mask_probability = 1.0;
  Rng rng(2);
  for (int i = 0; i < 5; ++i) {
    const Example e = make_example(manifest_, manifest_.records[1], rng, c);
    ASSERT_TRUE(e.mask.has_value());
    EXPECT_GE(e.mask->cutoff_hz, 14000.0);
    EXPECT_EQ(e.mask->fill_value, e.spectrogram.min_value());
    for (int b = e.mask->first_masked_bin; b < 513; ++b) {
      ASSERT_EQ(e.spectrogram.at(b, 0), e.mask->fill_value);
    }
  }
  c.mask_probability = 0.0;
  EXPECT_FALSE(make_example(manifest_, manifest_.records[1], rng, c).mask.has_value());
}

TEST_F(TinyDataset, SameSeedSameWeightsAcrossWorkerCounts) {
  TrainConfig a = config(1);
  TrainConfig b = config(1);
  b.workers = 2;
  const TrainResult ra = train(manifest_, small_config(), a, dir_ / "run_a");
  const TrainResult rb = train(manifest_, small_config(), b, dir_ / "run_b");
  const Checkpoint ca = load_checkpoint(ra.checkpoint);
  const Checkpoint cb = load_checkpoint(rb.checkpoint);
  ASSERT_EQ(ca.parameters.tensors.size(), cb.parameters.tensors.size());
  for (std::size_t i = 0; i < ca.parameters.tensors.size(); ++i) {
    EXPECT_EQ(ca.parameters.tensors[i].values, cb.parameters.tensors[i].values);
  }
  EXPECT_EQ(ra.history.front().train_loss, rb.history.front().train_loss);
  for (const char* f : {"config.json", "metrics.csv", "train.log", "best.ckpt"}) {
    EXPECT_TRUE(std::filesystem::exists(dir_ / "run_a" / f)) << f;
  }
}

TEST_F(TinyDataset, LearnsSeparableToyProblem) {
  const TrainResult r = train(manifest_, small_config(), config(25), dir_ / "run");
  ASSERT_FALSE(r.history.empty());
  EXPECT_LT(r.history.back().train_loss, r.history.front().train_loss);
  EXPECT_DOUBLE_EQ(r.best_val_accuracy, 100.0);
}

TEST(TrainConfigTest, ValidateAndJson) {
  TrainConfig c;
  c.mask_probability = 1.5;
  EXPECT_THROW(c.validate(), ArgumentError);
  c.mask_probability = 0.5;
  c.batch_size = 0;
  EXPECT_THROW(c.validate(), ArgumentError);
  c.batch_size = 8;
  nlohmann::json j = c;
  const TrainConfig back = j.get<TrainConfig>();
  EXPECT_EQ(back.batch_size, 8);
  EXPECT_EQ(back.mask_probability, 0.5);
}

TEST(TrainTest, RequiresTrainAndValRecords) {
  Manifest m;
  EXPECT_THROW(train(m, small_config(), TrainConfig{}, std::filesystem::temp_directory_path() /
                                                             "lossydetect_empty_run"),
               ArgumentError);
}

}  // namespace
}  // namespace lossydetect
