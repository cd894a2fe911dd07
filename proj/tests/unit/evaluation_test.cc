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

#include <fstream>

#include "lossydetect/evaluation/evaluation.h"
#include "lossydetect/util/errors.h"
#include "lossydetect/util/random.h"

namespace lossydetect {
namespace {

PredictionRecord pred(const std::string& id, Label truth, double p,
                      std::optional<EncodingSpec> enc = std::nullopt) {
  PredictionRecord r;
  r.track_id = id;
  r.label_true = truth;
  r.encoding = enc;
  r.p_lossy = p;
  r.window_probs = {p};
  r.predicted = threshold_label(p, 0.5);
  r.split = Split::kTest;
  return r;
}

std::vector<PredictionRecord> random_predictions(uint64_t seed, bool with_cutoff, int n = 400) {
  Rng rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<PredictionRecord> out;
  for (int i = 0; i < n; ++i) {
    const std::string id = "t" + std::to_string(i);
    out.push_back(pred(id, Label::kLossless, u(rng) * 0.8));
    EncodingSpec e{kAllCodecs[i % 3], kBitratesKbps[(i / 3) % 3], {}};
    if (with_cutoff) e.cutoff_hz = kCutoffsHz[(i / 9) % 4];
    out.push_back(pred(id, Label::kLossy, 0.2 + u(rng) * 0.8, e));
  }
  return out;
}

TEST(F1, MatchesEnumerationAndConserves) {
  const auto preds = random_predictions(1, false);
  for (Codec c : kAllCodecs) {
    const F1Curve curve = f1_curve(preds, c);
    ASSERT_EQ(curve.thresholds.size(), 101u);
    int kept = 0, pos = 0;
    for (const auto& p : preds) {
      const bool is_pos = p.encoding && p.encoding->codec == c;
      if (is_pos || *p.label_true == Label::kLossless) ++kept;
      pos += is_pos;
    }
    EXPECT_EQ(curve.positives, pos);
    EXPECT_EQ(curve.negatives, kept - pos);
    for (std::size_t i = 0; i < 101; ++i) {
      const double t = i / 100.0;
      ASSERT_DOUBLE_EQ(curve.thresholds[i], t);
      int tp = 0, fp = 0, tn = 0, fn = 0;
      for (const auto& p : preds) {
        const bool is_pos = p.encoding && p.encoding->codec == c;
        if (!is_pos && *p.label_true != Label::kLossless) continue;
        const bool says_pos = p.p_lossy >= t;
        tp += is_pos && says_pos;
        fp += !is_pos && says_pos;
        tn += !is_pos && !says_pos;
        fn += is_pos && !says_pos;
      }
      const auto& m = curve.confusion[i];
      ASSERT_EQ(m[0] + m[1] + m[2] + m[3], kept);
      ASSERT_EQ(m, (std::array<int, 4>{tp, fp, tn, fn}));
      const double f1 = 2.0 * tp / (2.0 * tp + fp + fn);
      ASSERT_NEAR(curve.f1[i], f1, 1e-12);
    }
    // Everything predicted positive at t = 0: F1 = 2P / (P + 1), P = prevalence.
    const double prevalence = static_cast<double>(pos) / kept;
    EXPECT_NEAR(curve.f1[0], 2 * prevalence / (prevalence + 1), 1e-12);
    double area = 0.0;
    for (std::size_t i = 1; i < 101; ++i) area += 0.005 * (curve.f1[i] + curve.f1[i - 1]);
    EXPECT_NEAR(curve.area, area, 1e-9);
    const double peak = *std::max_element(curve.f1.begin(), curve.f1.end());
    EXPECT_DOUBLE_EQ(curve.peak_f1, peak);
  }
  std::vector<PredictionRecord> no_pos = {pred("x", Label::kLossless, 0.1)};
  EXPECT_THROW(f1_curve(no_pos, Codec::kVorbis), ArgumentError);
}

TEST(Tables, MeansRecomputeFromCells) {
  const auto preds = random_predictions(2, false);
  const CodecBitrateTable t = accuracy_table(preds);
  ASSERT_EQ(t.cells.size(), 9u);
  double sum = 0.0;
  int total = 0;
  for (const auto& [k, cell] : t.cells) {
    sum += *cell.accuracy();
    total += cell.count;
  }
  EXPECT_EQ(total, 400);
  EXPECT_NEAR(*t.lossy_mean, sum / 9, 1e-12);
  EXPECT_NEAR(*t.mean, (sum + *t.lossless.accuracy()) / 10, 1e-12);
  EXPECT_NEAR(*t.balanced_mean, (*t.lossy_mean + *t.lossless.accuracy()) / 2, 1e-12);
}

TEST(Tables, CutoffTableGrandMean) {
  const auto preds = random_predictions(3, true);
  const CutoffTable t = cutoff_table(preds);
  ASSERT_EQ(t.row_mean_codec.size(), 4u);
  double rows = 0.0;
  for (int cut : kCutoffsHz) {
    double row = 0.0, row_b = 0.0;
    for (Codec c : kAllCodecs) row += *t.by_codec.at({cut, c}).accuracy();
    for (int br : kBitratesKbps) row_b += *t.by_bitrate.at({cut, br}).accuracy();
    EXPECT_NEAR(*t.row_mean_codec.at(cut), row / 3, 1e-12);
    EXPECT_NEAR(*t.row_mean_bitrate.at(cut), row_b / 3, 1e-12);
    rows += row / 3;
  }
  EXPECT_NEAR(*t.grand_mean, rows / 4, 1e-12);
  for (Codec c : kAllCodecs) {
    double col = 0.0;
    for (int cut : kCutoffsHz) col += *t.by_codec.at({cut, c}).accuracy();
    EXPECT_NEAR(*t.codec_mean.at(c), col / 4, 1e-12);
  }
  const auto no_cutoff = random_predictions(3, false);
  EXPECT_THROW(cutoff_table(no_cutoff), ArgumentError);
}

TEST(Tables, EmptyCellsAreSkipped) {
  std::vector<PredictionRecord> preds = {
      pred("a", Label::kLossless, 0.1),
      pred("a", Label::kLossy, 0.9, EncodingSpec{Codec::kVorbis, 128, {}}),
      pred("b", Label::kLossy, 0.1, EncodingSpec{Codec::kMp3Lame, 320, {}}),
  };
  const CodecBitrateTable t = accuracy_table(preds);
  EXPECT_FALSE(t.cells.at({Codec::kFdkAac, 256}).accuracy());
  EXPECT_DOUBLE_EQ(*t.lossy_mean, 50.0);
  EXPECT_DOUBLE_EQ(*t.mean, 200.0 / 3);
  const Summary s = summarize(preds);
  EXPECT_NEAR(*s.overall_accuracy, 200.0 / 3, 1e-12);
  EXPECT_EQ(s.tracks, 3);
}

TEST(Report, JsonRoundTripAndBundle) {
  const auto preds = random_predictions(4, true, 60);
  const EvalReport r = evaluate_predictions(preds, "ds2", "abc");
  ASSERT_TRUE(r.table_cutoff.has_value());
  EXPECT_EQ(r.f1_curves.size(), 3u);
  const EvalReport back = report_from_json(report_to_json(r));
  EXPECT_EQ(report_to_json(back).dump(), report_to_json(r).dump());
  const auto dir = std::filesystem::temp_directory_path() / "lossydetect_report_test";
  std::filesystem::remove_all(dir);
  write_report_bundle(r, dir);
  for (const char* f : {"report.json", "report.md", "f1_fdk_aac.csv", "f1_vorbis.csv",
                        "f1_mp3lame.csv"}) {
    EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
  }
  std::ifstream csv(dir / "f1_vorbis.csv");
  int lines = 0;
  for (std::string line; std::getline(csv, line);) ++lines;
  EXPECT_EQ(lines, 102);
  std::filesystem::remove_all(dir);
}

TEST(Report, OneImprovedCellGivesOneDelta) {
  auto preds = random_predictions(5, true, 36);
  const EvalReport naive = evaluate_predictions(preds, "ds2", "d");
  // Flip one wrong lossy prediction to right.
  for (auto& p : preds) {
    if (*p.label_true == Label::kLossy && p.predicted == Label::kLossless) {
      p.p_lossy = 0.99;
      p.predicted = Label::kLossy;
      break;
    }
  }
  EvalReport masked = evaluate_predictions(preds, "ds2", "d");
  masked.f1_curves = naive.f1_curves;
  const DeltaReport d = compare_reports(naive, masked);
  int nonzero = 0;
  for (const auto& [k, v] : d.deltas) {
    const bool cell = k.rfind("codec_bitrate/", 0) == 0 && k != "codec_bitrate/lossy_mean";
    if (cell && v != 0.0) ++nonzero;
  }
  EXPECT_EQ(nonzero, 1);
  EXPECT_TRUE(d.robustness_holds);
  masked.manifest_digest = "other";
  EXPECT_THROW(compare_reports(naive, masked), ArgumentError);
}

TEST(Saliency, NormalizationAndHoles) {
  const SaliencyMap s = normalize_saliency({-4.0f, 2.0f, 0.0f, 1.0f, -1.0f, 0.5f}, 2, 3);
  EXPECT_EQ(s.rows, 2);
  EXPECT_EQ(s.cols, 3);
  EXPECT_EQ(s.values, (std::vector<float>{1.0f, 0.5f, 0.0f, 0.25f, 0.25f, 0.125f}));
  EXPECT_EQ(normalize_saliency({0.0f, 0.0f}, 1, 2).values, (std::vector<float>{0.0f, 0.0f}));
  EXPECT_THROW(normalize_saliency({1.0f}, 2, 2), ContractError);

  Spectrogram clean, lossy;
  clean.n_frames = lossy.n_frames = 4;
  clean.values.assign(513 * 4, -20.0f);
  lossy.values = clean.values;
  lossy.at(10, 1) = -60.0f;   // a hole
  lossy.at(11, 2) = -30.0f;   // too shallow
  lossy.at(400, 0) = -80.0f;  // above the cutoff
  const auto holes = hole_mask(clean, lossy, 300, 20.0f);
  int n = 0;
  for (auto h : holes) n += h;
  EXPECT_EQ(n, 1);
  EXPECT_EQ(holes[10 * 4 + 1], 1);

  SaliencyMap sal;
  sal.rows = 513;
  sal.cols = 4;
  sal.values.assign(513 * 4, 0.1f);
  sal.values[10 * 4 + 1] = 0.9f;
  Rng rng(1);
  const HoleComparison c = compare_hole_saliency(sal, holes, 300, rng);
  EXPECT_EQ(c.hole_cells, 1);
  EXPECT_FLOAT_EQ(c.hole_mean, 0.9f);
  EXPECT_FLOAT_EQ(c.control_mean, 0.1f);
  EXPECT_TRUE(c.holes_exceed());
}

TEST(Saliency, MapShapeAndRange) {
  ModelConfig cfg;
  cfg.conv_channels = {2, 2, 2, 2};
  cfg.lstm_hidden = 4;
  cfg.head_width = 8;
  Network<float> net(cfg);
  net.initialize(2);
  Rng rng(3);
  std::vector<float> x(kClipSamples);
  std::normal_distribution<float> g(0.0f, 0.2f);
  for (float& v : x) v = g(rng);
  const Spectrogram s = spectrogram(x);
  const SaliencyMap m = saliency_map(net, s, 1);
  EXPECT_EQ(m.rows, 513);
  EXPECT_EQ(m.cols, 173);
  float hi = 0.0f;
  for (float v : m.values) {
    ASSERT_GE(v, 0.0f);
    ASSERT_LE(v, 1.0f);
    hi = std::max(hi, v);
  }
  EXPECT_FLOAT_EQ(hi, 1.0f);
}

}  // namespace
}  // namespace lossydetect
