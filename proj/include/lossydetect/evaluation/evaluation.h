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
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "lossydetect/dataset/types.h"
#include "lossydetect/frontend/spectral.h"
#include "lossydetect/inference/inference.h"
#include "lossydetect/model/network.h"

namespace lossydetect {

struct AccuracyCell {
  int count = 0;
  int correct = 0;
  // Percentage in [0, 100]; empty for a cell without tracks.
  std::optional<double> accuracy() const {
    if (count == 0) return std::nullopt;
    return 100.0 * correct / count;
  }
  void add(bool is_correct) {
    ++count;
    correct += is_correct ? 1 : 0;
  }
};

// Unweighted mean over the non-empty cells; empty when all are empty.
std::optional<double> mean_of(std::span<const std::optional<double>> values);

struct CodecBitrateTable {
  std::map<std::pair<Codec, int>, AccuracyCell> cells;
  AccuracyCell lossless;
  // Unweighted over the 9 codec x bitrate cells and the lossless column.
  std::optional<double> mean;
  // Unweighted over the 9 codec x bitrate cells only.
  std::optional<double> lossy_mean;
  // (lossy_mean + lossless) / 2, i.e. accuracy over a balanced test set.
  std::optional<double> balanced_mean;
};

struct CutoffTable {
  std::map<std::pair<int, Codec>, AccuracyCell> by_codec;
  std::map<std::pair<int, int>, AccuracyCell> by_bitrate;
  // Extension: the full cutoff x codec x bitrate breakdown.
  std::map<std::tuple<int, Codec, int>, AccuracyCell> full;
  std::map<int, std::optional<double>> row_mean_codec;    // per cutoff
  std::map<int, std::optional<double>> row_mean_bitrate;  // per cutoff
  std::map<Codec, std::optional<double>> codec_mean;      // over cutoffs
  std::map<int, std::optional<double>> bitrate_mean;      // over cutoffs
  std::optional<double> grand_mean;  // mean of row_mean_codec
  AccuracyCell lossless;
};

struct F1Curve {
  std::vector<double> thresholds;  // 0.00 .. 1.00, step 0.01
  std::vector<double> f1;
  std::vector<std::array<int, 4>> confusion;  // tp, fp, tn, fn
  double peak_f1 = 0.0;
  double peak_threshold = 0.0;
  double area = 0.0;  // trapezoidal over [0, 1]
  int positives = 0;
  int negatives = 0;
};

struct Summary {
  std::optional<double> overall_accuracy;
  std::optional<double> lossy_mean;
  std::optional<double> lossless_accuracy;
  int tracks = 0;
  int errors = 0;  // unscorable tracks
};

struct EvalReport {
  std::string dataset;  // "ds1" / "ds2"
  std::string split = "test";
  std::string manifest_digest;
  std::string checkpoint;
  CodecBitrateTable table_codec_bitrate;
  std::optional<CutoffTable> table_cutoff;
  std::map<Codec, F1Curve> f1_curves;
  Summary summary;
};

CodecBitrateTable accuracy_table(std::span<const PredictionRecord> predictions);

// Throws ArgumentError if a lossy prediction lacks cutoff_hz.
CutoffTable cutoff_table(std::span<const PredictionRecord> predictions);

// Lossless tracks are negatives, `positive_codec` tracks positives, other
// codecs are dropped. Throws ArgumentError without positives.
F1Curve f1_curve(std::span<const PredictionRecord> predictions,
                 Codec positive_codec);

Summary summarize(std::span<const PredictionRecord> predictions);

EvalReport evaluate_predictions(std::span<const PredictionRecord> predictions,
                                const std::string& dataset,
                                const std::string& manifest_digest);

nlohmann::ordered_json report_to_json(const EvalReport& report);
EvalReport report_from_json(const nlohmann::json& j);
std::string report_markdown(const EvalReport& report);

// report.json, report.md and f1_<codec>.csv under dir.
void write_report_bundle(const EvalReport& report,
                         const std::filesystem::path& dir);
void write_f1_csv(const std::filesystem::path& path, const F1Curve& curve);

struct SaliencyMap {
  int rows = 0;
  int cols = 0;
  std::vector<float> values;  // in [0, 1]
};

// |d p[cls] / d input| per spectrogram cell, divided by its maximum. An
// all-zero gradient stays all-zero.
SaliencyMap saliency_map(const Network<float>& network,
                         const Spectrogram& spectrogram, int cls = 1);
SaliencyMap normalize_saliency(std::vector<float> raw_gradient, int rows,
                               int cols);

// Writes <stem>_spectrogram.png and <stem>_saliency.png of equal size.
void write_saliency_pngs(const std::filesystem::path& dir,
                         const std::string& stem,
                         const Spectrogram& spectrogram,
                         const SaliencyMap& saliency);

struct HoleComparison {
  int hole_cells = 0;
  double hole_mean = 0.0;
  double control_mean = 0.0;
  bool holes_exceed() const { return hole_cells > 0 && hole_mean > control_mean; }
};

// Cells below `cutoff_bin` where the lossless spectrogram exceeds the lossy
// one by at least `min_drop_db`.
std::vector<uint8_t> hole_mask(const Spectrogram& lossless,
                               const Spectrogram& lossy, int cutoff_bin,
                               float min_drop_db = 20.0f);

// Mean saliency inside the hole mask versus the same number of randomly
// chosen non-hole cells below cutoff_bin.
HoleComparison compare_hole_saliency(const SaliencyMap& saliency,
                                     std::span<const uint8_t> holes,
                                     int cutoff_bin, Rng& rng);

struct GalleryEntry {
  PredictionRecord prediction;
  std::filesystem::path image;
};

struct Gallery {
  std::vector<GalleryEntry> lossless_errors;  // lossless predicted lossy
  std::vector<GalleryEntry> lossy_errors;     // lossy predicted lossless
  int evaluated = 0;
};

// Exports a spectrogram PNG of the most confidently wrong window of every
// misclassified track plus gallery.md / gallery.json.
Gallery error_gallery(std::span<const PredictionRecord> predictions,
                      const Manifest& manifest,
                      const std::filesystem::path& out_dir);

struct DeltaReport {
  std::map<std::string, double> deltas;  // cell name -> masked - naive
  std::optional<double> naive_mean;
  std::optional<double> masked_mean;
  // masked >= naive on the headline mean (cutoff grand mean when present,
  // else the lossy mean).
  bool robustness_holds = false;
};

// Throws ArgumentError unless both reports cover the same manifest digest and
// split.
DeltaReport compare_reports(const EvalReport& naive, const EvalReport& masked);
nlohmann::ordered_json delta_to_json(const DeltaReport& delta);
std::string delta_markdown(const DeltaReport& delta);

}  // namespace lossydetect
