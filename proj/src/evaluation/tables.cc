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

#include <algorithm>
#include <set>

#include "lossydetect/evaluation/evaluation.h"
#include "lossydetect/util/errors.h"

namespace lossydetect {

std::optional<double> mean_of(std::span<const std::optional<double>> values) {
  double sum = 0.0;
  int n = 0;
  for (const auto& v : values) {
    if (v) {
      sum += *v;
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return sum / n;
}

namespace {

bool scorable(const PredictionRecord& p) { return p.ok() && p.label_true.has_value(); }

bool predicted_right(const PredictionRecord& p) { return p.predicted == *p.label_true; }

}  // namespace

CodecBitrateTable accuracy_table(std::span<const PredictionRecord> predictions) {
  CodecBitrateTable t;
  for (Codec c : kAllCodecs) {
    for (int br : kBitratesKbps) t.cells[{c, br}];
  }
  for (const auto& p : predictions) {
    if (!scorable(p)) continue;
    if (*p.label_true == Label::kLossless) {
      t.lossless.add(predicted_right(p));
    } else {
      if (!p.encoding) throw ArgumentError("lossy prediction without encoding: " + p.track_id);
      t.cells[{p.encoding->codec, p.encoding->bitrate_kbps}].add(predicted_right(p));
    }
  }
  std::vector<std::optional<double>> lossy;
  for (const auto& [key, cell] : t.cells) lossy.push_back(cell.accuracy());
  t.lossy_mean = mean_of(lossy);
  auto all = lossy;
  all.push_back(t.lossless.accuracy());
  t.mean = mean_of(all);
  if (t.lossy_mean && t.lossless.accuracy()) {
    t.balanced_mean = (*t.lossy_mean + *t.lossless.accuracy()) / 2.0;
  }
  return t;
}

CutoffTable cutoff_table(std::span<const PredictionRecord> predictions) {
  CutoffTable t;
  for (int cut : kCutoffsHz) {
    for (Codec c : kAllCodecs) t.by_codec[{cut, c}];
    for (int br : kBitratesKbps) t.by_bitrate[{cut, br}];
  }
  for (const auto& p : predictions) {
    if (!scorable(p)) continue;
    if (*p.label_true == Label::kLossless) {
      t.lossless.add(predicted_right(p));
      continue;
    }
    if (!p.encoding || !p.encoding->cutoff_hz) {
      throw ArgumentError("lossy prediction without cutoff: " + p.track_id);
    }
    const int cut = *p.encoding->cutoff_hz;
    const bool right = predicted_right(p);
    t.by_codec[{cut, p.encoding->codec}].add(right);
    t.by_bitrate[{cut, p.encoding->bitrate_kbps}].add(right);
    t.full[{cut, p.encoding->codec, p.encoding->bitrate_kbps}].add(right);
  }
  std::set<int> cutoffs;
  for (const auto& [key, cell] : t.by_codec) cutoffs.insert(key.first);
  for (int cut : cutoffs) {
    std::vector<std::optional<double>> row_c, row_b;
    for (const auto& [key, cell] : t.by_codec) {
      if (key.first == cut) row_c.push_back(cell.accuracy());
    }
    for (const auto& [key, cell] : t.by_bitrate) {
      if (key.first == cut) row_b.push_back(cell.accuracy());
    }
    t.row_mean_codec[cut] = mean_of(row_c);
    t.row_mean_bitrate[cut] = mean_of(row_b);
  }
  for (Codec c : kAllCodecs) {
    std::vector<std::optional<double>> col;
    for (int cut : cutoffs) col.push_back(t.by_codec[{cut, c}].accuracy());
    t.codec_mean[c] = mean_of(col);
  }
  for (int br : kBitratesKbps) {
    std::vector<std::optional<double>> col;
    for (int cut : cutoffs) col.push_back(t.by_bitrate[{cut, br}].accuracy());
    t.bitrate_mean[br] = mean_of(col);
  }
  std::vector<std::optional<double>> rows;
  for (const auto& [cut, m] : t.row_mean_codec) rows.push_back(m);
  t.grand_mean = mean_of(rows);
  return t;
}

F1Curve f1_curve(std::span<const PredictionRecord> predictions, Codec positive_codec) {
  std::vector<double> pos, neg;
  for (const auto& p : predictions) {
    if (!scorable(p)) continue;
    if (*p.label_true == Label::kLossless) {
      neg.push_back(p.p_lossy);
    } else if (p.encoding && p.encoding->codec == positive_codec) {
      pos.push_back(p.p_lossy);
    }
  }
  if (pos.empty()) {
    throw ArgumentError("no positives for codec " + std::string(to_string(positive_codec)));
  }
  F1Curve c;
  c.positives = static_cast<int>(pos.size());
  c.negatives = static_cast<int>(neg.size());
  for (int i = 0; i <= 100; ++i) {
    const double t = i / 100.0;
    const int tp = static_cast<int>(std::count_if(pos.begin(), pos.end(), [&](double p) { return p >= t; }));
    const int fp = static_cast<int>(std::count_if(neg.begin(), neg.end(), [&](double p) { return p >= t; }));
    const int fn = c.positives - tp;
    const int tn = c.negatives - fp;
    const int denom = 2 * tp + fp + fn;
    const double f1 = denom > 0 ? 2.0 * tp / denom : 0.0;
    c.thresholds.push_back(t);
    c.f1.push_back(f1);
    c.confusion.push_back({tp, fp, tn, fn});
    if (f1 > c.peak_f1) {
      c.peak_f1 = f1;
      c.peak_threshold = t;
    }
  }
  for (std::size_t i = 1; i < c.f1.size(); ++i) {
    c.area += 0.5 * (c.f1[i] + c.f1[i - 1]) * (c.thresholds[i] - c.thresholds[i - 1]);
  }
  return c;
}

Summary summarize(std::span<const PredictionRecord> predictions) {
  Summary s;
  int ok = 0, correct = 0;
  bool has_cutoff = false;
  for (const auto& p : predictions) {
    ++s.tracks;
    if (!p.ok()) {
      ++s.errors;
      continue;
    }
    if (!p.label_true) continue;
    ++ok;
    correct += predicted_right(p);
    has_cutoff |= p.encoding && p.encoding->cutoff_hz.has_value();
  }
  if (ok > 0) s.overall_accuracy = 100.0 * correct / ok;
  if (has_cutoff) {
    const CutoffTable t = cutoff_table(predictions);
    s.lossy_mean = t.grand_mean;
    s.lossless_accuracy = t.lossless.accuracy();
  } else {
    const CodecBitrateTable t = accuracy_table(predictions);
    s.lossy_mean = t.lossy_mean;
    s.lossless_accuracy = t.lossless.accuracy();
  }
  return s;
}

EvalReport evaluate_predictions(std::span<const PredictionRecord> predictions,
                                const std::string& dataset, const std::string& manifest_digest) {
  EvalReport r;
  r.dataset = dataset;
  r.manifest_digest = manifest_digest;
  for (const auto& p : predictions) {
    if (p.split) {
      r.split = std::string(to_string(*p.split));
      break;
    }
  }
  r.table_codec_bitrate = accuracy_table(predictions);
  const bool has_cutoff = std::any_of(predictions.begin(), predictions.end(), [](const auto& p) {
    return p.encoding && p.encoding->cutoff_hz.has_value();
  });
  if (has_cutoff) r.table_cutoff = cutoff_table(predictions);
  for (Codec c : kAllCodecs) {
    const bool any = std::any_of(predictions.begin(), predictions.end(), [&](const auto& p) {
      return p.ok() && p.encoding && p.encoding->codec == c;
    });
    if (any) r.f1_curves[c] = f1_curve(predictions, c);
  }
  r.summary = summarize(predictions);
  return r;
}

}  // namespace lossydetect
