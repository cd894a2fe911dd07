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
#include <cmath>
#include <numeric>

#include "lossydetect/evaluation/evaluation.h"
#include "lossydetect/util/errors.h"
#include "lossydetect/util/png.h"

namespace lossydetect {

SaliencyMap normalize_saliency(std::vector<float> raw_gradient, int rows, int cols) {
  if (raw_gradient.size() != static_cast<std::size_t>(rows) * cols) {
    throw ContractError("saliency size does not match rows * cols");
  }
  SaliencyMap s;
  s.rows = rows;
  s.cols = cols;
  float peak = 0.0f;
  for (float& v : raw_gradient) {
    v = std::abs(v);
    peak = std::max(peak, v);
  }
  if (peak > 0.0f) {
    for (float& v : raw_gradient) v /= peak;
  }
  s.values = std::move(raw_gradient);
  return s;
}

SaliencyMap saliency_map(const Network<float>& network, const Spectrogram& spectrogram, int cls) {
  const auto& cfg = network.config();
  if (spectrogram.n_bins != cfg.n_bins() || spectrogram.n_frames != cfg.n_frames) {
    throw ContractError("saliency: spectrogram shape does not match the network");
  }
  if (cls < 0 || cls >= cfg.n_classes) throw ArgumentError("saliency: class out of range");
  ForwardCache<float> cache;
  const auto probs =
      network.infer({spectrogram.values, {1, 1, cfg.n_bins(), cfg.n_frames}}, &cache);
  const auto g = probability_logit_grad<float>(probs, cls, cfg.n_classes);
  std::vector<float> dx;
  network.backward(cache, g, nullptr, &dx);
  return normalize_saliency(std::move(dx), cfg.n_bins(), cfg.n_frames);
}

void write_saliency_pngs(const std::filesystem::path& dir, const std::string& stem,
                         const Spectrogram& spectrogram, const SaliencyMap& saliency) {
  std::filesystem::create_directories(dir);
  write_spectrogram_png(dir / (stem + "_spectrogram.png"), spectrogram);
  write_heatmap_png(dir / (stem + "_saliency.png"), saliency.rows, saliency.cols, saliency.values,
                    0.0f, 1.0f);
}

std::vector<uint8_t> hole_mask(const Spectrogram& lossless, const Spectrogram& lossy,
                               int cutoff_bin, float min_drop_db) {
  if (lossless.n_bins != lossy.n_bins || lossless.n_frames != lossy.n_frames) {
    throw ContractError("hole_mask: spectrogram shapes differ");
  }
  std::vector<uint8_t> mask(lossless.values.size(), 0);
  const int top = std::clamp(cutoff_bin, 0, lossless.n_bins);
  for (int b = 0; b < top; ++b) {
    for (int f = 0; f < lossless.n_frames; ++f) {
      if (lossless.at(b, f) - lossy.at(b, f) >= min_drop_db) {
        mask[static_cast<std::size_t>(b) * lossless.n_frames + f] = 1;
      }
    }
  }
  return mask;
}

HoleComparison compare_hole_saliency(const SaliencyMap& saliency, std::span<const uint8_t> holes,
                                     int cutoff_bin, Rng& rng) {
  if (holes.size() != saliency.values.size()) {
    throw ContractError("compare_hole_saliency: mask size does not match saliency");
  }
  HoleComparison c;
  std::vector<std::size_t> control_pool;
  double hole_sum = 0.0;
  const int top = std::clamp(cutoff_bin, 0, saliency.rows);
  for (int b = 0; b < top; ++b) {
    for (int f = 0; f < saliency.cols; ++f) {
      const std::size_t i = static_cast<std::size_t>(b) * saliency.cols + f;
      if (holes[i]) {
        hole_sum += saliency.values[i];
        ++c.hole_cells;
      } else {
        control_pool.push_back(i);
      }
    }
  }
  if (c.hole_cells == 0 || control_pool.empty()) return c;
  c.hole_mean = hole_sum / c.hole_cells;
  const std::size_t n = std::min<std::size_t>(c.hole_cells, control_pool.size());
  // Partial Fisher-Yates: the first n entries become a uniform sample.
  for (std::size_t i = 0; i < n; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, control_pool.size() - 1);
    std::swap(control_pool[i], control_pool[pick(rng)]);
  }
  double control_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) control_sum += saliency.values[control_pool[i]];
  c.control_mean = control_sum / static_cast<double>(n);
  return c;
}

}  // namespace lossydetect
