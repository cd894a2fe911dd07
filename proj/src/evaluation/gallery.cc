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
#include <fstream>

#include "lossydetect/evaluation/evaluation.h"
#include "lossydetect/util/errors.h"
#include "lossydetect/util/log.h"

namespace lossydetect {

Gallery error_gallery(std::span<const PredictionRecord> predictions, const Manifest& manifest,
                      const std::filesystem::path& out_dir) {
  Gallery g;
  std::filesystem::create_directories(out_dir);
  nlohmann::ordered_json index = nlohmann::ordered_json::array();
  for (const auto& p : predictions) {
    if (!p.ok() || !p.label_true) continue;
    ++g.evaluated;
    if (p.predicted == *p.label_true) continue;
    const bool lossless_error = *p.label_true == Label::kLossless;
    const std::filesystem::path audio = std::filesystem::path(p.audio_path).is_absolute()
                                            ? std::filesystem::path(p.audio_path)
                                            : manifest.base_dir / p.audio_path;
    GalleryEntry entry{p, {}};
    // The window that pushed hardest toward the wrong verdict.
    std::size_t worst = 0;
    for (std::size_t i = 1; i < p.window_probs.size(); ++i) {
      const bool worse = lossless_error ? p.window_probs[i] > p.window_probs[worst]
                                        : p.window_probs[i] < p.window_probs[worst];
      if (worse) worst = i;
    }
    const std::string sub = lossless_error ? "lossless_errors" : "lossy_errors";
    const std::string name = p.track_id + "_" + std::string(to_string(*p.label_true)) + "_w" +
                             std::to_string(worst) + ".png";
    try {
      const auto wins = windows(load_audio(audio));
      if (worst < wins.size()) {
        std::filesystem::create_directories(out_dir / sub);
        entry.image = std::filesystem::path(sub) / name;
        write_spectrogram_png(out_dir / entry.image, spectrogram(wins[worst]));
      }
    } catch (const std::exception& e) {
      log_warn() << "gallery: cannot render " << audio.string() << ": " << e.what();
    }
    auto j = prediction_to_json(p);
    j["window"] = worst;
    j["image"] = entry.image.generic_string();
    index.push_back(j);
    (lossless_error ? g.lossless_errors : g.lossy_errors).push_back(std::move(entry));
  }

  std::ofstream(out_dir / "gallery.json") << index.dump(2) << '\n';
  std::ofstream md(out_dir / "gallery.md");
  md << "# Misclassified tracks\n\n" << g.lossless_errors.size() << " lossless predicted lossy, "
     << g.lossy_errors.size() << " lossy predicted lossless, out of " << g.evaluated
     << " scored tracks.\n";
  auto section = [&](const char* title, const std::vector<GalleryEntry>& entries) {
    md << "\n## " << title << "\n\n| track | encoding | p_lossy | spectrogram |\n|---|---|---:|---|\n";
    for (const auto& e : entries) {
      std::string enc = "-";
      if (e.prediction.encoding) {
        enc = std::string(to_string(e.prediction.encoding->codec)) + " " +
              std::to_string(e.prediction.encoding->bitrate_kbps) + "k";
        if (e.prediction.encoding->cutoff_hz) {
          enc += " @" + std::to_string(*e.prediction.encoding->cutoff_hz) + " Hz";
        }
      }
      char p[16];
      std::snprintf(p, sizeof(p), "%.3f", e.prediction.p_lossy);
      md << "| " << e.prediction.track_id << " | " << enc << " | " << p << " | ";
      if (!e.image.empty()) md << "![](" << e.image.generic_string() << ")";
      md << " |\n";
    }
  };
  section("Lossless predicted lossy", g.lossless_errors);
  section("Lossy predicted lossless", g.lossy_errors);
  return g;
}

}  // namespace lossydetect
