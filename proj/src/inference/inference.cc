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

#include "lossydetect/inference/inference.h"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <tuple>

#include "lossydetect/model/checkpoint.h"
#include "lossydetect/util/errors.h"
#include "lossydetect/util/log.h"
#include "lossydetect/util/thread_pool.h"

namespace lossydetect {

std::size_t window_count(std::size_t n_samples) {
  if (n_samples <= static_cast<std::size_t>(kClipSamples)) return 1;
  return 1 + (n_samples - kClipSamples + kWindowHop - 1) / kWindowHop;
}

std::vector<AudioClip> windows(const AudioClip& clip) {
  if (clip.samples.empty()) throw ArgumentError("windows: empty clip");
  const std::size_t n = window_count(clip.size());
  std::vector<AudioClip> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t start = i * kWindowHop;
    const std::size_t end = std::min(clip.size(), start + kClipSamples);
    out[i].sample_rate_hz = clip.sample_rate_hz;
    out[i].samples.assign(clip.samples.begin() + start, clip.samples.begin() + end);
    out[i].samples.resize(kClipSamples, 0.0f);
  }
  return out;
}

Label threshold_label(double p_lossy, double threshold) {
  return p_lossy >= threshold ? Label::kLossy : Label::kLossless;
}

double mean_probability(std::span<const double> window_probs) {
  if (window_probs.empty()) throw ArgumentError("mean_probability: no windows");
  return std::accumulate(window_probs.begin(), window_probs.end(), 0.0) /
         static_cast<double>(window_probs.size());
}

std::vector<double> window_probabilities(const Network<float>& network, const AudioClip& clip,
                                         int batch) {
  const auto wins = windows(clip);
  const int frames = network.config().n_frames;
  const int bins = network.config().n_bins();
  std::vector<double> probs;
  probs.reserve(wins.size());
  std::vector<float> input;
  for (std::size_t start = 0; start < wins.size(); start += batch) {
    const std::size_t count = std::min<std::size_t>(batch, wins.size() - start);
    input.resize(count * bins * frames);
    for (std::size_t i = 0; i < count; ++i) {
      const Spectrogram s = spectrogram(wins[start + i]);
      std::copy(s.values.begin(), s.values.end(), input.begin() + i * bins * frames);
    }
    const auto p = network.infer({input, {static_cast<int>(count), 1, bins, frames}});
    for (std::size_t i = 0; i < count; ++i) probs.push_back(p[i * 2 + 1]);
  }
  return probs;
}

PredictionRecord predict_track(const std::filesystem::path& path, const Network<float>& network,
                               double threshold) {
  PredictionRecord r;
  r.audio_path = path.string();
  r.track_id = path.stem().string();
  r.threshold = threshold;
  try {
    const AudioClip clip = load_audio(path);
    r.window_probs = window_probabilities(network, clip);
    r.p_lossy = mean_probability(r.window_probs);
    r.predicted = threshold_label(r.p_lossy, threshold);
  } catch (const ContractError&) {
    throw;
  } catch (const std::exception& e) {
    r.error = e.what();
    log_warn() << "cannot score " << path.string() << ": " << e.what();
  }
  return r;
}

PredictionRecord predict_track(const std::filesystem::path& path,
                               const std::filesystem::path& checkpoint, double threshold) {
  const Network<float> net = load_checkpoint(checkpoint).make_network();
  return predict_track(path, net, threshold);
}

std::vector<PredictionRecord> predict_manifest(const Manifest& manifest,
                                               const Network<float>& network, Split split,
                                               double threshold, int workers) {
  std::vector<const TrackRecord*> selected;
  for (const auto& rec : manifest.records) {
    if (rec.split == split) selected.push_back(&rec);
  }
  std::sort(selected.begin(), selected.end(), [](const TrackRecord* a, const TrackRecord* b) {
    return std::tie(a->track_id, a->label) < std::tie(b->track_id, b->label);
  });
  std::vector<PredictionRecord> out(selected.size());
  parallel_for(selected.size(), workers, [&](std::size_t i) {
    const TrackRecord& rec = *selected[i];
    PredictionRecord r = predict_track(manifest.resolve(rec), network, threshold);
    r.track_id = rec.track_id;
    r.audio_path = rec.audio_path.string();
    r.label_true = rec.label;
    r.encoding = rec.encoding;
    r.dataset_id = rec.dataset_id;
    r.split = rec.split;
    out[i] = std::move(r);
  });
  return out;
}

nlohmann::ordered_json prediction_to_json(const PredictionRecord& r) {
  nlohmann::ordered_json j;
  j["track_id"] = r.track_id;
  j["audio_path"] = r.audio_path;
  j["p_lossy"] = r.p_lossy;
  j["window_probs"] = r.window_probs;
  j["label_true"] = r.label_true ? nlohmann::ordered_json(to_string(*r.label_true))
                                 : nlohmann::ordered_json();
  if (r.encoding) {
    j["codec"] = to_string(r.encoding->codec);
    j["bitrate_kbps"] = r.encoding->bitrate_kbps;
    j["cutoff_hz"] = r.encoding->cutoff_hz ? nlohmann::ordered_json(*r.encoding->cutoff_hz)
                                           : nlohmann::ordered_json();
  } else {
    j["codec"] = nullptr;
    j["bitrate_kbps"] = nullptr;
    j["cutoff_hz"] = nullptr;
  }
  j["dataset_id"] = r.dataset_id ? nlohmann::ordered_json(to_string(*r.dataset_id))
                                 : nlohmann::ordered_json();
  j["split"] = r.split ? nlohmann::ordered_json(to_string(*r.split)) : nlohmann::ordered_json();
  j["predicted"] = to_string(r.predicted);
  j["threshold"] = r.threshold;
  if (!r.error.empty()) j["error"] = r.error;
  return j;
}

PredictionRecord prediction_from_json(const nlohmann::json& j) {
  PredictionRecord r;
  r.track_id = j.at("track_id").get<std::string>();
  r.audio_path = j.value("audio_path", "");
  r.p_lossy = j.at("p_lossy").get<double>();
  r.window_probs = j.value("window_probs", std::vector<double>{});
  if (j.contains("label_true") && !j["label_true"].is_null()) {
    r.label_true = parse_label(j["label_true"].get<std::string>());
  }
  if (j.contains("codec") && !j["codec"].is_null()) {
    EncodingSpec e;
    e.codec = parse_codec(j["codec"].get<std::string>());
    e.bitrate_kbps = j.at("bitrate_kbps").get<int>();
    if (j.contains("cutoff_hz") && !j["cutoff_hz"].is_null()) {
      e.cutoff_hz = j["cutoff_hz"].get<int>();
    }
    r.encoding = e;
  }
  if (j.contains("dataset_id") && !j["dataset_id"].is_null()) {
    r.dataset_id = parse_dataset_id(j["dataset_id"].get<std::string>());
  }
  if (j.contains("split") && !j["split"].is_null()) {
    r.split = parse_split(j["split"].get<std::string>());
  }
  r.predicted = parse_label(j.at("predicted").get<std::string>());
  r.threshold = j.value("threshold", 0.5);
  r.error = j.value("error", "");
  return r;
}

void write_predictions(const std::filesystem::path& path,
                       std::span<const PredictionRecord> records) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& r : records) out << prediction_to_json(r).dump() << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

std::vector<PredictionRecord> read_predictions(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<PredictionRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(prediction_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("json", path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace lossydetect
