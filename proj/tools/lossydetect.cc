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

// lossydetect: build datasets, train, evaluate and inspect lossy-audio
// detectors.
//
// Exit codes: 0 success (or "lossless" for infer), 3 "lossy" for infer,
// 2 usage error, 1 internal error.

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "lossydetect/dataset/builder.h"
#include "lossydetect/dataset/corpus.h"
#include "lossydetect/dataset/manifest.h"
#include "lossydetect/dataset/synthetic_corpus.h"
#include "lossydetect/dataset/transcoder.h"
#include "lossydetect/evaluation/evaluation.h"
#include "lossydetect/inference/inference.h"
#include "lossydetect/model/checkpoint.h"
#include "lossydetect/training/trainer.h"
#include "lossydetect/util/errors.h"
#include "lossydetect/util/log.h"
#include "lossydetect/util/png.h"
#include "lossydetect/util/random.h"

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace lossydetect {
namespace {

constexpr int kExitLossless = 0;
constexpr int kExitLossy = 3;
constexpr int kExitUsage = 2;
constexpr int kExitInternal = 1;

struct Global {
  std::string out = "lossydetect_out";
  int workers = 1;
  std::string log_level = "info";
  std::string transcoder;
};

std::string config_hash(const json& j) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(j.dump())));
  return std::string(buf).substr(0, 12);
}

json read_json(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw ArgumentError("cannot read " + p.string());
  return json::parse(in);
}

void write_json(const fs::path& p, const json& j) {
  fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::trunc);
  if (!out) throw IoError("cannot write " + p.string());
  out << j.dump(2) << '\n';
}

// --- build-dataset ---------------------------------------------------------

struct BuildArgs {
  int synthetic = 0;
  double duration = 10.0;
  std::string corpus;
  uint64_t seed = 1;
  std::optional<uint64_t> encoding_seed;
  std::optional<uint64_t> split_seed;
  std::string codecs = "fdk_aac,vorbis,mp3lame";
  bool skip_verify = false;
  bool force = false;
};

fs::path data_pointer(const Global& g) { return fs::path(g.out) / "data" / "latest.json"; }

int run_build(const Global& g, const BuildArgs& a) {
  if ((a.synthetic > 0) == !a.corpus.empty()) {
    throw ArgumentError("build-dataset needs exactly one of --synthetic N or --corpus DIR");
  }
  const auto codecs = parse_codec_list(a.codecs);
  DatasetSeeds seeds{a.seed, a.encoding_seed.value_or(a.seed), a.split_seed.value_or(a.seed)};
  json key = {{"synthetic", a.synthetic},
              {"duration", a.synthetic > 0 ? a.duration : 0.0},
              {"corpus", a.corpus.empty() ? "" : fs::absolute(a.corpus).lexically_normal().string()},
              {"seeds", {seeds.corpus, seeds.encoding, seeds.split}},
              {"codecs", a.codecs},
              {"verify", !a.skip_verify}};
  const fs::path dir = fs::path(g.out) / "data" / config_hash(key);
  const fs::path ds1_dir = dir / "ds1", ds2_dir = dir / "ds2";

  if (!a.force && fs::exists(dir / "done.json")) {
    log_info() << "reusing datasets in " << dir.string();
  } else {
    std::vector<SourceTrack> sources;
    if (a.synthetic > 0) {
      SyntheticCorpusOptions opts;
      opts.n_tracks = a.synthetic;
      opts.duration_s = a.duration;
      opts.seed = seeds.corpus;
      opts.workers = g.workers;
      log_info() << "rendering " << a.synthetic << " synthetic tracks";
      sources = generate_synthetic_corpus(opts, dir / "corpus");
    } else {
      auto ingest = ingest_corpus(a.corpus);
      for (const auto& s : ingest.skipped) {
        log_warn() << "skipped " << s.path.string() << " (" << s.reason << ")";
      }
      sources = std::move(ingest.tracks);
    }
    Transcoder transcoder(g.transcoder.empty() ? std::nullopt
                                               : std::optional<fs::path>(g.transcoder));
    transcoder.probe();
    log_info() << "transcoder " << transcoder.binary().string() << " (" << transcoder.version()
               << ")";
    for (DatasetId id : {DatasetId::kDs1, DatasetId::kDs2}) {
      BuildOptions opts;
      opts.out_dir = id == DatasetId::kDs1 ? ds1_dir : ds2_dir;
      opts.codecs = codecs;
      opts.workers = g.workers;
      opts.verify_cutoff = !a.skip_verify;
      log_info() << "building " << to_string(id);
      const Manifest m = build_dataset(sources, id, seeds, transcoder, opts);
      write_manifest(m, opts.out_dir);
      log_info() << to_string(id) << ": " << m.records.size() << " records, "
                 << m.excluded.size() << " excluded";
    }
    write_json(dir / "config.json", key);
    write_json(dir / "done.json", key);
  }
  write_json(data_pointer(g), {{"dir", fs::absolute(dir).string()},
                               {"ds1", fs::absolute(ds1_dir).string()},
                               {"ds2", fs::absolute(ds2_dir).string()}});
  // <out>/ds1 and <out>/ds2 always name the most recent build.
  for (const char* name : {"ds1", "ds2"}) {
    const fs::path link = fs::path(g.out) / name;
    if (fs::is_symlink(link)) fs::remove(link);
    if (!fs::exists(link)) fs::create_directory_symlink(fs::path("data") / dir.filename() / name, link);
  }
  std::cout << "ds1: " << ds1_dir.string() << "\nds2: " << ds2_dir.string() << '\n';
  return 0;
}

fs::path default_manifest(const Global& g, const std::string& given, const char* which) {
  if (!given.empty()) return given;
  const auto ptr = data_pointer(g);
  if (!fs::exists(ptr)) {
    throw ArgumentError(std::string("no --") + which + " given and no dataset built under " +
                        g.out);
  }
  return read_json(ptr).at(which).get<std::string>();
}

// --- train ------------------------------------------------------------------

struct TrainArgs {
  std::string ds1;
  std::string mask = "off";
  double mask_probability = 1.0;
  double mask_low_hz = 14000.0;
  int epochs = 100;
  int batch_size = 32;
  double learning_rate = 1e-3;
  int patience = 10;
  uint64_t seed = 1;
  double time_budget = 0.0;
  std::string tag;
  bool force = false;
};

std::string resolve_tag(const std::string& tag, bool masked) {
  return tag.empty() ? (masked ? "masked" : "naive") : tag;
}

int run_train(const Global& g, const TrainArgs& a) {
  if (a.mask != "on" && a.mask != "off") throw ArgumentError("--mask takes on or off");
  TrainConfig tc;
  tc.mask_enabled = a.mask == "on";
  tc.mask_probability = a.mask_probability;
  tc.mask_low_hz = a.mask_low_hz;
  tc.max_epochs = a.epochs;
  tc.batch_size = a.batch_size;
  tc.learning_rate = a.learning_rate;
  tc.early_stop_patience = a.patience;
  tc.seed = a.seed;
  tc.time_budget_s = a.time_budget;
  tc.workers = g.workers;
  tc.validate();

  const fs::path manifest_path = default_manifest(g, a.ds1, "ds1");
  const Manifest ds1 = read_manifest(manifest_path);
  const std::string tag = resolve_tag(a.tag, tc.mask_enabled);
  json key = tc;
  key.erase("workers");
  key["manifest"] = manifest_digest(ds1);
  const fs::path run_dir = fs::path(g.out) / "train" / (tag + "-" + config_hash(key));

  if (!a.force && fs::exists(run_dir / "done.json")) {
    log_info() << "reusing trained model in " << run_dir.string();
  } else {
    const TrainResult r = train(ds1, ModelConfig{}, tc, run_dir);
    write_json(run_dir / "done.json", {{"best_epoch", r.best_epoch},
                                       {"best_val_accuracy", r.best_val_accuracy},
                                       {"epochs_run", r.history.size()}});
  }
  write_json(fs::path(g.out) / "train" / (tag + ".json"),
             {{"run_dir", fs::absolute(run_dir).string()},
              {"checkpoint", fs::absolute(run_dir / "best.ckpt").string()}});
  std::cout << "checkpoint: " << (run_dir / "best.ckpt").string() << '\n';
  return 0;
}

// A model is named either by a checkpoint path or by a training tag.
fs::path resolve_checkpoint(const Global& g, const std::string& model) {
  if (model.empty()) throw ArgumentError("--model is required");
  if (fs::is_regular_file(model)) return model;
  const fs::path ptr = fs::path(g.out) / "train" / (model + ".json");
  if (fs::exists(ptr)) return read_json(ptr).at("checkpoint").get<std::string>();
  throw ArgumentError("--model " + model + " is neither a checkpoint nor a trained tag");
}

std::string model_tag(const std::string& model) {
  return fs::is_regular_file(model) ? fs::path(model).parent_path().filename().string() : model;
}

// --- evaluate ---------------------------------------------------------------

struct EvalArgs {
  std::string model;
  std::string dataset = "both";
  std::string ds1;
  std::string ds2;
  std::string split = "test";
  double threshold = 0.5;
  bool gallery = true;
  bool force = false;
};

int run_evaluate(const Global& g, const EvalArgs& a) {
  const fs::path ckpt = resolve_checkpoint(g, a.model);
  const Split split = parse_split(a.split);
  if (split != Split::kTest) log_warn() << "evaluating on the " << a.split << " split";
  const Checkpoint checkpoint = load_checkpoint(ckpt);
  const Network<float> net = checkpoint.make_network();
  const std::string tag = model_tag(a.model);

  std::vector<std::pair<std::string, Manifest>> sets;
  if (a.dataset != "ds2") sets.emplace_back("ds1", read_manifest(default_manifest(g, a.ds1, "ds1")));
  if (a.dataset != "ds1") sets.emplace_back("ds2", read_manifest(default_manifest(g, a.ds2, "ds2")));
  json key = {{"checkpoint", fs::absolute(ckpt).string()},
              {"checkpoint_time", static_cast<long long>(
                   fs::last_write_time(ckpt).time_since_epoch().count())},
              {"split", a.split},
              {"threshold", a.threshold}};
  const fs::path dir = fs::path(g.out) / "eval" / (tag + "-" + config_hash(key));
  write_json(dir / "config.json", key);

  const fs::path pointer_path = fs::path(g.out) / "eval" / (tag + ".json");
  json pointer = {{"dir", fs::absolute(dir).string()}, {"checkpoint", fs::absolute(ckpt).string()}};
  if (fs::exists(pointer_path)) {
    const json old = read_json(pointer_path);
    if (old.value("dir", "") == pointer["dir"]) pointer = old;
  }
  for (const auto& [name, manifest] : sets) {
    const fs::path sub = dir / name;
    const std::string digest = manifest_digest(manifest);
    pointer[name] = fs::absolute(sub / "report.json").string();
    if (!a.force && fs::exists(sub / "report.json") &&
        read_json(sub / "report.json").value("manifest_digest", "") == digest) {
      log_info() << "reusing " << (sub / "report.json").string();
      continue;
    }
    log_info() << "scoring " << name << " " << a.split << " split";
    const auto preds = predict_manifest(manifest, net, split, a.threshold, g.workers);
    write_predictions(sub / "predictions.jsonl", preds);
    EvalReport report = evaluate_predictions(preds, name, digest);
    report.split = a.split;
    report.checkpoint = fs::absolute(ckpt).string();
    write_report_bundle(report, sub);
    if (a.gallery) error_gallery(preds, manifest, sub / "errors");
    std::cout << name << ": accuracy " << report.summary.overall_accuracy.value_or(0.0)
              << "%, lossy mean " << report.summary.lossy_mean.value_or(0.0) << "%, lossless "
              << report.summary.lossless_accuracy.value_or(0.0) << "%\n";
  }
  write_json(pointer_path, pointer);
  std::cout << "reports: " << dir.string() << '\n';
  return 0;
}

// --- infer ------------------------------------------------------------------

struct InferArgs {
  std::string file;
  std::string model;
  double threshold = 0.5;
  bool json_output = false;
};

int run_infer(const Global& g, const InferArgs& a) {
  if (!fs::is_regular_file(a.file)) throw ArgumentError("no such file: " + a.file);
  if (a.threshold < 0.0 || a.threshold > 1.0) throw ArgumentError("--threshold outside [0, 1]");
  const Network<float> net = load_checkpoint(resolve_checkpoint(g, a.model)).make_network();
  const PredictionRecord r = predict_track(a.file, net, a.threshold);
  if (!r.ok()) throw IoError("cannot score " + a.file + ": " + r.error);
  if (a.json_output) {
    std::cout << prediction_to_json(r).dump() << '\n';
  } else {
    std::printf("%s\tp_lossy=%.4f\t%s\n", a.file.c_str(), r.p_lossy,
                std::string(to_string(r.predicted)).c_str());
  }
  return r.predicted == Label::kLossy ? kExitLossy : kExitLossless;
}

// --- saliency ---------------------------------------------------------------

struct SaliencyArgs {
  std::string file;
  int window = -1;
  std::string model;
  std::string compare_model;
  std::string ds2;
  int tracks = 10;
  uint64_t seed = 1;
  float min_drop_db = 20.0f;
  int min_hole_cells = 25;
};

int run_saliency(const Global& g, const SaliencyArgs& a) {
  if (a.tracks < 1) throw ArgumentError("--tracks must be >= 1");
  const fs::path ckpt = resolve_checkpoint(g, a.model);
  const Network<float> net = load_checkpoint(ckpt).make_network();
  std::optional<Network<float>> other;
  if (!a.compare_model.empty()) {
    other = load_checkpoint(resolve_checkpoint(g, a.compare_model)).make_network();
  }
  if (!a.file.empty()) {
    if (!fs::is_regular_file(a.file)) throw ArgumentError("no such file: " + a.file);
    const auto wins = windows(load_audio(a.file));
    const int w = a.window < 0 ? static_cast<int>(wins.size() / 2) : a.window;
    if (w >= static_cast<int>(wins.size())) throw ArgumentError("--window beyond the last window");
    const Spectrogram spec = spectrogram(wins[w]);
    const fs::path dir = fs::path(g.out) / "saliency" / model_tag(a.model);
    const std::string stem = fs::path(a.file).stem().string() + "_w" + std::to_string(w);
    write_saliency_pngs(dir, stem, spec, saliency_map(net, spec, 1));
    if (other) {
      write_heatmap_png(dir / (stem + "_saliency_compare.png"), spec.n_bins, spec.n_frames,
                        saliency_map(*other, spec, 1).values, 0.0f, 1.0f);
    }
    std::cout << (dir / (stem + "_spectrogram.png")).string() << '\n'
              << (dir / (stem + "_saliency.png")).string() << '\n';
    return 0;
  }
  const Manifest ds2 = read_manifest(default_manifest(g, a.ds2, "ds2"));

  std::map<std::string, const TrackRecord*> lossless;
  std::vector<const TrackRecord*> lossy;
  for (const auto& r : ds2.records) {
    if (r.split != Split::kTest) continue;
    if (r.label == Label::kLossless) lossless[r.track_id] = &r;
    else if (r.encoding && r.encoding->cutoff_hz) lossy.push_back(&r);
  }
  Rng rng = make_rng(a.seed, 0x5a1);
  std::shuffle(lossy.begin(), lossy.end(), rng);

  json key = {{"checkpoint", fs::absolute(ckpt).string()}, {"compare", a.compare_model},
              {"ds2", manifest_digest(ds2)}, {"tracks", a.tracks}, {"seed", a.seed},
              {"min_drop_db", a.min_drop_db}, {"min_hole_cells", a.min_hole_cells}};
  const fs::path dir = fs::path(g.out) / "saliency" / (model_tag(a.model) + "-" + config_hash(key));
  ordered_json rows = ordered_json::array();
  int exceed = 0, scored = 0, skipped = 0;
  for (const TrackRecord* rec : lossy) {
    if (scored >= a.tracks) break;
    const auto it = lossless.find(rec->track_id);
    if (it == lossless.end()) continue;
    const auto lossy_wins = windows(load_audio(ds2.resolve(*rec)));
    const auto clean_wins = windows(load_audio(ds2.resolve(*it->second)));
    const std::size_t w = std::min(lossy_wins.size(), clean_wins.size()) / 2;
    const Spectrogram s_lossy = spectrogram(lossy_wins[w]);
    const Spectrogram s_clean = spectrogram(clean_wins[w]);
    const int cutoff_bin = bin_of_frequency(*rec->encoding->cutoff_hz);
    const auto holes = hole_mask(s_clean, s_lossy, cutoff_bin, a.min_drop_db);
    if (std::count(holes.begin(), holes.end(), 1) < a.min_hole_cells) {
      ++skipped;
      continue;
    }
    const SaliencyMap sal = saliency_map(net, s_lossy, 1);
    Rng control_rng = make_rng(a.seed, fnv1a64(rec->track_id));
    const HoleComparison cmp = compare_hole_saliency(sal, holes, cutoff_bin, control_rng);
    const std::string stem = rec->track_id + "_w" + std::to_string(w);
    write_saliency_pngs(dir, stem, s_lossy, sal);
    std::vector<float> hole_img(holes.begin(), holes.end());
    write_heatmap_png(dir / (stem + "_holes.png"), s_lossy.n_bins, s_lossy.n_frames, hole_img,
                      0.0f, 1.0f);
    if (other) {
      write_heatmap_png(dir / (stem + "_saliency_compare.png"), s_lossy.n_bins, s_lossy.n_frames,
                        saliency_map(*other, s_lossy, 1).values, 0.0f, 1.0f);
    }
    ++scored;
    exceed += cmp.holes_exceed();
    rows.push_back({{"track_id", rec->track_id},
                    {"codec", to_string(rec->encoding->codec)},
                    {"bitrate_kbps", rec->encoding->bitrate_kbps},
                    {"cutoff_hz", *rec->encoding->cutoff_hz},
                    {"window", w},
                    {"hole_cells", cmp.hole_cells},
                    {"hole_mean", cmp.hole_mean},
                    {"control_mean", cmp.control_mean},
                    {"holes_exceed", cmp.holes_exceed()}});
    std::printf("%s\tholes=%d\thole_mean=%.4f\tcontrol_mean=%.4f\n", rec->track_id.c_str(),
                cmp.hole_cells, cmp.hole_mean, cmp.control_mean);
  }
  ordered_json summary = {{"checkpoint", fs::absolute(ckpt).string()},
                          {"tracks", scored},
                          {"holes_exceed", exceed},
                          {"skipped_without_holes", skipped},
                          {"min_drop_db", a.min_drop_db},
                          {"per_track", rows}};
  fs::create_directories(dir);
  std::ofstream(dir / "saliency.json") << summary.dump(2) << '\n';
  std::cout << "hole saliency above control in " << exceed << " of " << scored
            << " tracks; images in " << dir.string() << '\n';
  return 0;
}

// --- report -----------------------------------------------------------------

struct ReportArgs {
  std::string naive = "naive";
  std::string masked = "masked";
};

// Accepts an evaluation tag or an evaluation directory.
fs::path eval_dir(const Global& g, const std::string& name) {
  if (fs::is_directory(name)) return name;
  const fs::path ptr = fs::path(g.out) / "eval" / (name + ".json");
  if (!fs::exists(ptr)) throw ArgumentError("no evaluation named " + name);
  return read_json(ptr).at("dir").get<std::string>();
}

int run_report(const Global& g, const ReportArgs& a) {
  auto load = [&](const std::string& name, const char* ds) {
    return report_from_json(read_json(eval_dir(g, name) / ds / "report.json"));
  };
  const EvalReport n1 = load(a.naive, "ds1"), n2 = load(a.naive, "ds2");
  const EvalReport m1 = load(a.masked, "ds1"), m2 = load(a.masked, "ds2");
  const DeltaReport d2 = compare_reports(n2, m2);
  const DeltaReport d1 = compare_reports(n1, m1);

  auto num = [](const std::optional<double>& v) { return v ? json(*v) : json(); };
  auto f1_areas = [](const EvalReport& r) {
    json j = json::object();
    for (const auto& [c, f] : r.f1_curves) {
      j[std::string(to_string(c))] = {{"area", f.area}, {"peak_f1", f.peak_f1},
                                      {"peak_threshold", f.peak_threshold}};
    }
    return j;
  };
  ordered_json out;
  out["naive"] = {{"ds1_accuracy", num(n1.summary.overall_accuracy)},
                  {"ds1_lossy_mean", num(n1.table_codec_bitrate.lossy_mean)},
                  {"ds1_lossless", num(n1.table_codec_bitrate.lossless.accuracy())},
                  {"ds2_lossy_mean", num(n2.table_codec_bitrate.lossy_mean)},
                  {"ds2_grand_mean", num(n2.summary.lossy_mean)},
                  {"ds2_lossless", num(n2.summary.lossless_accuracy)},
                  {"ds2_f1", f1_areas(n2)}};
  out["masked"] = {{"ds1_accuracy", num(m1.summary.overall_accuracy)},
                   {"ds1_lossy_mean", num(m1.table_codec_bitrate.lossy_mean)},
                   {"ds1_lossless", num(m1.table_codec_bitrate.lossless.accuracy())},
                   {"ds2_lossy_mean", num(m2.table_codec_bitrate.lossy_mean)},
                   {"ds2_grand_mean", num(m2.summary.lossy_mean)},
                   {"ds2_lossless", num(m2.summary.lossless_accuracy)},
                   {"ds2_f1", f1_areas(m2)}};
  out["ds1_delta"] = delta_to_json(d1);
  out["ds2_delta"] = delta_to_json(d2);

  const fs::path dir = fs::path(g.out) / "report";
  fs::create_directories(dir);
  std::ofstream(dir / "report.json") << out.dump(2) << '\n';
  std::ofstream md(dir / "report.md");
  md << "# Naive model\n\n" << report_markdown(n1) << '\n' << report_markdown(n2) << '\n';
  md << "# Masked model\n\n" << report_markdown(m1) << '\n' << report_markdown(m2) << '\n';
  md << delta_markdown(d2);
  std::cout << out.dump(2) << '\n' << "report: " << (dir / "report.md").string() << '\n';
  return 0;
}

}  // namespace
}  // namespace lossydetect

int main(int argc, char** argv) {
  using namespace lossydetect;
  CLI::App app{"Lossy audio compression detector: datasets, training, evaluation."};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "TOML config; [section] keys mirror each subcommand's flags");

  Global g;
  app.add_option("--out", g.out, "Output root directory")->capture_default_str();
  app.add_option("--workers", g.workers, "Worker threads / transcoder processes")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--log-level", g.log_level, "debug, info, warning or error")
      ->check(CLI::IsMember({"debug", "info", "warning", "error"}))
      ->capture_default_str();
  app.add_option("--transcoder", g.transcoder,
                 "Transcoder binary (default: $LOSSYDETECT_TRANSCODER, then the build default)");

  BuildArgs build;
  auto* b = app.add_subcommand("build-dataset", "Render or ingest a corpus and build ds1 and ds2");
  b->add_option("--synthetic", build.synthetic, "Generate N synthetic tracks");
  b->add_option("--duration", build.duration, "Synthetic track length in seconds")
      ->check(CLI::Range(4.0, 600.0))
      ->capture_default_str();
  b->add_option("--corpus", build.corpus, "Directory of 16-bit 44.1 kHz WAV files");
  b->add_option("--seed", build.seed, "Corpus seed; also the default for the other seeds")
      ->capture_default_str();
  b->add_option("--encoding-seed", build.encoding_seed, "Seed for codec/bitrate/cutoff draws");
  b->add_option("--split-seed", build.split_seed, "Seed for the train/val/test split");
  b->add_option("--codecs", build.codecs, "Comma-separated codecs")->capture_default_str();
  b->add_flag("--skip-verify", build.skip_verify, "Do not verify cutoffs on ds2 outputs");
  b->add_flag("--force", build.force, "Rebuild even if the output exists");

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "Train a model on ds1");
  t->add_option("--ds1", tr.ds1, "ds1 manifest (default: the last built dataset)");
  t->add_option("--mask", tr.mask, "Random spectrogram mask: on or off")
      ->check(CLI::IsMember({"on", "off"}))
      ->capture_default_str();
  t->add_option("--mask-probability", tr.mask_probability, "Chance of masking an example")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  t->add_option("--mask-low-hz", tr.mask_low_hz, "Lowest random mask cutoff")
      ->capture_default_str();
  t->add_option("--epochs", tr.epochs, "Maximum epochs")->capture_default_str();
  t->add_option("--batch-size", tr.batch_size, "Batch size")->capture_default_str();
  t->add_option("--learning-rate", tr.learning_rate, "Adam learning rate")->capture_default_str();
  t->add_option("--patience", tr.patience, "Early-stopping patience in epochs")
      ->capture_default_str();
  t->add_option("--seed", tr.seed, "Training seed")->capture_default_str();
  t->add_option("--time-budget", tr.time_budget, "Seconds; no epoch starts that would overrun")
      ->capture_default_str();
  t->add_option("--tag", tr.tag, "Run name (default: naive or masked)");
  t->add_flag("--force", tr.force, "Retrain even if the run exists");

  EvalArgs ev;
  auto* e = app.add_subcommand("evaluate", "Score ds1 and ds2 and write reports");
  e->add_option("--model,--checkpoint", ev.model, "Checkpoint path or training tag")->required();
  e->add_option("--dataset", ev.dataset, "Which datasets to score")
      ->check(CLI::IsMember({"ds1", "ds2", "both"}))
      ->capture_default_str();
  e->add_option("--ds1", ev.ds1, "ds1 manifest (default: the last built dataset)");
  e->add_option("--ds2", ev.ds2, "ds2 manifest (default: the last built dataset)");
  e->add_option("--split", ev.split, "Split to score")
      ->check(CLI::IsMember({"train", "val", "test"}))
      ->capture_default_str();
  e->add_option("--threshold", ev.threshold, "Decision threshold")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  e->add_option("--gallery", ev.gallery, "Render misclassified tracks")->capture_default_str();
  e->add_flag("--force", ev.force, "Rescore even if reports exist");

  InferArgs in;
  auto* i = app.add_subcommand("infer", "Classify one file (exit 0 lossless, 3 lossy)");
  i->add_option("file", in.file, "WAV file")->required();
  i->add_option("--model,--checkpoint", in.model, "Checkpoint path or training tag")->required();
  i->add_option("--threshold", in.threshold, "Decision threshold")->capture_default_str();
  i->add_flag("--json", in.json_output, "Print the prediction record as JSON");

  SaliencyArgs sa;
  auto* s = app.add_subcommand("saliency", "Saliency maps and hole analysis on ds2 lossy tracks");
  s->add_option("file", sa.file, "Render one WAV file instead of the ds2 hole analysis");
  s->add_option("--window", sa.window, "Window index for FILE (default: middle)");
  s->add_option("--model,--checkpoint", sa.model, "Checkpoint path or training tag")->required();
  s->add_option("--compare-model", sa.compare_model, "Second model rendered alongside");
  s->add_option("--ds2", sa.ds2, "ds2 manifest (default: the last built dataset)");
  s->add_option("--tracks", sa.tracks, "Lossy test tracks to analyse")->capture_default_str();
  s->add_option("--seed", sa.seed, "Track and control-region sampling seed")
      ->capture_default_str();
  s->add_option("--min-drop-db", sa.min_drop_db, "Hole threshold: lossless minus lossy dB")
      ->capture_default_str();
  s->add_option("--min-hole-cells", sa.min_hole_cells,
                 "Skip tracks whose analysed window has fewer hole cells")
      ->capture_default_str();

  ReportArgs rp;
  auto* r = app.add_subcommand("report", "Compare naive and masked evaluations");
  r->add_option("--naive", rp.naive, "Naive evaluation tag or directory")->capture_default_str();
  r->add_option("--masked", rp.masked, "Masked evaluation tag or directory")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& ex) {
    return app.exit(ex);
  } catch (const CLI::ParseError& ex) {
    app.exit(ex);
    return kExitUsage;
  }

  set_log_level(g.log_level == "debug"     ? LogLevel::kDebug
                : g.log_level == "warning" ? LogLevel::kWarning
                : g.log_level == "error"   ? LogLevel::kError
                                           : LogLevel::kInfo);
  try {
    if (b->parsed()) return run_build(g, build);
    if (t->parsed()) return run_train(g, tr);
    if (e->parsed()) return run_evaluate(g, ev);
    if (i->parsed()) return run_infer(g, in);
    if (s->parsed()) return run_saliency(g, sa);
    if (r->parsed()) return run_report(g, rp);
  } catch (const ArgumentError& ex) {
    std::cerr << "error: " << ex.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << '\n';
    return kExitInternal;
  }
  return kExitInternal;
}
