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

#include <cstdio>
#include <fstream>
#include <sstream>

#include "lossydetect/evaluation/evaluation.h"
#include "lossydetect/util/errors.h"

namespace lossydetect {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

ordered_json opt(const std::optional<double>& v) {
  return v ? ordered_json(*v) : ordered_json();
}

std::optional<double> opt_from(const json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  return j[key].get<double>();
}

ordered_json cell_json(const AccuracyCell& c) {
  return {{"count", c.count}, {"correct", c.correct}, {"accuracy", opt(c.accuracy())}};
}

AccuracyCell cell_from(const json& j) {
  AccuracyCell c;
  c.count = j.at("count").get<int>();
  c.correct = j.at("correct").get<int>();
  return c;
}

std::string fmt(const std::optional<double>& v) {
  if (!v) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1f", *v);
  return buf;
}

std::string fmt3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

std::string codec_name(Codec c) { return std::string(to_string(c)); }

}  // namespace

ordered_json report_to_json(const EvalReport& r) {
  ordered_json j;
  j["dataset"] = r.dataset;
  j["split"] = r.split;
  j["manifest_digest"] = r.manifest_digest;
  j["checkpoint"] = r.checkpoint;

  const auto& t1 = r.table_codec_bitrate;
  ordered_json cells = ordered_json::array();
  for (const auto& [key, cell] : t1.cells) {
    ordered_json c = {{"codec", codec_name(key.first)}, {"bitrate_kbps", key.second}};
    c.update(cell_json(cell));
    cells.push_back(c);
  }
  j["table_codec_bitrate"] = {{"cells", cells},
                              {"lossless", cell_json(t1.lossless)},
                              {"mean", opt(t1.mean)},
                              {"lossy_mean", opt(t1.lossy_mean)},
                              {"balanced_mean", opt(t1.balanced_mean)}};

  if (r.table_cutoff) {
    const auto& t2 = *r.table_cutoff;
    ordered_json by_codec = ordered_json::array(), by_bitrate = ordered_json::array(),
                 full = ordered_json::array();
    for (const auto& [key, cell] : t2.by_codec) {
      ordered_json c = {{"cutoff_hz", key.first}, {"codec", codec_name(key.second)}};
      c.update(cell_json(cell));
      by_codec.push_back(c);
    }
    for (const auto& [key, cell] : t2.by_bitrate) {
      ordered_json c = {{"cutoff_hz", key.first}, {"bitrate_kbps", key.second}};
      c.update(cell_json(cell));
      by_bitrate.push_back(c);
    }
    for (const auto& [key, cell] : t2.full) {
      ordered_json c = {{"cutoff_hz", std::get<0>(key)},
                        {"codec", codec_name(std::get<1>(key))},
                        {"bitrate_kbps", std::get<2>(key)}};
      c.update(cell_json(cell));
      full.push_back(c);
    }
    ordered_json rows = ordered_json::array();
    for (const auto& [cut, m] : t2.row_mean_codec) {
      rows.push_back({{"cutoff_hz", cut},
                      {"codec_mean", opt(m)},
                      {"bitrate_mean", opt(t2.row_mean_bitrate.at(cut))}});
    }
    ordered_json codec_mean, bitrate_mean;
    for (const auto& [c, m] : t2.codec_mean) codec_mean[codec_name(c)] = opt(m);
    for (const auto& [b, m] : t2.bitrate_mean) bitrate_mean[std::to_string(b)] = opt(m);
    j["table_cutoff"] = {{"by_codec", by_codec},     {"by_bitrate", by_bitrate},
                         {"full", full},             {"row_means", rows},
                         {"codec_mean", codec_mean}, {"bitrate_mean", bitrate_mean},
                         {"grand_mean", opt(t2.grand_mean)},
                         {"lossless", cell_json(t2.lossless)}};
  } else {
    j["table_cutoff"] = nullptr;
  }

  ordered_json curves;
  for (const auto& [c, f] : r.f1_curves) {
    ordered_json conf = ordered_json::array();
    for (const auto& q : f.confusion) conf.push_back(q);
    curves[codec_name(c)] = {{"thresholds", f.thresholds}, {"f1", f.f1},
                             {"confusion", conf},          {"peak_f1", f.peak_f1},
                             {"peak_threshold", f.peak_threshold},
                             {"area", f.area},             {"positives", f.positives},
                             {"negatives", f.negatives}};
  }
  j["f1_curves"] = curves.is_null() ? ordered_json::object() : curves;
  j["summary"] = {{"overall_accuracy", opt(r.summary.overall_accuracy)},
                  {"lossy_mean", opt(r.summary.lossy_mean)},
                  {"lossless_accuracy", opt(r.summary.lossless_accuracy)},
                  {"tracks", r.summary.tracks},
                  {"errors", r.summary.errors}};
  return j;
}

EvalReport report_from_json(const json& j) {
  EvalReport r;
  r.dataset = j.at("dataset").get<std::string>();
  r.split = j.value("split", "test");
  r.manifest_digest = j.value("manifest_digest", "");
  r.checkpoint = j.value("checkpoint", "");

  const auto& t1 = j.at("table_codec_bitrate");
  for (const auto& c : t1.at("cells")) {
    r.table_codec_bitrate.cells[{parse_codec(c.at("codec").get<std::string>()),
                                 c.at("bitrate_kbps").get<int>()}] = cell_from(c);
  }
  r.table_codec_bitrate.lossless = cell_from(t1.at("lossless"));
  r.table_codec_bitrate.mean = opt_from(t1, "mean");
  r.table_codec_bitrate.lossy_mean = opt_from(t1, "lossy_mean");
  r.table_codec_bitrate.balanced_mean = opt_from(t1, "balanced_mean");

  if (j.contains("table_cutoff") && !j["table_cutoff"].is_null()) {
    const auto& t = j["table_cutoff"];
    CutoffTable t2;
    for (const auto& c : t.at("by_codec")) {
      t2.by_codec[{c.at("cutoff_hz").get<int>(), parse_codec(c.at("codec").get<std::string>())}] =
          cell_from(c);
    }
    for (const auto& c : t.at("by_bitrate")) {
      t2.by_bitrate[{c.at("cutoff_hz").get<int>(), c.at("bitrate_kbps").get<int>()}] = cell_from(c);
    }
    for (const auto& c : t.at("full")) {
      t2.full[{c.at("cutoff_hz").get<int>(), parse_codec(c.at("codec").get<std::string>()),
               c.at("bitrate_kbps").get<int>()}] = cell_from(c);
    }
    for (const auto& row : t.at("row_means")) {
      const int cut = row.at("cutoff_hz").get<int>();
      t2.row_mean_codec[cut] = opt_from(row, "codec_mean");
      t2.row_mean_bitrate[cut] = opt_from(row, "bitrate_mean");
    }
    for (const auto& [k, v] : t.at("codec_mean").items()) {
      t2.codec_mean[parse_codec(k)] = v.is_null() ? std::nullopt : std::optional(v.get<double>());
    }
    for (const auto& [k, v] : t.at("bitrate_mean").items()) {
      t2.bitrate_mean[std::stoi(k)] = v.is_null() ? std::nullopt : std::optional(v.get<double>());
    }
    t2.grand_mean = opt_from(t, "grand_mean");
    t2.lossless = cell_from(t.at("lossless"));
    r.table_cutoff = t2;
  }

  for (const auto& [k, v] : j.at("f1_curves").items()) {
    F1Curve f;
    f.thresholds = v.at("thresholds").get<std::vector<double>>();
    f.f1 = v.at("f1").get<std::vector<double>>();
    f.confusion = v.at("confusion").get<std::vector<std::array<int, 4>>>();
    f.peak_f1 = v.at("peak_f1").get<double>();
    f.peak_threshold = v.at("peak_threshold").get<double>();
    f.area = v.at("area").get<double>();
    f.positives = v.at("positives").get<int>();
    f.negatives = v.at("negatives").get<int>();
    r.f1_curves[parse_codec(k)] = f;
  }
  const auto& s = j.at("summary");
  r.summary.overall_accuracy = opt_from(s, "overall_accuracy");
  r.summary.lossy_mean = opt_from(s, "lossy_mean");
  r.summary.lossless_accuracy = opt_from(s, "lossless_accuracy");
  r.summary.tracks = s.value("tracks", 0);
  r.summary.errors = s.value("errors", 0);
  return r;
}

std::string report_markdown(const EvalReport& r) {
  std::ostringstream md;
  md << "# Evaluation: " << r.dataset << " (" << r.split << " split)\n\n";
  md << "- manifest digest: `" << r.manifest_digest << "`\n";
  if (!r.checkpoint.empty()) md << "- checkpoint: `" << r.checkpoint << "`\n";
  md << "- tracks: " << r.summary.tracks << " (unscorable: " << r.summary.errors << ")\n";
  md << "- overall accuracy: " << fmt(r.summary.overall_accuracy) << "%\n";
  md << "- lossy mean: " << fmt(r.summary.lossy_mean) << "%\n";
  md << "- lossless accuracy: " << fmt(r.summary.lossless_accuracy) << "%\n\n";

  const auto& t1 = r.table_codec_bitrate;
  md << "## Accuracy by codec and bit rate\n\n|";
  for (Codec c : kAllCodecs) {
    for (int br : kBitratesKbps) md << ' ' << to_string(c) << ' ' << br << "k |";
  }
  md << " lossless | mean | lossy mean | balanced |\n|";
  for (int i = 0; i < 13; ++i) md << "---:|";
  md << "\n|";
  for (Codec c : kAllCodecs) {
    for (int br : kBitratesKbps) md << ' ' << fmt(t1.cells.at({c, br}).accuracy()) << " |";
  }
  md << ' ' << fmt(t1.lossless.accuracy()) << " | " << fmt(t1.mean) << " | "
     << fmt(t1.lossy_mean) << " | " << fmt(t1.balanced_mean) << " |\n\n";

  if (r.table_cutoff) {
    const auto& t2 = *r.table_cutoff;
    md << "## Accuracy by cutoff\n\n| cutoff |";
    for (Codec c : kAllCodecs) md << ' ' << to_string(c) << " |";
    for (int br : kBitratesKbps) md << ' ' << br << "k |";
    md << " mean |\n|---|";
    for (int i = 0; i < 7; ++i) md << "---:|";
    md << '\n';
    for (const auto& [cut, m] : t2.row_mean_codec) {
      md << "| " << cut / 1000 << " kHz |";
      for (Codec c : kAllCodecs) md << ' ' << fmt(t2.by_codec.at({cut, c}).accuracy()) << " |";
      for (int br : kBitratesKbps) {
        md << ' ' << fmt(t2.by_bitrate.at({cut, br}).accuracy()) << " |";
      }
      md << ' ' << fmt(m) << " |\n";
    }
    md << "| mean |";
    for (Codec c : kAllCodecs) md << ' ' << fmt(t2.codec_mean.at(c)) << " |";
    for (int br : kBitratesKbps) md << ' ' << fmt(t2.bitrate_mean.at(br)) << " |";
    md << ' ' << fmt(t2.grand_mean) << " |\n\n";
    md << "Lossless accuracy: " << fmt(t2.lossless.accuracy()) << "%\n\n";
  }

  if (!r.f1_curves.empty()) {
    md << "## F1 over thresholds\n\n| codec | positives | negatives | peak F1 | at | area |\n"
       << "|---|---:|---:|---:|---:|---:|\n";
    for (const auto& [c, f] : r.f1_curves) {
      md << "| " << to_string(c) << " | " << f.positives << " | " << f.negatives << " | "
         << fmt3(f.peak_f1) << " | " << fmt3(f.peak_threshold) << " | " << fmt3(f.area)
         << " |\n";
    }
  }
  return md.str();
}

void write_f1_csv(const std::filesystem::path& path, const F1Curve& curve) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << "threshold,f1,tp,fp,tn,fn\n";
  for (std::size_t i = 0; i < curve.thresholds.size(); ++i) {
    const auto& q = curve.confusion[i];
    out << fmt3(curve.thresholds[i]) << ',' << curve.f1[i] << ',' << q[0] << ',' << q[1] << ','
        << q[2] << ',' << q[3] << '\n';
  }
}

void write_report_bundle(const EvalReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "report.json", std::ios::trunc);
    if (!out) throw IoError("cannot write " + (dir / "report.json").string());
    out << report_to_json(report).dump(2) << '\n';
  }
  {
    std::ofstream out(dir / "report.md", std::ios::trunc);
    out << report_markdown(report);
  }
  std::ofstream summary(dir / "f1_summary.csv", std::ios::trunc);
  summary << "codec,peak_f1,peak_threshold,area,positives,negatives\n";
  for (const auto& [c, f] : report.f1_curves) {
    write_f1_csv(dir / ("f1_" + codec_name(c) + ".csv"), f);
    summary << to_string(c) << ',' << f.peak_f1 << ',' << f.peak_threshold << ',' << f.area << ','
            << f.positives << ',' << f.negatives << '\n';
  }
}

DeltaReport compare_reports(const EvalReport& naive, const EvalReport& masked) {
  if (naive.manifest_digest != masked.manifest_digest) {
    throw ArgumentError("reports cover different manifests (" + naive.manifest_digest + " vs " +
                        masked.manifest_digest + ")");
  }
  if (naive.split != masked.split || naive.dataset != masked.dataset) {
    throw ArgumentError("reports cover different datasets or splits");
  }
  DeltaReport d;
  auto diff = [&](const std::string& name, const std::optional<double>& a,
                  const std::optional<double>& b) {
    if (a && b) d.deltas[name] = *b - *a;
  };
  const auto& a1 = naive.table_codec_bitrate;
  const auto& b1 = masked.table_codec_bitrate;
  for (const auto& [key, cell] : a1.cells) {
    const auto it = b1.cells.find(key);
    if (it == b1.cells.end()) continue;
    diff("codec_bitrate/" + codec_name(key.first) + "/" + std::to_string(key.second),
         cell.accuracy(), it->second.accuracy());
  }
  diff("codec_bitrate/lossless", a1.lossless.accuracy(), b1.lossless.accuracy());
  diff("codec_bitrate/lossy_mean", a1.lossy_mean, b1.lossy_mean);
  if (naive.table_cutoff && masked.table_cutoff) {
    const auto& a2 = *naive.table_cutoff;
    const auto& b2 = *masked.table_cutoff;
    for (const auto& [key, cell] : a2.by_codec) {
      const auto it = b2.by_codec.find(key);
      if (it == b2.by_codec.end()) continue;
      diff("cutoff/" + std::to_string(key.first) + "/" + codec_name(key.second),
           cell.accuracy(), it->second.accuracy());
    }
    for (const auto& [key, cell] : a2.by_bitrate) {
      const auto it = b2.by_bitrate.find(key);
      if (it == b2.by_bitrate.end()) continue;
      diff("cutoff/" + std::to_string(key.first) + "/" + std::to_string(key.second),
           cell.accuracy(), it->second.accuracy());
    }
    diff("cutoff/grand_mean", a2.grand_mean, b2.grand_mean);
    d.naive_mean = a2.grand_mean;
    d.masked_mean = b2.grand_mean;
  } else {
    d.naive_mean = a1.lossy_mean;
    d.masked_mean = b1.lossy_mean;
  }
  for (const auto& [c, f] : naive.f1_curves) {
    const auto it = masked.f1_curves.find(c);
    if (it != masked.f1_curves.end()) d.deltas["f1_area/" + codec_name(c)] = it->second.area - f.area;
  }
  d.robustness_holds = d.naive_mean && d.masked_mean && *d.masked_mean >= *d.naive_mean;
  return d;
}

ordered_json delta_to_json(const DeltaReport& d) {
  ordered_json deltas;
  for (const auto& [k, v] : d.deltas) deltas[k] = v;
  return {{"naive_mean", opt(d.naive_mean)},
          {"masked_mean", opt(d.masked_mean)},
          {"robustness_holds", d.robustness_holds},
          {"deltas", deltas.is_null() ? ordered_json::object() : deltas}};
}

std::string delta_markdown(const DeltaReport& d) {
  std::ostringstream md;
  md << "# Masked versus naive\n\n";
  md << "- naive mean: " << fmt(d.naive_mean) << "%\n";
  md << "- masked mean: " << fmt(d.masked_mean) << "%\n";
  md << "- masked >= naive: " << (d.robustness_holds ? "yes" : "no") << "\n\n";
  md << "| cell | masked - naive |\n|---|---:|\n";
  for (const auto& [k, v] : d.deltas) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%+.2f", v);
    md << "| " << k << " | " << buf << " |\n";
  }
  return md.str();
}

}  // namespace lossydetect
