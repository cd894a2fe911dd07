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

#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include "lossydetect/audio/wav.h"
#include "lossydetect/dataset/builder.h"
#include "lossydetect/dataset/encoding.h"
#include "lossydetect/dataset/manifest.h"
#include "lossydetect/dataset/synthetic_corpus.h"
#include "lossydetect/dataset/transcoder.h"
#include "lossydetect/util/errors.h"
#include "lossydetect/util/random.h"

namespace lossydetect {
namespace {

std::string id_of(int i) { return "track_" + std::to_string(i); }

TEST(Encoding, UniformOverCodecAndBitrate) {
  constexpr int kN = 9000;
  std::map<std::pair<Codec, int>, int> counts;
  std::map<int, int> cutoffs;
  for (int i = 0; i < kN; ++i) {
    const auto e = assign_encoding(id_of(i), DatasetId::kDs2, 42);
    ++counts[{e.codec, e.bitrate_kbps}];
    ASSERT_TRUE(e.cutoff_hz.has_value());
    ++cutoffs[*e.cutoff_hz];
  }
  ASSERT_EQ(counts.size(), 9u);
  // Binomial(9000, 1/9): mean 1000, sd ~31.4.
  const double sd9 = std::sqrt(kN * (1.0 / 9) * (8.0 / 9));
  for (const auto& [k, n] : counts) EXPECT_NEAR(n, kN / 9.0, 3 * sd9);
  ASSERT_EQ(cutoffs.size(), 4u);
  const double sd4 = std::sqrt(kN * 0.25 * 0.75);
  for (const auto& [c, n] : cutoffs) {
    EXPECT_TRUE(c == 14000 || c == 16000 || c == 18000 || c == 20000);
    EXPECT_NEAR(n, kN / 4.0, 3 * sd4);
  }
}

TEST(Encoding, Ds1AndDs2Agree) {
  for (int i = 0; i < 2000; ++i) {
    const auto a = assign_encoding(id_of(i), DatasetId::kDs1, 5);
    const auto b = assign_encoding(id_of(i), DatasetId::kDs2, 5);
    ASSERT_EQ(a.codec, b.codec);
    ASSERT_EQ(a.bitrate_kbps, b.bitrate_kbps);
    ASSERT_FALSE(a.cutoff_hz.has_value());
    ASSERT_TRUE(b.cutoff_hz.has_value());
    ASSERT_EQ(assign_encoding(id_of(i), DatasetId::kDs2, 5), b);
  }
}

TEST(Encoding, CodecFilter) {
  const std::vector<Codec> only = {Codec::kMp3Lame, Codec::kVorbis};
  for (int i = 0; i < 500; ++i) {
    EXPECT_NE(assign_encoding(id_of(i), DatasetId::kDs1, 1, only).codec, Codec::kFdkAac);
  }
  EXPECT_EQ(parse_codec_list("mp3lame,vorbis"), only);
  EXPECT_EQ(parse_codec("libfdk_aac"), Codec::kFdkAac);
  EXPECT_THROW(parse_codec("flac"), ArgumentError);
}

TEST(Splits, CountsFollowFloorCeilRule) {
  for (std::size_t n = 1; n <= 1000; ++n) {
    const SplitCounts c = split_counts(n);
    ASSERT_EQ(c.train + c.val + c.test, n);
    ASSERT_EQ(c.train, 7 * n / 10);
    ASSERT_EQ(c.test, (2 * n + 9) / 10);
    ASSERT_GE(c.test, 1u);
    ASSERT_LE(std::abs(static_cast<double>(c.val) - 0.1 * n), 1.0 + 1e-9);
  }
  const SplitCounts c = split_counts(300);
  EXPECT_EQ(c.train, 210u);
  EXPECT_EQ(c.val, 30u);
  EXPECT_EQ(c.test, 60u);
}

TEST(Splits, DeterministicAndProportional) {
  std::vector<std::string> ids;
  for (int i = 0; i < 1000; ++i) ids.push_back(id_of(i));
  const auto a = split_assign(ids, 9);
  std::vector<std::string> reversed(ids.rbegin(), ids.rend());
  EXPECT_EQ(split_assign(reversed, 9), a);
  EXPECT_NE(split_assign(ids, 10), a);
  std::map<Split, int> n;
  for (const auto& [id, s] : a) ++n[s];
  EXPECT_EQ(n[Split::kTrain], 700);
  EXPECT_EQ(n[Split::kVal], 100);
  EXPECT_EQ(n[Split::kTest], 200);
  EXPECT_THROW(split_assign({}, 1), ArgumentError);
  EXPECT_THROW(split_assign({"a", "a"}, 1), ArgumentError);
}

TEST(Manifest, RoundTrip) {
  Manifest m;
  m.dataset_id = DatasetId::kDs2;
  m.corpus_seed = 1;
  m.encoding_seed = 2;
  m.split_seed = 3;
  m.transcoder_version = "test";
  m.codec_variants["fdk_aac"] = "aac";
  TrackRecord lossless{"a", "a.wav", Label::kLossless, std::nullopt, DatasetId::kDs2, Split::kTest};
  TrackRecord lossy{"a", "lossy/a.wav", Label::kLossy,
                    EncodingSpec{Codec::kVorbis, 256, 16000}, DatasetId::kDs2, Split::kTest};
  m.records = {lossless, lossy};
  const auto dir = std::filesystem::temp_directory_path() / "lossydetect_manifest_test";
  std::filesystem::remove_all(dir);
  write_manifest(m, dir);
  const Manifest back = read_manifest(dir / "manifest.jsonl");
  EXPECT_EQ(back.records, m.records);
  EXPECT_EQ(back.dataset_id, DatasetId::kDs2);
  EXPECT_EQ(back.split_seed, 3u);
  EXPECT_EQ(back.codec_variants.at("fdk_aac"), "aac");
  EXPECT_EQ(manifest_digest(back), manifest_digest(m));
  EXPECT_EQ(back.resolve(back.records[1]), dir / "lossy/a.wav");

  const auto j = record_to_json(lossless);
  std::vector<std::string> keys;
  for (const auto& [k, v] : j.items()) keys.push_back(k);
  EXPECT_EQ(keys, (std::vector<std::string>{"track_id", "audio_path", "label", "codec",
                                            "bitrate_kbps", "cutoff_hz", "dataset_id", "split"}));
  EXPECT_TRUE(j["cutoff_hz"].is_null());
  std::filesystem::remove_all(dir);
}

TEST(Wav, RoundTrip) {
  const auto path = std::filesystem::temp_directory_path() / "lossydetect_wav_test.wav";
  std::vector<int16_t> pcm = {0, 1, -1, 32767, -32768, 1234};
  write_wav_pcm16(path, 44100, 2, pcm);
  const WavInfo info = read_wav_info(path);
  EXPECT_EQ(info.sample_rate_hz, 44100);
  EXPECT_EQ(info.channels, 2);
  EXPECT_EQ(info.bits_per_sample, 16);
  EXPECT_EQ(info.frames, 3u);
  const WavAudio a = read_wav(path);
  ASSERT_EQ(a.samples.size(), pcm.size());
  for (std::size_t i = 0; i < pcm.size(); ++i) EXPECT_FLOAT_EQ(a.samples[i], pcm[i] / 32768.0f);
  EXPECT_THROW(write_wav_pcm16(path, 44100, 2, std::vector<int16_t>(3)), ArgumentError);
  std::filesystem::remove(path);
}

std::vector<float> noise(std::size_t n, uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<float> g(0.0f, 0.1f);
  std::vector<float> x(n);
  for (float& v : x) v = g(rng);
  return x;
}

// White noise against a 1 kHz tone, which has nothing above 15 kHz.
TEST(BandEnergy, RatioOfBandlimitedToBroadband) {
  const auto broadband = noise(88200, 1);
  std::vector<float> tone(88200);
  for (std::size_t n = 0; n < tone.size(); ++n) {
    tone[n] = 0.1f * static_cast<float>(std::sin(2.0 * std::numbers::pi * 1000.0 * n / 44100.0));
  }
  EXPECT_LT(band_energy_ratio(broadband, tone, 15000.0), 0.01);
  EXPECT_NEAR(band_energy_ratio(broadband, broadband, 15000.0), 1.0, 1e-9);
}

// A source holding only 16-bit rounding noise above the cutoff has no band to
// compare against.
TEST(BandEnergy, QuantizationNoiseCountsAsEmpty) {
  Rng rng(4);
  std::uniform_real_distribution<float> u(-0.5f, 0.5f);
  std::vector<float> lsb_noise(88200);
  for (float& v : lsb_noise) v = u(rng) / 32768.0f;
  EXPECT_EQ(band_energy_ratio(lsb_noise, noise(88200, 2), 15000.0), 0.0);
  std::vector<float> louder(lsb_noise);
  for (float& v : louder) v *= 8.0f;
  EXPECT_GT(band_energy_ratio(louder, noise(88200, 2), 15000.0), 1.0);
}

TEST(Transcoder, ArgumentTemplates) {
  Transcoder t(std::filesystem::path("ffmpeg-does-not-matter"));
  const auto args = t.encode_args("in.wav", EncodingSpec{Codec::kMp3Lame, 320, 18000}, "t.mp3");
  EXPECT_EQ(args, (std::vector<std::string>{"ffmpeg-does-not-matter", "-y", "-i", "in.wav",
                                            "-c:a", "libmp3lame", "-b:a", "320k", "-cutoff",
                                            "18000", "t.mp3"}));
  const auto dec = t.decode_args("t.mp3", "o.wav");
  EXPECT_EQ(dec, (std::vector<std::string>{"ffmpeg-does-not-matter", "-y", "-i", "t.mp3", "-ar",
                                           "44100", "-sample_fmt", "s16", "o.wav"}));
  EXPECT_EQ(Transcoder::extension_for(Codec::kVorbis), "ogg");
  EXPECT_EQ(Transcoder::extension_for(Codec::kFdkAac), "m4a");
  Transcoder missing(std::filesystem::path("/nonexistent/ffmpeg"));
  try {
    missing.probe();
    FAIL() << "probe should fail";
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent/ffmpeg"), std::string::npos);
  }
}

TEST(SyntheticCorpus, DeterministicAndBounded) {
  const auto a = render_synthetic_track(3, 7, 4.0, 2);
  EXPECT_EQ(a, render_synthetic_track(3, 7, 4.0, 2));
  EXPECT_NE(a, render_synthetic_track(3, 8, 4.0, 2));
  EXPECT_EQ(a.size(), 2u * 4 * 44100);
  int peak = 0;
  for (int16_t v : a) peak = std::max(peak, std::abs(static_cast<int>(v)));
  EXPECT_GT(peak, 1000);
  EXPECT_LT(peak, 32767);
}

// Small end-to-end build against the real transcoder; skipped without one.
TEST(Builder, BuildsPairedDatasets) {
  Transcoder t;
  try {
    t.probe();
  } catch (const std::exception& e) {
    GTEST_SKIP() << e.what();
  }
  const auto dir = std::filesystem::temp_directory_path() / "lossydetect_builder_test";
  std::filesystem::remove_all(dir);
  SyntheticCorpusOptions opts;
  opts.n_tracks = 4;
  opts.duration_s = 4.0;
  const auto sources = generate_synthetic_corpus(opts, dir / "corpus");
  DatasetSeeds seeds{1, 2, 3};
  BuildOptions b;
  b.out_dir = dir / "ds1";
  const Manifest ds1 = build_dataset(sources, DatasetId::kDs1, seeds, t, b);
  b.out_dir = dir / "ds2";
  const Manifest ds2 = build_dataset(sources, DatasetId::kDs2, seeds, t, b);
  ASSERT_EQ(ds1.records.size(), 8u);
  ASSERT_EQ(ds2.records.size(), 8u);
  for (std::size_t i = 0; i < 8; ++i) {
    const auto& r1 = ds1.records[i];
    const auto& r2 = ds2.records[i];
    EXPECT_EQ(r1.track_id, r2.track_id);
    EXPECT_EQ(r1.label, r2.label);
    EXPECT_EQ(r1.split, r2.split);
    EXPECT_EQ(r1.label == Label::kLossy, r1.encoding.has_value());
    if (r1.encoding) {
      EXPECT_EQ(r1.encoding->codec, r2.encoding->codec);
      EXPECT_EQ(r1.encoding->bitrate_kbps, r2.encoding->bitrate_kbps);
      const double ratio = band_energy_ratio(ds2.resolve(ds2.records[i - 1]), ds2.resolve(r2),
                                             *r2.encoding->cutoff_hz + 1000.0);
      EXPECT_LT(ratio, 0.01) << r2.track_id;
      EXPECT_TRUE(std::filesystem::exists(ds1.resolve(r1)));
    }
  }
  // A rebuild reuses every output and yields the same manifest.
  b.out_dir = dir / "ds2";
  EXPECT_EQ(manifest_digest(build_dataset(sources, DatasetId::kDs2, seeds, t, b)),
            manifest_digest(ds2));
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace lossydetect
