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

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "lossydetect/dataset/types.h"

namespace lossydetect {

struct ProcessResult {
  int exit_code = -1;
  std::string stdout_text;
  std::string stderr_text;
};

// Runs argv[0] (PATH lookup) with stdin bound to /dev/null and both output
// streams captured. Throws IoError if the process cannot be started.
ProcessResult run_process(const std::vector<std::string>& argv);

// Joins argv into a single shell-quoted line for provenance logs.
std::string format_command(const std::vector<std::string>& argv);

struct TranscodeResult {
  std::filesystem::path output;
  std::vector<std::string> encode_command;
  std::vector<std::string> decode_command;
};

// Drives an external ffmpeg-compatible binary. Encode and decode argument
// lists follow fixed per-codec templates.
class Transcoder {
 public:
  // Binary resolution order: explicit argument, $LOSSYDETECT_TRANSCODER, the
  // build-time default.
  explicit Transcoder(std::optional<std::filesystem::path> binary = std::nullopt);

  const std::filesystem::path& binary() const { return binary_; }

  // Probes the binary. Throws IoError naming the binary if it cannot run.
  void probe();
  bool probed() const { return probed_; }
  const std::string& version() const { return version_; }
  bool has_encoder(const std::string& name) const;

  // Encoder actually used for `codec` ("libfdk_aac" falls back to "aac").
  // Throws CapabilityError if neither is available.
  std::string encoder_for(Codec codec) const;
  static std::string extension_for(Codec codec);

  // Without an explicit cutoff the native AAC encoder keeps the full band at
  // 256k and above, unlike libfdk_aac. Its default bandwidth is imposed instead.
  static constexpr int kFdkAacDefaultCutoffHz = 17000;

  std::vector<std::string> encode_args(const std::filesystem::path& src,
                                       const EncodingSpec& spec,
                                       const std::filesystem::path& tmp) const;
  std::vector<std::string> decode_args(const std::filesystem::path& tmp,
                                       const std::filesystem::path& out) const;

  // Encodes then decodes back to 16-bit 44.1 kHz WAV at `out_path`. The
  // intermediate file lives next to out_path and is removed afterwards.
  // Throws TranscodeError (carrying stderr) on non-zero exit.
  TranscodeResult transcode(const SourceTrack& source, const EncodingSpec& spec,
                            const std::filesystem::path& out_path) const;

 private:
  std::filesystem::path binary_;
  bool probed_ = false;
  std::string version_;
  std::set<std::string> encoders_;
};

std::filesystem::path default_transcoder_path();

}  // namespace lossydetect
