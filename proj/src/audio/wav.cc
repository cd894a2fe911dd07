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

#include "lossydetect/audio/wav.h"

#include <cstring>
#include <fstream>

#include "lossydetect/util/errors.h"

namespace lossydetect {
namespace {

constexpr uint16_t kFormatPcm = 1;
constexpr uint16_t kFormatFloat = 3;
constexpr uint16_t kFormatExtensible = 0xFFFE;

uint16_t le16(const unsigned char* p) { return p[0] | (p[1] << 8); }
uint32_t le32(const unsigned char* p) {
  return p[0] | (p[1] << 8) | (p[2] << 16) | (static_cast<uint32_t>(p[3]) << 24);
}

struct Layout {
  WavInfo info;
  std::streamoff data_offset = 0;
  uint32_t data_bytes = 0;
};

Layout parse(std::istream& in, const std::filesystem::path& path) {
  unsigned char riff[12];
  if (!in.read(reinterpret_cast<char*>(riff), 12) ||
      std::memcmp(riff, "RIFF", 4) != 0 || std::memcmp(riff + 8, "WAVE", 4) != 0) {
    throw IoError("not a RIFF/WAVE file: " + path.string());
  }
  Layout layout;
  bool have_fmt = false;
  uint16_t format = 0;
  uint16_t block_align = 0;
  while (true) {
    unsigned char hdr[8];
    if (!in.read(reinterpret_cast<char*>(hdr), 8)) break;
    const uint32_t size = le32(hdr + 4);
    if (std::memcmp(hdr, "fmt ", 4) == 0) {
      if (size < 16) throw IoError("truncated fmt chunk: " + path.string());
      std::vector<unsigned char> fmt(size);
      if (!in.read(reinterpret_cast<char*>(fmt.data()), size)) {
        throw IoError("truncated fmt chunk: " + path.string());
      }
      format = le16(fmt.data());
      layout.info.channels = le16(fmt.data() + 2);
      layout.info.sample_rate_hz = static_cast<int>(le32(fmt.data() + 4));
      block_align = le16(fmt.data() + 12);
      layout.info.bits_per_sample = le16(fmt.data() + 14);
      if (format == kFormatExtensible && size >= 26) format = le16(fmt.data() + 24);
      have_fmt = true;
    } else if (std::memcmp(hdr, "data", 4) == 0) {
      if (!have_fmt) throw IoError("data chunk before fmt chunk: " + path.string());
      layout.data_offset = in.tellg();
      layout.data_bytes = size;
      // Streams written by pipes may carry a placeholder size.
      in.seekg(0, std::ios::end);
      const auto available = static_cast<uint64_t>(in.tellg() - layout.data_offset);
      if (size == 0xFFFFFFFFu || size > available) {
        layout.data_bytes = static_cast<uint32_t>(available);
      }
      break;
    } else {
      in.seekg(size + (size & 1), std::ios::cur);
    }
    if (size & 1 && std::memcmp(hdr, "fmt ", 4) == 0) in.seekg(1, std::ios::cur);
  }
  if (!have_fmt || layout.data_offset == 0) {
    throw IoError("missing fmt or data chunk: " + path.string());
  }
  if (format != kFormatPcm && format != kFormatFloat) {
    throw IoError("unsupported WAV encoding in " + path.string());
  }
  layout.info.is_float = format == kFormatFloat;
  const int bps = layout.info.bits_per_sample;
  const bool supported = layout.info.is_float ? bps == 32
                                              : (bps == 8 || bps == 16 || bps == 24 || bps == 32);
  if (!supported || layout.info.channels <= 0 ||
      block_align != layout.info.channels * bps / 8) {
    throw IoError("unsupported WAV sample layout in " + path.string());
  }
  layout.info.frames = layout.data_bytes / block_align;
  return layout;
}

}  // namespace

WavInfo read_wav_info(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return parse(in, path).info;
}

WavAudio read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  const Layout layout = parse(in, path);
  const WavInfo& info = layout.info;
  const std::size_t n = info.frames * info.channels;
  const std::size_t bytes_per = info.bits_per_sample / 8;
  std::vector<unsigned char> raw(n * bytes_per);
  in.clear();
  in.seekg(layout.data_offset);
  if (!in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()))) {
    throw IoError("truncated data chunk: " + path.string());
  }
  WavAudio out;
  out.info = info;
  out.samples.resize(n);
  const unsigned char* p = raw.data();
  for (std::size_t i = 0; i < n; ++i, p += bytes_per) {
    float v = 0.0f;
    if (info.is_float) {
      std::memcpy(&v, p, 4);
    } else if (bytes_per == 1) {
      v = (static_cast<int>(p[0]) - 128) / 128.0f;
    } else if (bytes_per == 2) {
      v = static_cast<int16_t>(le16(p)) / 32768.0f;
    } else if (bytes_per == 3) {
      int32_t s = p[0] | (p[1] << 8) | (p[2] << 16);
      if (s & 0x800000) s -= 0x1000000;
      v = static_cast<float>(s) / 8388608.0f;
    } else {
      v = static_cast<float>(static_cast<int32_t>(le32(p)) / 2147483648.0);
    }
    out.samples[i] = v;
  }
  return out;
}

void write_wav_pcm16(const std::filesystem::path& path, int sample_rate_hz,
                     int channels, std::span<const int16_t> interleaved) {
  if (channels <= 0 || interleaved.size() % channels != 0) {
    throw ArgumentError("write_wav_pcm16: sample count not a multiple of channels");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  const uint32_t data_bytes = static_cast<uint32_t>(interleaved.size() * 2);
  auto put16 = [&](uint16_t v) {
    const char b[2] = {static_cast<char>(v & 0xff), static_cast<char>(v >> 8)};
    out.write(b, 2);
  };
  auto put32 = [&](uint32_t v) {
    const char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                       static_cast<char>((v >> 16) & 0xff), static_cast<char>(v >> 24)};
    out.write(b, 4);
  };
  out.write("RIFF", 4);
  put32(36 + data_bytes);
  out.write("WAVEfmt ", 8);
  put32(16);
  put16(kFormatPcm);
  put16(static_cast<uint16_t>(channels));
  put32(static_cast<uint32_t>(sample_rate_hz));
  put32(static_cast<uint32_t>(sample_rate_hz * channels * 2));
  put16(static_cast<uint16_t>(channels * 2));
  put16(16);
  out.write("data", 4);
  put32(data_bytes);
  for (int16_t s : interleaved) put16(static_cast<uint16_t>(s));
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace lossydetect
