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

#include "lossydetect/dataset/transcoder.h"

#include <fcntl.h>
#include <poll.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <array>
#include <cerrno>
#include <cstdlib>
#include <cstring>
#include <sstream>

#include "lossydetect/util/errors.h"

extern char** environ;

#ifndef LOSSYDETECT_DEFAULT_TRANSCODER
#define LOSSYDETECT_DEFAULT_TRANSCODER "ffmpeg"
#endif

namespace lossydetect {
namespace {

class Pipe {
 public:
  Pipe() {
    if (::pipe(fds_) != 0) throw IoError(std::string("pipe: ") + std::strerror(errno));
  }
  ~Pipe() {
    close_read();
    close_write();
  }
  int read_end() const { return fds_[0]; }
  int write_end() const { return fds_[1]; }
  void close_read() { reset(fds_[0]); }
  void close_write() { reset(fds_[1]); }

 private:
  static void reset(int& fd) {
    if (fd >= 0) ::close(fd);
    fd = -1;
  }
  int fds_[2] = {-1, -1};
};

}  // namespace

ProcessResult run_process(const std::vector<std::string>& argv) {
  if (argv.empty()) throw ArgumentError("run_process: empty argv");
  Pipe out, err;
  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_addopen(&actions, STDIN_FILENO, "/dev/null", O_RDONLY, 0);
  posix_spawn_file_actions_adddup2(&actions, out.write_end(), STDOUT_FILENO);
  posix_spawn_file_actions_adddup2(&actions, err.write_end(), STDERR_FILENO);
  posix_spawn_file_actions_addclose(&actions, out.read_end());
  posix_spawn_file_actions_addclose(&actions, err.read_end());

  std::vector<char*> args;
  for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
  args.push_back(nullptr);
  pid_t pid = 0;
  const int rc = posix_spawnp(&pid, args[0], &actions, nullptr, args.data(), environ);
  posix_spawn_file_actions_destroy(&actions);
  if (rc != 0) {
    throw IoError("cannot start " + argv[0] + ": " + std::strerror(rc));
  }
  out.close_write();
  err.close_write();

  ProcessResult result;
  std::array<pollfd, 2> fds{{{out.read_end(), POLLIN, 0}, {err.read_end(), POLLIN, 0}}};
  std::string* sinks[2] = {&result.stdout_text, &result.stderr_text};
  int open_streams = 2;
  char buf[8192];
  while (open_streams > 0) {
    if (::poll(fds.data(), fds.size(), -1) < 0) {
      if (errno == EINTR) continue;
      break;
    }
    for (int i = 0; i < 2; ++i) {
      if (fds[i].fd < 0 || !(fds[i].revents & (POLLIN | POLLHUP | POLLERR))) continue;
      const ssize_t n = ::read(fds[i].fd, buf, sizeof(buf));
      if (n > 0) {
        sinks[i]->append(buf, static_cast<std::size_t>(n));
      } else if (n == 0 || errno != EINTR) {
        fds[i].fd = -1;
        --open_streams;
      }
    }
  }
  int status = 0;
  while (::waitpid(pid, &status, 0) < 0 && errno == EINTR) {
  }
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : 128 + WTERMSIG(status);
  return result;
}

std::string format_command(const std::vector<std::string>& argv) {
  std::string line;
  for (const auto& a : argv) {
    if (!line.empty()) line += ' ';
    const bool plain = !a.empty() && a.find_first_of(" \t\"'\\$`") == std::string::npos;
    if (plain) {
      line += a;
    } else {
      line += '\'';
      for (char c : a) {
        if (c == '\'') line += "'\\''";
        else line += c;
      }
      line += '\'';
    }
  }
  return line;
}

std::filesystem::path default_transcoder_path() {
  if (const char* env = std::getenv("LOSSYDETECT_TRANSCODER"); env && *env) {
    return env;
  }
  return LOSSYDETECT_DEFAULT_TRANSCODER;
}

Transcoder::Transcoder(std::optional<std::filesystem::path> binary)
    : binary_(binary ? *binary : default_transcoder_path()) {}

void Transcoder::probe() {
  ProcessResult version;
  try {
    version = run_process({binary_.string(), "-hide_banner", "-version"});
  } catch (const IoError&) {
    throw IoError("transcoder not found or not executable: " + binary_.string() +
                  " (set LOSSYDETECT_TRANSCODER or pass --transcoder)");
  }
  if (version.exit_code != 0) {
    throw IoError("transcoder failed to report its version: " + binary_.string());
  }
  version_ = version.stdout_text.substr(0, version.stdout_text.find('\n'));
  const ProcessResult listing = run_process({binary_.string(), "-hide_banner", "-encoders"});
  encoders_.clear();
  std::istringstream lines(listing.stdout_text);
  std::string line;
  while (std::getline(lines, line)) {
    // " A....D libmp3lame   description"
    std::istringstream fields(line);
    std::string flags, name;
    if (fields >> flags >> name && flags.size() == 6 && flags[0] == 'A') {
      encoders_.insert(name);
    }
  }
  probed_ = true;
}

bool Transcoder::has_encoder(const std::string& name) const {
  return encoders_.count(name) > 0;
}

std::string Transcoder::encoder_for(Codec codec) const {
  auto require = [&](const std::string& name) -> std::string {
    if (!probed_ || has_encoder(name)) return name;
    throw CapabilityError("transcoder " + binary_.string() + " lacks the " + name +
                              " encoder needed for codec " + std::string(to_string(codec)),
                          std::string(to_string(codec)));
  };
  switch (codec) {
    case Codec::kMp3Lame: return require("libmp3lame");
    case Codec::kVorbis: return require("libvorbis");
    case Codec::kFdkAac:
      if (!probed_ || has_encoder("libfdk_aac")) return "libfdk_aac";
      return require("aac");
  }
  throw ArgumentError("unknown codec");
}

std::string Transcoder::extension_for(Codec codec) {
  switch (codec) {
    case Codec::kMp3Lame: return "mp3";
    case Codec::kFdkAac: return "m4a";
    case Codec::kVorbis: return "ogg";
  }
  throw ArgumentError("unknown codec");
}

std::vector<std::string> Transcoder::encode_args(const std::filesystem::path& src,
                                                 const EncodingSpec& spec,
                                                 const std::filesystem::path& tmp) const {
  std::vector<std::string> args = {binary_.string(), "-y",  "-i", src.string(),
                                   "-c:a",           encoder_for(spec.codec),
                                   "-b:a",           std::to_string(spec.bitrate_kbps) + "k"};
  if (spec.cutoff_hz) {
    args.push_back("-cutoff");
    args.push_back(std::to_string(*spec.cutoff_hz));
  } else if (args[5] == "aac") {
    args.push_back("-cutoff");
    args.push_back(std::to_string(kFdkAacDefaultCutoffHz));
  }
  args.push_back(tmp.string());
  return args;
}

std::vector<std::string> Transcoder::decode_args(const std::filesystem::path& tmp,
                                                 const std::filesystem::path& out) const {
  return {binary_.string(), "-y", "-i", tmp.string(), "-ar", "44100",
          "-sample_fmt", "s16", out.string()};
}

TranscodeResult Transcoder::transcode(const SourceTrack& source,
                                      const EncodingSpec& spec,
                                      const std::filesystem::path& out_path) const {
  TranscodeResult result;
  result.output = out_path;
  auto tmp = out_path;
  tmp.replace_extension(extension_for(spec.codec));
  result.encode_command = encode_args(source.path, spec, tmp);
  result.decode_command = decode_args(tmp, out_path);
  std::error_code ec;
  std::filesystem::create_directories(out_path.parent_path(), ec);

  const ProcessResult enc = run_process(result.encode_command);
  if (enc.exit_code != 0) {
    std::filesystem::remove(tmp, ec);
    throw TranscodeError("encode failed (exit " + std::to_string(enc.exit_code) +
                             ") for " + source.track_id,
                         enc.stderr_text);
  }
  const ProcessResult dec = run_process(result.decode_command);
  std::filesystem::remove(tmp, ec);
  if (dec.exit_code != 0) {
    throw TranscodeError("decode failed (exit " + std::to_string(dec.exit_code) +
                             ") for " + source.track_id,
                         dec.stderr_text);
  }
  return result;
}

}  // namespace lossydetect
