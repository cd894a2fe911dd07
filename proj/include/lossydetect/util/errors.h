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

#include <stdexcept>
#include <string>

namespace lossydetect {

// Invalid caller-supplied value (bad enum, out-of-range frequency, ...).
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Decodable file that violates a format requirement (e.g. sample rate).
class FormatError : public std::runtime_error {
 public:
  FormatError(std::string reason, const std::string& what)
      : std::runtime_error(what), reason_(std::move(reason)) {}
  const std::string& reason() const { return reason_; }

 private:
  std::string reason_;
};

// A tensor or record passed across a module boundary has the wrong shape or
// provenance.
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class TranscodeError : public std::runtime_error {
 public:
  TranscodeError(const std::string& what, std::string stderr_text)
      : std::runtime_error(what), stderr_(std::move(stderr_text)) {}
  const std::string& stderr_text() const { return stderr_; }

 private:
  std::string stderr_;
};

class CapabilityError : public std::runtime_error {
 public:
  CapabilityError(const std::string& what, std::string codec)
      : std::runtime_error(what), codec_(std::move(codec)) {}
  const std::string& codec() const { return codec_; }

 private:
  std::string codec_;
};

class EmptyCorpusError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace lossydetect
