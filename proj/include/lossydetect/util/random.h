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

#include <cstdint>
#include <random>
#include <string_view>

namespace lossydetect {

// 64-bit FNV-1a. Stable across platforms; used for keying and config hashes.
constexpr uint64_t fnv1a64(std::string_view s,
                           uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

constexpr uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr uint64_t mix_seed(uint64_t a, uint64_t b) {
  return splitmix64(a ^ splitmix64(b + 0x632be59bd9b4e019ULL));
}

// Stateless generator: every draw is a pure function of (key, counter).
// Two consumers sharing a key and a counter see the same value no matter what
// else they drew before.
class CounterRng {
 public:
  explicit CounterRng(uint64_t key) : key_(key) {}
  CounterRng(uint64_t seed, std::string_view name)
      : key_(mix_seed(seed, fnv1a64(name))) {}

  uint64_t raw(uint64_t counter) const {
    return splitmix64(key_ ^ splitmix64(counter));
  }

  // Unbiased draw in [0, n) for the stream identified by `stream`. Rejection
  // resamples on sub-counters so streams never collide.
  uint64_t index(uint64_t stream, uint64_t n) const {
    const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    for (uint64_t attempt = 0;; ++attempt) {
      const uint64_t v = raw((stream << 16) | attempt);
      if (v < limit) return v % n;
    }
  }

  double uniform(uint64_t stream) const {
    return static_cast<double>(raw(stream << 16) >> 11) * 0x1.0p-53;
  }

 private:
  uint64_t key_;
};

// Sequential stream for sampling-heavy code paths (crops, masks, init).
using Rng = std::mt19937_64;

inline Rng make_rng(uint64_t seed, uint64_t a = 0, uint64_t b = 0) {
  return Rng(mix_seed(mix_seed(seed, a), b));
}

}  // namespace lossydetect
