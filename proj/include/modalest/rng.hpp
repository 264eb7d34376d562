// Copyright 2026 The modalest Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// =============================================================================
//
// Seeded random streams.
//
// Every stochastic routine draws from a Stream identified by (seed, stream
// id). The stream's engine is std::mt19937_64 seeded with
// splitmix64(seed ^ splitmix64(stream_id + 1)), which makes substreams
// independent of how many draws other substreams consumed. Uniform and
// normal variates are produced here rather than through <random>
// distributions, whose algorithms are implementation-defined; this keeps
// outputs identical across standard libraries.

#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace modalest {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Stream ids of the independent random consumers.
namespace streams {
inline constexpr std::uint64_t kHarmonic = 0x1000'0000ULL;   // + sample index
inline constexpr std::uint64_t kNoise = 0x2000'0000ULL;      // + column index
inline constexpr std::uint64_t kSensors = 0x3000'0000ULL;
inline constexpr std::uint64_t kMonteCarlo = 0x4000'0000ULL; // + block index
inline constexpr std::uint64_t kFuzz = 0x5000'0000ULL;
}  // namespace streams

class Stream {
 public:
  Stream(std::uint64_t seed, std::uint64_t stream_id)
      : engine_(splitmix64(seed ^ splitmix64(stream_id + 1))) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller; the second variate is cached.
  double normal() {
    if (has_cached_) {
      has_cached_ = false;
      return cached_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    cached_ = r * std::sin(theta);
    has_cached_ = true;
    return r * std::cos(theta);
  }

  /// Uniform integer in [0, bound) by rejection.
  std::uint64_t below(std::uint64_t bound) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t x = engine_();
    while (x >= limit) x = engine_();
    return x % bound;
  }

 private:
  std::mt19937_64 engine_;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace modalest
