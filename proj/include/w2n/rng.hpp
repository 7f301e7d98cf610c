// Copyright 2026 The W2N Lab Authors. All Rights Reserved.
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

#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace w2n {

// Seeded random stream. Uniform draws are built from raw engine bits so
// sequences do not depend on the standard library's distribution classes.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Uniform in the closed interval [lo, hi] up to rounding.
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [lo, hi].
  int uniform_int(int lo, int hi) {
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<int>(engine_() % span);
  }

  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::mt19937_64 engine_;
};

std::uint64_t mix64(std::uint64_t x);

// Derives an independent stream seed from a root seed and a tag path, e.g.
// derive_seed(seed, {kStreamLa, iteration, step, image}).
std::uint64_t derive_seed(std::uint64_t root,
                          std::initializer_list<std::uint64_t> path);

inline Rng derive_rng(std::uint64_t root,
                      std::initializer_list<std::uint64_t> path) {
  return Rng(derive_seed(root, path));
}

// Stream tags used across modules.
enum StreamTag : std::uint64_t {
  kStreamWorld = 0x1001,
  kStreamTestWorld = 0x1002,
  kStreamImage = 0x1003,
  kStreamNoise = 0x2001,
  kStreamLa = 0x3001,
  kStreamCurve = 0x3002,
  kStreamSsod = 0x4001,
  kStreamSsodBatch = 0x4002,
};

}  // namespace w2n
