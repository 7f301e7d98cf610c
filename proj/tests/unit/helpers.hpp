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

#include "w2n/config.hpp"
#include "w2n/error.hpp"
#include "w2n/log.hpp"

namespace w2n::testing {

inline WorldConfig small_world(std::uint64_t seed = 7) {
  WorldConfig w;
  w.num_images = 16;
  w.proposals_per_image = 24;
  w.seed = seed;
  return w;
}

// Small end-to-end configuration; minutes become seconds.
inline RunConfig small_run(std::uint64_t seed = 7) {
  RunConfig c;
  c.world = small_world(seed);
  c.seed = seed;
  c.test_images = 12;
  c.la.steps = 40;
  c.ssod.steps = 30;
  c.ssod.jitter_samples = 4;
  c.T = 1;
  return c;
}

struct QuietLogs {
  QuietLogs() : old(log_level()) { set_log_level(LogLevel::kOff); }
  ~QuietLogs() { set_log_level(old); }
  LogLevel old;
};

}  // namespace w2n::testing
