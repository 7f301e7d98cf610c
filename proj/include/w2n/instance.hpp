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

#include "w2n/geometry.hpp"

namespace w2n {

// A (pseudo) box label with per-task tags. A tag of 0 removes the instance
// from that task's loss; at least one tag is set.
struct Instance {
  Box box;
  int cls = 0;
  std::uint8_t lambda_cls = 1;
  std::uint8_t lambda_reg = 1;

  friend bool operator==(const Instance&, const Instance&) = default;
};

inline bool tags_valid(const Instance& inst) {
  return inst.lambda_cls <= 1 && inst.lambda_reg <= 1 &&
         inst.lambda_cls + inst.lambda_reg >= 1;
}

}  // namespace w2n
