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

#include <span>
#include <vector>

#include "w2n/geometry.hpp"
#include "w2n/instance.hpp"

namespace w2n {

struct PgeConfig {
  double t_nms = 0.3;
  double t_score = 0.2;
  double t_fusion = 0.4;
};

void validate(const PgeConfig& cfg);

// Repeatedly merges the same-class pair with the highest IoU >= t_fusion into
// its enclosing box (score = max) until no such pair remains.
std::vector<Detection> fuse_boxes(std::vector<Detection> dets, double t_fusion);

// Pseudo ground-truth excavation:
//   1. drop predictions whose class is absent from the image label;
//   2. per-class NMS at t_nms;
//   3. drop scores below t_score;
//   4. a present class left without survivors gets back its best prediction;
//   5. fuse overlapping same-class boxes to a fixpoint.
// Output instances carry both task tags. With t_nms < t_fusion, survivors of
// step 2 never reach the fusion threshold and step 5 is a no-op.
std::vector<Instance> excavate(std::span<const Detection> preds,
                               std::span<const int> image_label, const PgeConfig& cfg);

}  // namespace w2n
