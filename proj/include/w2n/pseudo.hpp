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

#include <cstddef>
#include <vector>

#include "w2n/instance.hpp"
#include "w2n/world.hpp"

namespace w2n {

// Current pseudo ground truths, one instance list per dataset image.
struct PseudoDataset {
  std::vector<std::vector<Instance>> images;

  std::size_t instance_count() const;
  friend bool operator==(const PseudoDataset&, const PseudoDataset&) = default;
};

PseudoDataset pseudo_from_ground_truth(const Dataset& ds);

// IoU of an instance with the best same-class ground-truth object (0 if none).
double best_gt_iou(const GroundTruthScene& scene, const Instance& inst);

// Mean of best_gt_iou over every pseudo instance; 0 for an empty set.
double mean_iou_to_gt(const Dataset& ds, const PseudoDataset& pseudo);

}  // namespace w2n
