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

#include "w2n/pseudo.hpp"

#include <algorithm>

namespace w2n {

std::size_t PseudoDataset::instance_count() const {
  std::size_t n = 0;
  for (const auto& img : images) n += img.size();
  return n;
}

PseudoDataset pseudo_from_ground_truth(const Dataset& ds) {
  PseudoDataset out;
  out.images.reserve(ds.images.size());
  for (const auto& rec : ds.images) {
    std::vector<Instance> inst;
    for (const auto& o : rec.scene.objects) inst.push_back(Instance{o.box, o.cls, 1, 1});
    out.images.push_back(std::move(inst));
  }
  return out;
}

double best_gt_iou(const GroundTruthScene& scene, const Instance& inst) {
  double best = 0.0;
  for (const auto& o : scene.objects)
    if (o.cls == inst.cls) best = std::max(best, iou(o.box, inst.box));
  return best;
}

double mean_iou_to_gt(const Dataset& ds, const PseudoDataset& pseudo) {
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < pseudo.images.size() && i < ds.images.size(); ++i) {
    for (const auto& inst : pseudo.images[i]) {
      sum += best_gt_iou(ds.images[i].scene, inst);
      ++n;
    }
  }
  return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

}  // namespace w2n
