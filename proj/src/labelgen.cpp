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

#include "w2n/labelgen.hpp"

#include <algorithm>

#include "w2n/error.hpp"
#include "w2n/log.hpp"

namespace w2n {

void validate(const PgeConfig& cfg) {
  auto unit = [](double v) { return v > 0.0 && v < 1.0; };
  if (!unit(cfg.t_nms) || !unit(cfg.t_score) || !unit(cfg.t_fusion))
    fail(ErrorKind::kInvalidArgument, "pge thresholds must lie in (0,1)");
}

std::vector<Detection> fuse_boxes(std::vector<Detection> dets, double t_fusion) {
  for (;;) {
    double best = -1.0;
    std::size_t bi = 0, bj = 0;
    for (std::size_t i = 0; i < dets.size(); ++i) {
      for (std::size_t j = i + 1; j < dets.size(); ++j) {
        if (dets[i].cls != dets[j].cls) continue;
        const double v = iou(dets[i].box, dets[j].box);
        if (v >= t_fusion && v > best) {
          best = v;
          bi = i;
          bj = j;
        }
      }
    }
    if (best < 0.0) return dets;
    dets[bi].box = enclosing(dets[bi].box, dets[bj].box);
    dets[bi].score = std::max(dets[bi].score, dets[bj].score);
    dets.erase(dets.begin() + static_cast<std::ptrdiff_t>(bj));
  }
}

std::vector<Instance> excavate(std::span<const Detection> preds,
                               std::span<const int> image_label, const PgeConfig& cfg) {
  validate(cfg);
  const int classes = static_cast<int>(image_label.size());
  std::vector<Detection> present;
  for (const auto& d : preds)
    if (d.cls >= 0 && d.cls < classes && image_label[d.cls]) present.push_back(d);
  if (present.empty()) {
    if (std::find(image_label.begin(), image_label.end(), 1) != image_label.end())
      log_debug("excavate: no predictions for a labeled image");
    return {};
  }

  std::vector<Detection> kept;
  for (const auto& d : nms(present, cfg.t_nms))
    if (d.score >= cfg.t_score) kept.push_back(d);

  for (int c = 0; c < classes; ++c) {
    if (!image_label[c]) continue;
    const bool covered = std::any_of(kept.begin(), kept.end(),
                                     [c](const Detection& d) { return d.cls == c; });
    if (covered) continue;
    const Detection* best = nullptr;
    for (const auto& d : present)
      if (d.cls == c && (!best || d.score > best->score)) best = &d;
    if (best) kept.push_back(*best);
  }

  kept = fuse_boxes(std::move(kept), cfg.t_fusion);
  std::stable_sort(kept.begin(), kept.end(), [](const Detection& a, const Detection& b) {
    if (a.cls != b.cls) return a.cls < b.cls;
    return a.score > b.score;
  });
  std::vector<Instance> out;
  out.reserve(kept.size());
  for (const auto& d : kept) out.push_back(Instance{d.box, d.cls, 1, 1});
  return out;
}

}  // namespace w2n
