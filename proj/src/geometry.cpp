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

#include "w2n/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace w2n {

Box Box::from_corners(double x1, double y1, double x2, double y2) {
  return Box{0.5 * (x1 + x2), 0.5 * (y1 + y2), x2 - x1, y2 - y1};
}

bool is_valid(const Box& b) {
  return std::isfinite(b.x) && std::isfinite(b.y) && std::isfinite(b.w) &&
         std::isfinite(b.h) && b.w > 0.0 && b.h > 0.0;
}

bool contains(const Box& outer, const Box& inner) {
  return outer.x1() <= inner.x1() && outer.y1() <= inner.y1() &&
         outer.x2() >= inner.x2() && outer.y2() >= inner.y2();
}

Box enclosing(const Box& a, const Box& b) {
  return Box::from_corners(std::min(a.x1(), b.x1()), std::min(a.y1(), b.y1()),
                           std::max(a.x2(), b.x2()), std::max(a.y2(), b.y2()));
}

double intersection_area(const Box& a, const Box& b) {
  const double iw = std::min(a.x2(), b.x2()) - std::max(a.x1(), b.x1());
  const double ih = std::min(a.y2(), b.y2()) - std::max(a.y1(), b.y1());
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  return iw * ih;
}

double iou(const Box& a, const Box& b) {
  const double inter = intersection_area(a, b);
  if (inter <= 0.0) return 0.0;
  // Sum of areas is formed in a fixed order so iou(a,b) == iou(b,a) exactly.
  const double lo = std::min(a.area(), b.area());
  const double hi = std::max(a.area(), b.area());
  return inter / ((lo + hi) - inter);
}

BoxDelta encode(const Box& target, const Box& reference) {
  return BoxDelta{(target.x - reference.x) / reference.w,
                  (target.y - reference.y) / reference.h,
                  std::log(target.w / reference.w),
                  std::log(target.h / reference.h)};
}

Box decode(const BoxDelta& d, const Box& reference) {
  const double tw = std::min(d.tw, kMaxLogScale);
  const double th = std::min(d.th, kMaxLogScale);
  return Box{reference.x + d.tx * reference.w, reference.y + d.ty * reference.h,
             reference.w * std::exp(tw), reference.h * std::exp(th)};
}

std::vector<Detection> nms(std::span<const Detection> dets, double t_nms) {
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (dets[a].cls != dets[b].cls) return dets[a].cls < dets[b].cls;
    return dets[a].score > dets[b].score;
  });

  std::vector<Detection> kept;
  std::vector<bool> suppressed(dets.size(), false);
  for (std::size_t i = 0; i < order.size(); ++i) {
    const auto& cand = dets[order[i]];
    if (suppressed[i]) continue;
    kept.push_back(cand);
    for (std::size_t j = i + 1; j < order.size() && dets[order[j]].cls == cand.cls; ++j) {
      if (!suppressed[j] && iou(cand.box, dets[order[j]].box) > t_nms)
        suppressed[j] = true;
    }
  }
  return kept;
}

Box apply_transform(const Box& b, const BoxTransform& t) {
  return Box{b.x + t.delta_x * b.w, b.y + t.delta_y * b.h, b.w * t.delta_w,
             b.h * t.delta_h};
}

BoxTransform sample_transform(double shift, double scale_lo, double scale_hi,
                              Rng& rng) {
  BoxTransform t;
  t.delta_x = rng.uniform(-shift, shift);
  t.delta_y = rng.uniform(-shift, shift);
  t.delta_w = rng.uniform(scale_lo, scale_hi);
  t.delta_h = rng.uniform(scale_lo, scale_hi);
  return t;
}

OuterBoxSample sample_outer_box(const Box& b, double alpha, Rng& rng) {
  const BoxTransform t = sample_transform(alpha, kOuterScaleLo, kOuterScaleHi, rng);
  return OuterBoxSample{t.delta_x, t.delta_y, t.delta_w, t.delta_h,
                        apply_transform(b, t)};
}

Box box_ema(const Box& prev, const Box& current, double beta) {
  const double keep = 1.0 - beta;
  return Box{beta * prev.x + keep * current.x, beta * prev.y + keep * current.y,
             beta * prev.w + keep * current.w, beta * prev.h + keep * current.h};
}

}  // namespace w2n
