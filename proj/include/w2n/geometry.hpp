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

#include "w2n/rng.hpp"

namespace w2n {

// Axis-aligned box in center/size form. Width and height are positive.
struct Box {
  double x = 0.0;
  double y = 0.0;
  double w = 1.0;
  double h = 1.0;

  double x1() const { return x - 0.5 * w; }
  double y1() const { return y - 0.5 * h; }
  double x2() const { return x + 0.5 * w; }
  double y2() const { return y + 0.5 * h; }
  double area() const { return w * h; }

  static Box from_corners(double x1, double y1, double x2, double y2);

  friend bool operator==(const Box&, const Box&) = default;
};

bool is_valid(const Box& b);

// True when `inner` lies inside `outer` (closed containment on corners).
bool contains(const Box& outer, const Box& inner);

// Smallest box enclosing both inputs.
Box enclosing(const Box& a, const Box& b);

double intersection_area(const Box& a, const Box& b);

// Intersection over union. Touching boxes have zero intersection.
double iou(const Box& a, const Box& b);

// Standard detector coding: normalized center offsets and log scales.
struct BoxDelta {
  double tx = 0.0;
  double ty = 0.0;
  double tw = 0.0;
  double th = 0.0;

  friend bool operator==(const BoxDelta&, const BoxDelta&) = default;
};

// Log-scale clamp applied when decoding, log(1000 / 16) as in common
// detector implementations.
inline constexpr double kMaxLogScale = 4.135166556742356;

BoxDelta encode(const Box& target, const Box& reference);
Box decode(const BoxDelta& delta, const Box& reference);

struct Detection {
  Box box;
  int cls = 0;
  double score = 0.0;
};

// Per-class greedy NMS. Equal scores keep the lower input index first.
// The result is grouped by ascending class, descending score within a class.
std::vector<Detection> nms(std::span<const Detection> dets, double t_nms);

// Shift/scale transform applied to a box: [x + dx*w, y + dy*h, w*sw, h*sh].
struct BoxTransform {
  double delta_x = 0.0;
  double delta_y = 0.0;
  double delta_w = 1.0;
  double delta_h = 1.0;
};

Box apply_transform(const Box& b, const BoxTransform& t);

// Draws shifts from U(-shift, shift) and scales from U(scale_lo, scale_hi).
BoxTransform sample_transform(double shift, double scale_lo, double scale_hi,
                              Rng& rng);

struct OuterBoxSample {
  double delta_x = 0.0;
  double delta_y = 0.0;
  double delta_w = 0.0;
  double delta_h = 0.0;
  Box result;
};

inline constexpr double kOuterScaleLo = 1.7320508075688772;  // sqrt(3)
inline constexpr double kOuterScaleHi = 2.0;

// Random outer box around `b`: shifts in U(-alpha, alpha), scales in
// U(sqrt(3), 2).
OuterBoxSample sample_outer_box(const Box& b, double alpha, Rng& rng);

// Componentwise beta * prev + (1 - beta) * current in center/size form.
Box box_ema(const Box& prev, const Box& current, double beta);

}  // namespace w2n
