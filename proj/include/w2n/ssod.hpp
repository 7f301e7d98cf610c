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
#include <iosfwd>
#include <span>
#include <vector>

#include "w2n/detector.hpp"
#include "w2n/pseudo.hpp"
#include "w2n/split.hpp"
#include "w2n/world.hpp"

namespace w2n {

struct SsodConfig {
  double lambda_u = 2.0;
  double teacher_momentum = 0.996;
  double pseudo_score_threshold = 0.7;
  int jitter_samples = 10;
  double jitter_variance_threshold = 0.005;
  int steps = 1500;
  double lr = 0.5;
  // 0 uses every labeled (unlabeled) image in each step.
  int labeled_batch = 16;
  int unlabeled_batch = 16;
  // Bound of the uniform noise added to student features on unlabeled images.
  double strong_noise = 0.05;
  double jitter_shift = 0.06;
  double jitter_scale_lo = 0.94;
  double jitter_scale_hi = 1.06;
  double pseudo_nms = 0.3;
  double tau_assign = 0.5;
};

void validate(const SsodConfig& cfg);

// Tag-gated supervision for the labeled part of a split: one entry per image
// holding at least one labeled instance. Remaining pseudo boxes are ignored.
std::vector<ImageSupervision> labeled_supervision(const Dataset& ds, const LabeledView& view,
                                                  double tau_assign);

// Mean over labeled images of the gated loss. Empty input gives zero loss.
LossBreakdown supervised_loss(const DetectorParams& student,
                              std::span<const ImageSupervision> labeled, DetectorParams* grad,
                              int threads = 1);

struct PseudoLabel {
  Instance inst;
  bool reg_ok = false;
  double jitter_deviation = 0.0;
  double score = 0.0;
};

// Mean over the four coordinates of the population standard deviation of
// decoded boxes, x and w normalized by the pseudo box width, y and h by its
// height.
double jitter_deviation(std::span<const Box> decoded, const Box& pseudo);

// Teacher inference on one image: detections of labeled classes surviving NMS
// with score >= threshold, each checked for regression stability under box
// jitter.
std::vector<PseudoLabel> pseudo_label(const DetectorParams& teacher, const FeatureEncoder& enc,
                                      const ImageRecord& image, const SsodConfig& cfg, Rng& rng);

// teacher = m * teacher + (1 - m) * student.
void ema_update(DetectorParams& teacher, const DetectorParams& student, double momentum);

struct SsodLogRow {
  int step = 0;
  double l_sup = 0.0;
  double l_unsup = 0.0;
  double l_total = 0.0;
  int n_pseudo = 0;
  int n_reg_ok = 0;
};

struct SsodResult {
  DetectorParams student;
  DetectorParams teacher;
  std::vector<SsodLogRow> log;
};

SsodResult ssod_train(const DetectorParams& init, const Dataset& ds, const PseudoDataset& pseudo,
                      const SplitResult& split, const SsodConfig& cfg, std::uint64_t seed,
                      int threads = 1);

void write_ssod_log(std::ostream& os, std::span<const SsodLogRow> rows);

}  // namespace w2n
