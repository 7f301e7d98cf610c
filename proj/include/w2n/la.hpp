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
#include "w2n/labelgen.hpp"
#include "w2n/pseudo.hpp"
#include "w2n/world.hpp"

namespace w2n {

struct LaConfig {
  double tau_score = 0.1;
  double tau_assign = 0.5;
  double lambda_re = 0.1;
  double alpha = 0.05;
  double beta = 0.8;
  int steps = 1200;
  double lr = 1.5;
};

void validate(const LaConfig& cfg);

// Moving-average regression target attached to one pseudo instance.
struct RegTarget {
  int instance_id = 0;
  Box ema_box;
  bool initialized = false;
};

using RegTargets = std::vector<std::vector<RegTarget>>;

RegTargets init_reg_targets(const PseudoDataset& pseudo);

struct AcceptEvent {
  int step = 0;
  int image = 0;
  int instance = 0;
  Box decoded;
  double score = 0.0;
  double iou_to_pseudo = 0.0;
};

// Outer-box probe for one pseudo instance: the sampled outer box, its decoded
// regression for the instance class, and that class's score.
struct OuterProbe {
  Box outer;
  Box decoded;
  double score = 0.0;
};

OuterProbe probe_outer_box(const DetectorParams& params, const FeatureEncoder& enc,
                           const GroundTruthScene& scene, const Instance& inst, double alpha,
                           Rng& rng);

// True when a decoded box may update the moving-average target: the class score
// exceeds tau_score and the box has moved away from its pseudo box
// (IoU < tau_assign).
bool accept_decoded(const OuterProbe& probe, const Instance& inst, const LaConfig& cfg);

// Samples one outer box per pseudo instance of an image and folds accepted
// decoded boxes into the targets. Rejected samples leave a target unchanged.
void update_reg_targets(const DetectorParams& params, const FeatureEncoder& enc,
                        const ImageRecord& image, std::span<const Instance> instances,
                        std::vector<RegTarget>& targets, const LaConfig& cfg, Rng& rng,
                        int step, std::vector<AcceptEvent>* events);

// Regularization supervision for one image: initialized targets with the
// class of their instance, foreground terms only.
ImageSupervision reg_supervision(const ImageRecord& image, std::span<const Instance> instances,
                                 std::span<const RegTarget> targets, double tau_assign);

struct LaTrace {
  std::vector<AcceptEvent> accepted;
  std::vector<double> loss_history;
};

// One iteration over the whole dataset: target updates for every image, then a
// gradient step on L_primary + lambda_re * L_reg.
LossBreakdown la_step(DetectorParams& params, const Dataset& ds, const PseudoDataset& pseudo,
                      std::span<const ImageSupervision> primary, RegTargets& targets,
                      const LaConfig& cfg, std::uint64_t seed, int step, int threads,
                      LaTrace* trace);

struct TrackedBox {
  int image = 0;
  int cls = 0;
  Box pseudo;
  Box gt;
};

// Pseudo instances suffering from the part problem (IoU >= 0.5 with a
// same-class discriminative part), paired with that part's object. When no
// instance qualifies, every pseudo instance with a same-class overlapping
// object is tracked against its best object.
std::vector<TrackedBox> select_tracked_boxes(const Dataset& ds, const PseudoDataset& pseudo);

struct CurveRow {
  int iter = 0;
  double iou_gt = 0.0;
  double iou_pgt = 0.0;
  bool regularized = false;
};

struct CurveOptions {
  int interval = 10;
  int samples = 30;
};

struct LaResult {
  DetectorParams params;
  RegTargets targets;
  LaTrace trace;
  std::vector<CurveRow> curve;
};

// Trains a fresh detector on the pseudo labels with outer-box regularization.
LaResult la_train(const Dataset& ds, const PseudoDataset& pseudo, const LaConfig& cfg,
                  std::uint64_t seed, int threads, const CurveOptions* curve = nullptr,
                  bool record_events = false);

// Detector inference on every training image followed by excavation.
PseudoDataset refine_labels(const DetectorParams& params, const Dataset& ds,
                            const PgeConfig& pge, int threads);

// Paired runs with and without the regularization loss. Rows of the
// unregularized run come first.
std::vector<CurveRow> emit_iou_curves(const Dataset& ds, const PseudoDataset& pseudo,
                                      const LaConfig& cfg, std::uint64_t seed, int threads,
                                      const CurveOptions& options);

void write_curve_csv(std::ostream& os, std::span<const CurveRow> rows);

}  // namespace w2n
