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
#include "w2n/la.hpp"
#include "w2n/labelgen.hpp"
#include "w2n/pseudo.hpp"
#include "w2n/split.hpp"
#include "w2n/ssod.hpp"
#include "w2n/world.hpp"

namespace w2n {

struct RunConfig {
  WorldConfig world;
  NoiseModel noise;
  PgeConfig pge;
  LaConfig la;
  SplitMode split_mode = SplitMode::kTwoTasks;
  double p = 0.6;
  SsodConfig ssod;
  int T = 2;
  std::uint64_t seed = 7;
  int test_images = 100;
  double eval_nms = 0.3;
  int curve_interval = 10;
  int curve_samples = 30;
};

void validate(const RunConfig& cfg);

struct IterationReport {
  int t = 0;
  double mean_iou = 0.0;
  double map = 0.0;
  double corloc = 0.0;
  double labeled_fraction = 0.0;
  friend bool operator==(const IterationReport&, const IterationReport&) = default;
};

// Artifacts of one pass of the loop.
struct IterationArtifacts {
  PseudoDataset refined;
  SplitResult split;
  std::vector<LossRecord> records;
  std::vector<SsodLogRow> ssod_log;
};

struct RunResult {
  std::vector<IterationReport> reports;
  // pseudo[t] holds the labels evaluated in reports[t].
  std::vector<PseudoDataset> pseudo;
  // params[t - 1] is the detector evaluated in reports[t], t >= 1.
  std::vector<DetectorParams> params;
  std::vector<IterationArtifacts> iterations;
  DetectorParams final_params;
};

// The held-out world used for toy mAP.
WorldConfig test_world_config(const RunConfig& cfg);

// Simulated weakly supervised detector output on every image of a dataset.
std::vector<std::vector<Detection>> simulate_wsod(const Dataset& ds, const NoiseModel& noise,
                                                  std::uint64_t seed, std::uint64_t split_tag,
                                                  int threads = 1);

PseudoDataset initial_pseudo_labels(const Dataset& ds, const RunConfig& cfg, int threads = 1);

// Per-image detections of a trained detector after per-class NMS.
std::vector<std::vector<Detection>> detect_dataset(const DetectorParams& params,
                                                   const Dataset& ds, double eval_nms,
                                                   int threads = 1);

// VOC all-points AP at IoU 0.5, averaged over classes with ground truth.
double toy_map(std::span<const std::vector<Detection>> dets,
               std::span<const GroundTruthScene> gt, int classes);
double toy_map(std::span<const std::vector<Detection>> dets, const Dataset& ds);

// Fraction of (image, present class) pairs whose top detection of that class
// overlaps a same-class GT box at IoU >= 0.5.
double corloc(std::span<const std::vector<Detection>> dets, const Dataset& ds);

IterationReport evaluate(const DetectorParams& params, const Dataset& train, const Dataset& test,
                         const PseudoDataset& pseudo, double eval_nms, double labeled_fraction,
                         int t, int threads = 1);

RunResult run(const RunConfig& cfg, int threads = 1);

void write_report_csv(std::ostream& os, std::span<const IterationReport> reports);
void write_report_summary(std::ostream& os, std::span<const IterationReport> reports,
                          const RunConfig& cfg);

}  // namespace w2n
