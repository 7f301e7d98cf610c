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
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "w2n/geometry.hpp"
#include "w2n/rng.hpp"

namespace w2n {

struct WorldConfig {
  int num_images = 120;
  int classes = 10;
  int min_objects = 1;
  int max_objects = 3;
  double canvas_width = 100.0;
  double canvas_height = 100.0;
  double min_object_size = 24.0;
  double max_object_size = 40.0;
  // Pairwise IoU bound between objects of one scene.
  double max_object_overlap = 0.2;
  // A part scales both object sides by this factor.
  double part_fraction = 0.4;
  std::vector<int> part_classes = {0, 1};
  // Probability that an object of a part class carries a discriminative part.
  double part_presence = 0.6;
  int proposals_per_image = 48;
  double object_proposal_fraction = 0.35;
  double part_proposal_fraction = 0.2;
  // 0 selects the encoder's base width; larger values append distractor dims.
  int feature_dim = 0;
  double feature_noise = 0.02;
  // Magnitudes of the object-delta and part-delta feature blocks.
  double object_evidence_scale = 3.0;
  double part_evidence_scale = 0.7;
  std::uint64_t seed = 7;
};

void validate(const WorldConfig& cfg);

struct SceneObject {
  Box box;
  int cls = 0;

  friend bool operator==(const SceneObject&, const SceneObject&) = default;
};

struct GroundTruthScene {
  std::vector<SceneObject> objects;
  // parts[k] is the discriminative part of objects[k], if it has one.
  std::vector<std::optional<Box>> parts;
  std::vector<int> image_label;
};

struct ProposalSet {
  std::vector<Box> boxes;
  Eigen::MatrixXd features;  // one row per proposal
};

// Maps a box in a scene to its feature vector. The vector concatenates, per
// class, soft overlap statistics with object bodies and with parts, then
// gated box deltas toward the best-overlapping object body and part, then
// normalized geometry, then distractor dims.
class FeatureEncoder {
 public:
  FeatureEncoder() = default;
  explicit FeatureEncoder(const WorldConfig& cfg);

  static int base_dim(int classes);

  int dim() const { return dim_; }
  int classes() const { return classes_; }

  // Noise-free part of the encoding.
  Eigen::VectorXd describe_clean(const GroundTruthScene& scene, const Box& box) const;

  // Clean encoding plus bounded uniform noise drawn from `rng`.
  Eigen::VectorXd describe(const GroundTruthScene& scene, const Box& box, Rng& rng) const;

  Eigen::MatrixXd describe_all(const GroundTruthScene& scene,
                               const std::vector<Box>& boxes, Rng& rng) const;

 private:
  int classes_ = 0;
  int dim_ = 0;
  double canvas_w_ = 1.0;
  double canvas_h_ = 1.0;
  double ref_size_ = 1.0;
  double noise_ = 0.0;
  double object_scale_ = 0.0;
  double part_scale_ = 0.0;
};

struct ImageRecord {
  int id = 0;
  GroundTruthScene scene;
  ProposalSet proposals;
};

struct Dataset {
  WorldConfig config;
  std::vector<ImageRecord> images;

  FeatureEncoder encoder() const { return FeatureEncoder(config); }
  int classes() const { return config.classes; }
};

// Builds a dataset; each image draws from its own stream derived from
// (seed, image index), so generation is parallel-safe.
Dataset generate_world(const WorldConfig& cfg, int threads = 1);

GroundTruthScene generate_scene(const WorldConfig& cfg, Rng& rng);
std::vector<Box> generate_proposals(const WorldConfig& cfg,
                                    const GroundTruthScene& scene, Rng& rng);

// Failure modes of the simulated weakly supervised detector. Objects carrying
// a part emit the part with probability part_rate; the remaining mass (and all
// objects without parts) splits into mislabel, drop and accurate outcomes.
struct NoiseModel {
  double part_rate = 1.0;
  double mislabel_rate = 0.1;
  double drop_rate = 0.05;
  // Expected number of background false positives per image.
  double fp_rate = 0.6;
  double accurate_score_lo = 0.6, accurate_score_hi = 1.0;
  double part_score_lo = 0.6, part_score_hi = 1.0;
  double mislabel_score_lo = 0.4, mislabel_score_hi = 0.9;
  double fp_score_lo = 0.05, fp_score_hi = 0.5;
};

void validate(const NoiseModel& noise);

enum class NoiseOutcome { kAccurate, kPart, kMislabel, kDropped, kFalsePositive };

struct WsodPrediction {
  Detection det;
  int source_object = -1;  // -1 for background false positives
  NoiseOutcome outcome = NoiseOutcome::kAccurate;
};

std::vector<WsodPrediction> corrupt_to_wsod_output_traced(
    const GroundTruthScene& scene, const ProposalSet& proposals,
    const NoiseModel& noise, Rng& rng);

std::vector<Detection> corrupt_to_wsod_output(const GroundTruthScene& scene,
                                              const ProposalSet& proposals,
                                              const NoiseModel& noise, Rng& rng);

}  // namespace w2n
