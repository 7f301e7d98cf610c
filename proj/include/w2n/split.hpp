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
#include <string>
#include <vector>

#include "w2n/detector.hpp"
#include "w2n/pseudo.hpp"
#include "w2n/world.hpp"

namespace w2n {

enum class SplitMode { kImage, kInstance, kTwoTasks, kIdeal };

const char* to_string(SplitMode mode);
SplitMode parse_split_mode(const std::string& name);

// Mean loss components over the foreground proposals assigned to one key. In
// image mode the key is the image id and `instance` is -1; otherwise the key
// numbers pseudo instances in (image, instance) order.
struct LossRecord {
  int key = 0;
  int image = 0;
  int instance = -1;
  int instance_count = 0;
  double rpn_cls = 0.0;
  double rpn_reg = 0.0;
  double roi_cls = 0.0;
  double roi_reg = 0.0;
  // False when no proposal was assigned; every component is then +inf.
  bool has_foreground = true;

  double total() const { return rpn_cls + rpn_reg + roi_cls + roi_reg; }
  double cls_loss() const { return rpn_cls + roi_cls; }
  double reg_loss() const { return rpn_reg + roi_reg; }
};

// Forward pass only. Ideal mode accumulates per instance.
std::vector<LossRecord> accumulate_losses(const DetectorParams& params, const Dataset& ds,
                                          const PseudoDataset& pseudo, double tau_assign,
                                          SplitMode mode, int threads = 1);

struct LabeledInstance {
  int image = 0;
  int instance = 0;
  std::uint8_t lambda_cls = 1;
  std::uint8_t lambda_reg = 1;
  friend bool operator==(const LabeledInstance&, const LabeledInstance&) = default;
};

struct InstanceRef {
  int image = 0;
  int instance = 0;
  friend bool operator==(const InstanceRef&, const InstanceRef&) = default;
};

struct SplitResult {
  SplitMode mode = SplitMode::kInstance;
  double p = 1.0;
  // Sorted by (image, instance).
  std::vector<LabeledInstance> labeled;
  // Pseudo instances left out of the labeled set.
  std::vector<InstanceRef> excluded;
  std::vector<int> unlabeled_images;

  friend bool operator==(const SplitResult&, const SplitResult&) = default;
};

// max(1, floor(p * n)).
std::size_t top_count(double p, std::size_t n);

// Small-loss split of loss records. Ideal mode is rejected here.
SplitResult split(std::span<const LossRecord> records, SplitMode mode, double p);

// Keeps the pseudo instances overlapping a same-class GT box at IoU > 0.5.
SplitResult ideal_split(const PseudoDataset& pseudo, const Dataset& ds);

// Loss accumulation plus split for any mode.
SplitResult split_dataset(const DetectorParams& params, const Dataset& ds,
                          const PseudoDataset& pseudo, double tau_assign, SplitMode mode,
                          double p, int threads = 1,
                          std::vector<LossRecord>* records_out = nullptr);

// Labeled instances per image with their tags, and the remaining pseudo boxes
// of each image, which become ignore regions.
struct LabeledView {
  std::vector<std::vector<Instance>> labeled;
  std::vector<std::vector<Box>> ignored;
  double labeled_fraction = 0.0;
};

LabeledView apply_split(const PseudoDataset& pseudo, const SplitResult& result);

// Audit table of a split. Ideal splits are audited against instance records.
void write_split_audit(std::ostream& os, std::span<const LossRecord> records,
                       const SplitResult& result);

}  // namespace w2n
