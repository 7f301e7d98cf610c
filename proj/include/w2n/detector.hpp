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

#include <Eigen/Core>

#include "w2n/geometry.hpp"
#include "w2n/instance.hpp"

namespace w2n {

// Weights of the two linear heads over proposal features. Each matrix has one
// row per feature plus a trailing bias row. The detection head's class
// `classes` is background.
struct DetectorParams {
  int feature_dim = 0;
  int classes = 0;
  Eigen::MatrixXd rpn_cls;  // (D+1) x 2, column 1 is objectness
  Eigen::MatrixXd rpn_reg;  // (D+1) x 4
  Eigen::MatrixXd roi_cls;  // (D+1) x (C+1)
  Eigen::MatrixXd roi_reg;  // (D+1) x 4C, class c owns columns [4c, 4c+4)

  static DetectorParams zeros(int feature_dim, int classes);

  int background() const { return classes; }
  // this += a * other
  void axpy(double a, const DetectorParams& other);
  bool all_finite() const;
  bool same_shape(const DetectorParams& other) const;

  friend bool operator==(const DetectorParams& a, const DetectorParams& b);
};

struct HeadOutputs {
  Eigen::MatrixXd rpn_prob;   // P x 2
  Eigen::MatrixXd rpn_delta;  // P x 4
  Eigen::MatrixXd roi_prob;   // P x (C+1)
  Eigen::MatrixXd roi_delta;  // P x 4C
};

HeadOutputs forward(const DetectorParams& params, const Eigen::MatrixXd& features);

BoxDelta roi_delta(const HeadOutputs& out, Eigen::Index row, int cls);

inline constexpr int kBackgroundTarget = -1;
inline constexpr int kIgnoredTarget = -2;

struct Assignment {
  int proposal_index = 0;
  int target = kBackgroundTarget;
  bool is_foreground = false;
};

// Max-IoU assignment; IoU >= tau_assign is foreground, ties go to the lower
// target index.
std::vector<Assignment> assign(std::span<const Box> proposals,
                               std::span<const Instance> targets, double tau_assign);

// Background proposals overlapping an ignored box at >= tau_assign are marked
// kIgnoredTarget and drop out of every loss term.
void mark_ignored(std::vector<Assignment>& assignments, std::span<const Box> proposals,
                  std::span<const Box> ignored, double tau_assign);

struct LossBreakdown {
  double rpn_cls = 0.0;
  double rpn_reg = 0.0;
  double roi_cls = 0.0;
  double roi_reg = 0.0;
  double background = 0.0;

  double total() const { return rpn_cls + rpn_reg + roi_cls + roi_reg + background; }
  LossBreakdown& operator+=(const LossBreakdown& o);
  LossBreakdown scaled(double s) const;
};

// Supervision for one image: proposal features plus targets and assignments.
struct ImageSupervision {
  const Eigen::MatrixXd* features = nullptr;
  const std::vector<Box>* boxes = nullptr;
  std::vector<Instance> targets;
  std::vector<Assignment> assignments;
  bool include_background = true;
};

ImageSupervision make_supervision(const Eigen::MatrixXd& features,
                                  const std::vector<Box>& boxes,
                                  std::vector<Instance> targets, double tau_assign,
                                  bool include_background = true);

double cross_entropy(double prob);
double smooth_l1(double diff);

// Per-image loss: mean over foreground proposals of the tag-gated
// classification and regression terms of both heads, plus the mean background
// cross-entropy of both heads. The batch loss is the mean over images.
// `grad`, when given, receives the exact gradient (same shape as params).
LossBreakdown loss_and_grad(const DetectorParams& params,
                            std::span<const ImageSupervision> batch,
                            DetectorParams* grad, int threads = 1);

// Ungated loss components of one foreground proposal against its target.
struct ProposalLoss {
  int proposal_index = 0;
  int target = 0;
  double rpn_cls = 0.0;
  double rpn_reg = 0.0;
  double roi_cls = 0.0;
  double roi_reg = 0.0;
};

std::vector<ProposalLoss> foreground_losses(const DetectorParams& params,
                                            const ImageSupervision& sup);

struct TrainOptions {
  int steps = 300;
  double lr = 0.5;
  double lambda_re = 0.0;
  int threads = 1;
};

struct TrainResult {
  DetectorParams params;
  std::vector<double> loss_history;
};

// Full-batch gradient descent on primary + lambda_re * regularization loss.
// Throws kDivergence naming the step when the loss stops being finite.
TrainResult train(DetectorParams params, std::span<const ImageSupervision> primary,
                  std::span<const ImageSupervision> regularization,
                  const TrainOptions& options);

// One SGD step shared by every trainer: params -= lr * (g + weight * g_extra).
void sgd_step(DetectorParams& params, double lr, const DetectorParams& grad,
              double extra_weight, const DetectorParams& extra_grad);

// Dense inference: every (proposal, class) pair with its softmax score and the
// class-specific decoded box, filtered by min_score.
std::vector<Detection> detect_all(const DetectorParams& params,
                                  const Eigen::MatrixXd& features,
                                  std::span<const Box> boxes, double min_score);

}  // namespace w2n
