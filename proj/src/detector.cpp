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

#include "w2n/detector.hpp"

#include <array>
#include <cmath>
#include <sstream>

#include "w2n/error.hpp"
#include "w2n/parallel.hpp"

namespace w2n {
namespace {

Eigen::MatrixXd linear(const Eigen::MatrixXd& x, const Eigen::MatrixXd& w) {
  const Eigen::Index d = x.cols();
  Eigen::MatrixXd out = x * w.topRows(d);
  out.rowwise() += w.row(d);
  return out;
}

// Row-wise log-softmax.
Eigen::MatrixXd log_softmax(const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd out(logits.rows(), logits.cols());
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const double m = logits.row(r).maxCoeff();
    const double lse = m + std::log((logits.row(r).array() - m).exp().sum());
    out.row(r) = logits.row(r).array() - lse;
  }
  return out;
}

double smooth_l1_grad(double diff) {
  if (diff > 1.0) return 1.0;
  if (diff < -1.0) return -1.0;
  return diff;
}

void accumulate_weight_grad(Eigen::MatrixXd& gw, const Eigen::MatrixXd& x,
                            const Eigen::MatrixXd& dout) {
  const Eigen::Index d = x.cols();
  gw.topRows(d).noalias() += x.transpose() * dout;
  gw.row(d) += dout.colwise().sum();
}

void check_features(const DetectorParams& params, const Eigen::MatrixXd& features) {
  if (features.cols() != params.feature_dim) {
    std::ostringstream os;
    os << "detector expects feature width " << params.feature_dim << ", got "
       << features.cols();
    fail(ErrorKind::kDimensionMismatch, os.str());
  }
}

struct Logits {
  Eigen::MatrixXd rpn_logp, rpn_delta, roi_logp, roi_delta;
};

Logits compute_logits(const DetectorParams& p, const Eigen::MatrixXd& x) {
  check_features(p, x);
  return Logits{log_softmax(linear(x, p.rpn_cls)), linear(x, p.rpn_reg),
                log_softmax(linear(x, p.roi_cls)), linear(x, p.roi_reg)};
}

std::array<double, 4> delta_array(const BoxDelta& d) { return {d.tx, d.ty, d.tw, d.th}; }

LossBreakdown image_loss(const DetectorParams& params, const ImageSupervision& sup,
                         DetectorParams* grad) {
  LossBreakdown loss;
  const auto& x = *sup.features;
  const auto& boxes = *sup.boxes;
  if (static_cast<std::size_t>(x.rows()) != boxes.size())
    fail(ErrorKind::kDimensionMismatch, "supervision: feature rows do not match boxes");

  int n_fg = 0, n_bg = 0;
  for (const auto& a : sup.assignments) {
    if (a.target == kIgnoredTarget) continue;
    if (a.is_foreground)
      ++n_fg;
    else if (sup.include_background)
      ++n_bg;
  }
  if (n_fg == 0 && n_bg == 0) return loss;

  const Logits lg = compute_logits(params, x);
  const int bg = params.background();
  const Eigen::Index rows = x.rows();
  Eigen::MatrixXd d_rpn_cls, d_rpn_reg, d_roi_cls, d_roi_reg;
  if (grad) {
    d_rpn_cls = Eigen::MatrixXd::Zero(rows, 2);
    d_rpn_reg = Eigen::MatrixXd::Zero(rows, 4);
    d_roi_cls = Eigen::MatrixXd::Zero(rows, params.classes + 1);
    d_roi_reg = Eigen::MatrixXd::Zero(rows, 4 * params.classes);
  }
  const double w_fg = n_fg > 0 ? 1.0 / n_fg : 0.0;
  const double w_bg = n_bg > 0 ? 1.0 / n_bg : 0.0;

  for (const auto& a : sup.assignments) {
    if (a.target == kIgnoredTarget) continue;
    const Eigen::Index r = a.proposal_index;
    if (a.is_foreground) {
      const Instance& t = sup.targets[a.target];
      const double gc = w_fg * t.lambda_cls;
      const double gr = w_fg * t.lambda_reg;
      loss.rpn_cls += gc * -lg.rpn_logp(r, 1);
      loss.roi_cls += gc * -lg.roi_logp(r, t.cls);
      const auto tgt = delta_array(encode(t.box, boxes[r]));
      double sl_rpn = 0.0, sl_roi = 0.0;
      for (int k = 0; k < 4; ++k) {
        const double dr = lg.rpn_delta(r, k) - tgt[k];
        const double dc = lg.roi_delta(r, 4 * t.cls + k) - tgt[k];
        sl_rpn += smooth_l1(dr);
        sl_roi += smooth_l1(dc);
        if (grad) {
          d_rpn_reg(r, k) += gr * smooth_l1_grad(dr);
          d_roi_reg(r, 4 * t.cls + k) += gr * smooth_l1_grad(dc);
        }
      }
      loss.rpn_reg += gr * sl_rpn;
      loss.roi_reg += gr * sl_roi;
      if (grad && gc != 0.0) {
        for (int k = 0; k < 2; ++k)
          d_rpn_cls(r, k) += gc * (std::exp(lg.rpn_logp(r, k)) - (k == 1 ? 1.0 : 0.0));
        for (int k = 0; k <= params.classes; ++k)
          d_roi_cls(r, k) += gc * (std::exp(lg.roi_logp(r, k)) - (k == t.cls ? 1.0 : 0.0));
      }
    } else if (sup.include_background) {
      loss.background += w_bg * (-lg.rpn_logp(r, 0) - lg.roi_logp(r, bg));
      if (grad) {
        for (int k = 0; k < 2; ++k)
          d_rpn_cls(r, k) += w_bg * (std::exp(lg.rpn_logp(r, k)) - (k == 0 ? 1.0 : 0.0));
        for (int k = 0; k <= params.classes; ++k)
          d_roi_cls(r, k) += w_bg * (std::exp(lg.roi_logp(r, k)) - (k == bg ? 1.0 : 0.0));
      }
    }
  }
  if (grad) {
    accumulate_weight_grad(grad->rpn_cls, x, d_rpn_cls);
    accumulate_weight_grad(grad->rpn_reg, x, d_rpn_reg);
    accumulate_weight_grad(grad->roi_cls, x, d_roi_cls);
    accumulate_weight_grad(grad->roi_reg, x, d_roi_reg);
  }
  return loss;
}

}  // namespace

DetectorParams DetectorParams::zeros(int feature_dim, int classes) {
  DetectorParams p;
  p.feature_dim = feature_dim;
  p.classes = classes;
  p.rpn_cls = Eigen::MatrixXd::Zero(feature_dim + 1, 2);
  p.rpn_reg = Eigen::MatrixXd::Zero(feature_dim + 1, 4);
  p.roi_cls = Eigen::MatrixXd::Zero(feature_dim + 1, classes + 1);
  p.roi_reg = Eigen::MatrixXd::Zero(feature_dim + 1, 4 * classes);
  return p;
}

void DetectorParams::axpy(double a, const DetectorParams& o) {
  rpn_cls += a * o.rpn_cls;
  rpn_reg += a * o.rpn_reg;
  roi_cls += a * o.roi_cls;
  roi_reg += a * o.roi_reg;
}

bool DetectorParams::all_finite() const {
  return rpn_cls.allFinite() && rpn_reg.allFinite() && roi_cls.allFinite() &&
         roi_reg.allFinite();
}

bool DetectorParams::same_shape(const DetectorParams& o) const {
  return feature_dim == o.feature_dim && classes == o.classes;
}

bool operator==(const DetectorParams& a, const DetectorParams& b) {
  return a.same_shape(b) && a.rpn_cls == b.rpn_cls && a.rpn_reg == b.rpn_reg &&
         a.roi_cls == b.roi_cls && a.roi_reg == b.roi_reg;
}

HeadOutputs forward(const DetectorParams& params, const Eigen::MatrixXd& features) {
  const Logits lg = compute_logits(params, features);
  return HeadOutputs{lg.rpn_logp.array().exp(), lg.rpn_delta, lg.roi_logp.array().exp(),
                     lg.roi_delta};
}

BoxDelta roi_delta(const HeadOutputs& out, Eigen::Index row, int cls) {
  return BoxDelta{out.roi_delta(row, 4 * cls), out.roi_delta(row, 4 * cls + 1),
                  out.roi_delta(row, 4 * cls + 2), out.roi_delta(row, 4 * cls + 3)};
}

std::vector<Assignment> assign(std::span<const Box> proposals,
                               std::span<const Instance> targets, double tau_assign) {
  if (!(tau_assign > 0.0 && tau_assign < 1.0))
    fail(ErrorKind::kInvalidArgument, "tau_assign must lie in (0,1)");
  std::vector<Assignment> out(proposals.size());
  for (std::size_t i = 0; i < proposals.size(); ++i) {
    out[i].proposal_index = static_cast<int>(i);
    double best = -1.0;
    int best_t = kBackgroundTarget;
    for (std::size_t t = 0; t < targets.size(); ++t) {
      const double v = iou(proposals[i], targets[t].box);
      if (v > best) {
        best = v;
        best_t = static_cast<int>(t);
      }
    }
    if (best_t >= 0 && best >= tau_assign) {
      out[i].target = best_t;
      out[i].is_foreground = true;
    }
  }
  return out;
}

void mark_ignored(std::vector<Assignment>& assignments, std::span<const Box> proposals,
                  std::span<const Box> ignored, double tau_assign) {
  for (auto& a : assignments) {
    if (a.is_foreground) continue;
    for (const Box& b : ignored) {
      if (iou(proposals[a.proposal_index], b) >= tau_assign) {
        a.target = kIgnoredTarget;
        break;
      }
    }
  }
}

LossBreakdown& LossBreakdown::operator+=(const LossBreakdown& o) {
  rpn_cls += o.rpn_cls;
  rpn_reg += o.rpn_reg;
  roi_cls += o.roi_cls;
  roi_reg += o.roi_reg;
  background += o.background;
  return *this;
}

LossBreakdown LossBreakdown::scaled(double s) const {
  return LossBreakdown{rpn_cls * s, rpn_reg * s, roi_cls * s, roi_reg * s, background * s};
}

ImageSupervision make_supervision(const Eigen::MatrixXd& features,
                                  const std::vector<Box>& boxes,
                                  std::vector<Instance> targets, double tau_assign,
                                  bool include_background) {
  ImageSupervision sup;
  sup.features = &features;
  sup.boxes = &boxes;
  sup.assignments = assign(boxes, targets, tau_assign);
  sup.targets = std::move(targets);
  sup.include_background = include_background;
  return sup;
}

double cross_entropy(double prob) { return -std::log(prob); }

double smooth_l1(double diff) {
  const double a = std::abs(diff);
  return a < 1.0 ? 0.5 * a * a : a - 0.5;
}

LossBreakdown loss_and_grad(const DetectorParams& params,
                            std::span<const ImageSupervision> batch, DetectorParams* grad,
                            int threads) {
  LossBreakdown total;
  if (grad) *grad = DetectorParams::zeros(params.feature_dim, params.classes);
  if (batch.empty()) return total;

  std::vector<LossBreakdown> losses(batch.size());
  std::vector<DetectorParams> grads;
  if (grad) grads.assign(batch.size(), DetectorParams::zeros(params.feature_dim, params.classes));
  parallel_for(batch.size(), threads, [&](std::size_t i) {
    losses[i] = image_loss(params, batch[i], grad ? &grads[i] : nullptr);
  });
  // Fixed image order keeps the reduction independent of the thread count.
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    total += losses[i];
    if (grad) grad->axpy(1.0, grads[i]);
  }
  if (grad) {
    grad->rpn_cls *= inv_n;
    grad->rpn_reg *= inv_n;
    grad->roi_cls *= inv_n;
    grad->roi_reg *= inv_n;
  }
  return total.scaled(inv_n);
}

std::vector<ProposalLoss> foreground_losses(const DetectorParams& params,
                                            const ImageSupervision& sup) {
  std::vector<ProposalLoss> out;
  bool any = false;
  for (const auto& a : sup.assignments) any = any || a.is_foreground;
  if (!any) return out;
  const Logits lg = compute_logits(params, *sup.features);
  const auto& boxes = *sup.boxes;
  for (const auto& a : sup.assignments) {
    if (!a.is_foreground) continue;
    const Eigen::Index r = a.proposal_index;
    const Instance& t = sup.targets[a.target];
    ProposalLoss pl;
    pl.proposal_index = a.proposal_index;
    pl.target = a.target;
    pl.rpn_cls = -lg.rpn_logp(r, 1);
    pl.roi_cls = -lg.roi_logp(r, t.cls);
    const auto tgt = delta_array(encode(t.box, boxes[r]));
    for (int k = 0; k < 4; ++k) {
      pl.rpn_reg += smooth_l1(lg.rpn_delta(r, k) - tgt[k]);
      pl.roi_reg += smooth_l1(lg.roi_delta(r, 4 * t.cls + k) - tgt[k]);
    }
    out.push_back(pl);
  }
  return out;
}

void sgd_step(DetectorParams& params, double lr, const DetectorParams& g, double w,
              const DetectorParams& e) {
  params.rpn_cls.array() -= lr * (g.rpn_cls.array() + w * e.rpn_cls.array());
  params.rpn_reg.array() -= lr * (g.rpn_reg.array() + w * e.rpn_reg.array());
  params.roi_cls.array() -= lr * (g.roi_cls.array() + w * e.roi_cls.array());
  params.roi_reg.array() -= lr * (g.roi_reg.array() + w * e.roi_reg.array());
}

TrainResult train(DetectorParams params, std::span<const ImageSupervision> primary,
                  std::span<const ImageSupervision> regularization,
                  const TrainOptions& options) {
  if (!(options.lr > 0.0)) fail(ErrorKind::kInvalidArgument, "train: lr must be > 0");
  TrainResult result;
  result.loss_history.reserve(options.steps);
  DetectorParams g, g_re = DetectorParams::zeros(params.feature_dim, params.classes);
  for (int step = 0; step < options.steps; ++step) {
    const LossBreakdown lp = loss_and_grad(params, primary, &g, options.threads);
    LossBreakdown l_re;
    if (!regularization.empty())
      l_re = loss_and_grad(params, regularization, &g_re, options.threads);
    const double total = lp.total() + options.lambda_re * l_re.total();
    if (!std::isfinite(total)) {
      std::ostringstream os;
      os << "train: loss diverged at step " << step;
      fail(ErrorKind::kDivergence, os.str());
    }
    result.loss_history.push_back(total);
    sgd_step(params, options.lr, g, options.lambda_re, g_re);
  }
  result.params = std::move(params);
  return result;
}

std::vector<Detection> detect_all(const DetectorParams& params,
                                  const Eigen::MatrixXd& features,
                                  std::span<const Box> boxes, double min_score) {
  const HeadOutputs out = forward(params, features);
  std::vector<Detection> dets;
  for (Eigen::Index r = 0; r < features.rows(); ++r) {
    for (int c = 0; c < params.classes; ++c) {
      const double s = out.roi_prob(r, c);
      if (s < min_score) continue;
      dets.push_back(Detection{decode(roi_delta(out, r, c), boxes[r]), c, s});
    }
  }
  return dets;
}

}  // namespace w2n
