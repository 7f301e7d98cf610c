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

#include "w2n/ssod.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <sstream>

#include "w2n/error.hpp"
#include "w2n/log.hpp"
#include "w2n/parallel.hpp"

namespace w2n {
namespace {

bool in_unit(double v) { return v > 0.0 && v < 1.0; }

// Draws `k` distinct indices from [0, n) in ascending order, or all of them.
std::vector<std::size_t> sample_batch(std::size_t n, int k, Rng& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (k <= 0 || static_cast<std::size_t>(k) >= n) return idx;
  for (std::size_t i = 0; i < static_cast<std::size_t>(k); ++i) {
    const auto j = i + static_cast<std::size_t>(
                           rng.uniform_int(0, static_cast<int>(n - i) - 1));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace

void validate(const SsodConfig& cfg) {
  if (cfg.lambda_u < 0.0) fail(ErrorKind::kInvalidArgument, "ssod.lambda_u must be >= 0");
  if (!(cfg.teacher_momentum >= 0.0 && cfg.teacher_momentum <= 1.0))
    fail(ErrorKind::kInvalidArgument, "ssod.teacher_momentum must lie in [0,1]");
  if (!in_unit(cfg.pseudo_score_threshold))
    fail(ErrorKind::kInvalidArgument, "ssod.pseudo_score_threshold must lie in (0,1)");
  if (!in_unit(cfg.jitter_variance_threshold))
    fail(ErrorKind::kInvalidArgument, "ssod.jitter_variance_threshold must lie in (0,1)");
  if (!in_unit(cfg.tau_assign))
    fail(ErrorKind::kInvalidArgument, "ssod.tau_assign must lie in (0,1)");
  if (cfg.jitter_samples < 2) fail(ErrorKind::kInvalidArgument, "ssod.jitter_samples must be >= 2");
  if (cfg.steps < 0) fail(ErrorKind::kInvalidArgument, "ssod.steps must be >= 0");
  if (!(cfg.lr > 0.0)) fail(ErrorKind::kInvalidArgument, "ssod.lr must be > 0");
  if (cfg.labeled_batch < 0 || cfg.unlabeled_batch < 0)
    fail(ErrorKind::kInvalidArgument, "ssod batch sizes must be >= 0");
  if (cfg.strong_noise < 0.0 || cfg.jitter_shift < 0.0)
    fail(ErrorKind::kInvalidArgument, "ssod noise and jitter bounds must be >= 0");
  if (!(cfg.jitter_scale_lo > 0.0 && cfg.jitter_scale_lo <= cfg.jitter_scale_hi))
    fail(ErrorKind::kInvalidArgument, "ssod jitter scale range is empty");
  if (!in_unit(cfg.pseudo_nms)) fail(ErrorKind::kInvalidArgument, "ssod.pseudo_nms must lie in (0,1)");
}

std::vector<ImageSupervision> labeled_supervision(const Dataset& ds, const LabeledView& view,
                                                  double tau_assign) {
  std::vector<ImageSupervision> out;
  for (std::size_t i = 0; i < view.labeled.size(); ++i) {
    if (view.labeled[i].empty()) continue;
    for (const auto& inst : view.labeled[i])
      if (!tags_valid(inst))
        fail(ErrorKind::kInvalidArgument, "labeled instance with lambda_cls + lambda_reg < 1");
    const auto& rec = ds.images[i];
    ImageSupervision sup = make_supervision(rec.proposals.features, rec.proposals.boxes,
                                            view.labeled[i], tau_assign, true);
    mark_ignored(sup.assignments, rec.proposals.boxes, view.ignored[i], tau_assign);
    out.push_back(std::move(sup));
  }
  return out;
}

LossBreakdown supervised_loss(const DetectorParams& student,
                              std::span<const ImageSupervision> labeled, DetectorParams* grad,
                              int threads) {
  if (labeled.empty()) log_warning("ssod: no labeled images, supervised loss is zero");
  return loss_and_grad(student, labeled, grad, threads);
}

double jitter_deviation(std::span<const Box> decoded, const Box& pseudo) {
  if (decoded.empty()) return 0.0;
  const double n = static_cast<double>(decoded.size());
  double mean[4] = {0, 0, 0, 0};
  for (const auto& b : decoded) {
    mean[0] += b.x;
    mean[1] += b.y;
    mean[2] += b.w;
    mean[3] += b.h;
  }
  for (double& m : mean) m /= n;
  double var[4] = {0, 0, 0, 0};
  for (const auto& b : decoded) {
    const double v[4] = {b.x, b.y, b.w, b.h};
    for (int k = 0; k < 4; ++k) var[k] += (v[k] - mean[k]) * (v[k] - mean[k]);
  }
  const double scale[4] = {pseudo.w, pseudo.h, pseudo.w, pseudo.h};
  double dev = 0.0;
  for (int k = 0; k < 4; ++k) dev += std::sqrt(var[k] / n) / scale[k];
  return dev / 4.0;
}

std::vector<PseudoLabel> pseudo_label(const DetectorParams& teacher, const FeatureEncoder& enc,
                                      const ImageRecord& image, const SsodConfig& cfg, Rng& rng) {
  const auto& label = image.scene.image_label;
  std::vector<Detection> dets;
  for (const auto& d : detect_all(teacher, image.proposals.features, image.proposals.boxes,
                                  cfg.pseudo_score_threshold)) {
    if (d.cls < static_cast<int>(label.size()) && label[d.cls] && is_valid(d.box))
      dets.push_back(d);
  }
  std::vector<PseudoLabel> out;
  if (dets.empty()) return out;
  const auto kept = nms(dets, cfg.pseudo_nms);
  std::vector<Box> decoded(cfg.jitter_samples);
  Eigen::MatrixXd feats(cfg.jitter_samples, enc.dim());
  std::vector<Box> jittered(cfg.jitter_samples);
  for (const auto& d : kept) {
    for (int s = 0; s < cfg.jitter_samples; ++s) {
      jittered[s] = apply_transform(
          d.box, sample_transform(cfg.jitter_shift, cfg.jitter_scale_lo, cfg.jitter_scale_hi, rng));
      feats.row(s) = enc.describe(image.scene, jittered[s], rng).transpose();
    }
    const HeadOutputs outp = forward(teacher, feats);
    for (int s = 0; s < cfg.jitter_samples; ++s)
      decoded[s] = decode(roi_delta(outp, s, d.cls), jittered[s]);
    PseudoLabel pl;
    pl.jitter_deviation = jitter_deviation(decoded, d.box);
    pl.reg_ok = pl.jitter_deviation < cfg.jitter_variance_threshold;
    pl.inst = Instance{d.box, d.cls, 1, static_cast<std::uint8_t>(pl.reg_ok ? 1 : 0)};
    pl.score = d.score;
    out.push_back(pl);
  }
  return out;
}

void ema_update(DetectorParams& teacher, const DetectorParams& student, double m) {
  if (!teacher.same_shape(student))
    fail(ErrorKind::kDimensionMismatch, "ema_update: teacher and student shapes differ");
  const double r = 1.0 - m;
  teacher.rpn_cls = (m * teacher.rpn_cls.array() + r * student.rpn_cls.array()).matrix();
  teacher.rpn_reg = (m * teacher.rpn_reg.array() + r * student.rpn_reg.array()).matrix();
  teacher.roi_cls = (m * teacher.roi_cls.array() + r * student.roi_cls.array()).matrix();
  teacher.roi_reg = (m * teacher.roi_reg.array() + r * student.roi_reg.array()).matrix();
}

SsodResult ssod_train(const DetectorParams& init, const Dataset& ds, const PseudoDataset& pseudo,
                      const SplitResult& split, const SsodConfig& cfg, std::uint64_t seed,
                      int threads) {
  validate(cfg);
  if (pseudo.images.size() != ds.images.size())
    fail(ErrorKind::kInvalidArgument, "ssod: pseudo labels do not match the dataset");
  const FeatureEncoder enc = ds.encoder();
  const LabeledView view = apply_split(pseudo, split);
  const auto labeled = labeled_supervision(ds, view, cfg.tau_assign);
  std::vector<std::size_t> pool;
  for (int i : split.unlabeled_images)
    if (i >= 0 && static_cast<std::size_t>(i) < ds.images.size()) pool.push_back(i);

  SsodResult res;
  res.student = init;
  res.teacher = init;
  const bool use_unsup = cfg.lambda_u > 0.0 && !pool.empty();
  DetectorParams g_sup, g_unsup = DetectorParams::zeros(init.feature_dim, init.classes);

  for (int step = 0; step < cfg.steps; ++step) {
    Rng batch_rng = derive_rng(seed, {kStreamSsodBatch, static_cast<std::uint64_t>(step)});
    const auto lab_idx = sample_batch(labeled.size(), cfg.labeled_batch, batch_rng);
    std::vector<ImageSupervision> lab_batch;
    lab_batch.reserve(lab_idx.size());
    for (auto i : lab_idx) lab_batch.push_back(labeled[i]);
    const LossBreakdown ls = supervised_loss(res.student, lab_batch, &g_sup, threads);

    SsodLogRow row;
    row.step = step;
    row.l_sup = ls.total();
    if (use_unsup) {
      const auto un_idx = sample_batch(pool.size(), cfg.unlabeled_batch, batch_rng);
      std::vector<Eigen::MatrixXd> strong(un_idx.size());
      std::vector<ImageSupervision> un_batch(un_idx.size());
      std::vector<std::vector<PseudoLabel>> labels(un_idx.size());
      parallel_for(un_idx.size(), threads, [&](std::size_t b) {
        const std::size_t i = pool[un_idx[b]];
        const auto& rec = ds.images[i];
        Rng rng = derive_rng(seed, {kStreamSsod, static_cast<std::uint64_t>(step), i});
        labels[b] = pseudo_label(res.teacher, enc, rec, cfg, rng);
        strong[b] = rec.proposals.features;
        for (Eigen::Index r = 0; r < strong[b].rows(); ++r)
          for (Eigen::Index c = 0; c < strong[b].cols(); ++c)
            strong[b](r, c) += rng.uniform(-cfg.strong_noise, cfg.strong_noise);
        std::vector<Instance> targets;
        targets.reserve(labels[b].size());
        for (const auto& pl : labels[b]) targets.push_back(pl.inst);
        un_batch[b] = make_supervision(strong[b], rec.proposals.boxes, std::move(targets),
                                       cfg.tau_assign, true);
      });
      for (const auto& v : labels) {
        row.n_pseudo += static_cast<int>(v.size());
        for (const auto& pl : v) row.n_reg_ok += pl.reg_ok ? 1 : 0;
      }
      row.l_unsup = loss_and_grad(res.student, un_batch, &g_unsup, threads).total();
    }
    row.l_total = row.l_sup + cfg.lambda_u * row.l_unsup;
    if (!std::isfinite(row.l_total)) {
      std::ostringstream os;
      os << "ssod: loss diverged at step " << step;
      fail(ErrorKind::kDivergence, os.str());
    }
    sgd_step(res.student, cfg.lr, g_sup, cfg.lambda_u, g_unsup);
    ema_update(res.teacher, res.student, cfg.teacher_momentum);
    res.log.push_back(row);
  }
  return res;
}

void write_ssod_log(std::ostream& os, std::span<const SsodLogRow> rows) {
  os << "step,l_sup,l_unsup,l_total,n_pseudo,n_reg_ok\n";
  auto old = os.precision(17);
  for (const auto& r : rows)
    os << r.step << ',' << r.l_sup << ',' << r.l_unsup << ',' << r.l_total << ',' << r.n_pseudo
       << ',' << r.n_reg_ok << '\n';
  os.precision(old);
}

}  // namespace w2n
