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

#include "w2n/la.hpp"

#include <cmath>
#include <ostream>
#include <sstream>

#include "w2n/error.hpp"
#include "w2n/parallel.hpp"

namespace w2n {
namespace {

std::vector<ImageSupervision> primary_supervision(const Dataset& ds, const PseudoDataset& pseudo,
                                                  double tau_assign) {
  std::vector<ImageSupervision> sup;
  sup.reserve(ds.images.size());
  for (std::size_t i = 0; i < ds.images.size(); ++i) {
    const auto& rec = ds.images[i];
    sup.push_back(make_supervision(rec.proposals.features, rec.proposals.boxes,
                                   pseudo.images[i], tau_assign, true));
  }
  return sup;
}

CurveRow probe_curve(const DetectorParams& params, const Dataset& ds,
                     std::span<const TrackedBox> tracked, const LaConfig& cfg,
                     std::uint64_t seed, int iter, int samples, bool regularized) {
  const FeatureEncoder enc = ds.encoder();
  Rng rng = derive_rng(seed, {kStreamCurve, static_cast<std::uint64_t>(iter)});
  double sum_gt = 0.0, sum_pgt = 0.0;
  std::size_t n = 0;
  for (const auto& t : tracked) {
    const Instance inst{t.pseudo, t.cls, 1, 1};
    for (int s = 0; s < samples; ++s) {
      const OuterProbe p =
          probe_outer_box(params, enc, ds.images[t.image].scene, inst, cfg.alpha, rng);
      sum_gt += iou(p.decoded, t.gt);
      sum_pgt += iou(p.decoded, t.pseudo);
      ++n;
    }
  }
  CurveRow row;
  row.iter = iter;
  row.regularized = regularized;
  row.iou_gt = n ? sum_gt / static_cast<double>(n) : 0.0;
  row.iou_pgt = n ? sum_pgt / static_cast<double>(n) : 0.0;
  return row;
}

}  // namespace

void validate(const LaConfig& cfg) {
  auto unit = [](double v) { return v > 0.0 && v < 1.0; };
  if (!unit(cfg.tau_score) || !unit(cfg.tau_assign))
    fail(ErrorKind::kInvalidArgument, "la.tau_score and la.tau_assign must lie in (0,1)");
  if (cfg.lambda_re < 0.0) fail(ErrorKind::kInvalidArgument, "la.lambda_re must be >= 0");
  if (cfg.alpha < 0.0) fail(ErrorKind::kInvalidArgument, "la.alpha must be >= 0");
  if (cfg.beta < 0.0 || cfg.beta > 1.0)
    fail(ErrorKind::kInvalidArgument, "la.beta must lie in [0,1]");
  if (cfg.steps < 0) fail(ErrorKind::kInvalidArgument, "la.steps must be >= 0");
  if (!(cfg.lr > 0.0)) fail(ErrorKind::kInvalidArgument, "la.lr must be > 0");
}

RegTargets init_reg_targets(const PseudoDataset& pseudo) {
  RegTargets targets(pseudo.images.size());
  for (std::size_t i = 0; i < pseudo.images.size(); ++i) {
    targets[i].resize(pseudo.images[i].size());
    for (std::size_t k = 0; k < targets[i].size(); ++k) {
      targets[i][k].instance_id = static_cast<int>(k);
      targets[i][k].ema_box = pseudo.images[i][k].box;
    }
  }
  return targets;
}

OuterProbe probe_outer_box(const DetectorParams& params, const FeatureEncoder& enc,
                           const GroundTruthScene& scene, const Instance& inst, double alpha,
                           Rng& rng) {
  OuterProbe p;
  p.outer = sample_outer_box(inst.box, alpha, rng).result;
  const Eigen::MatrixXd feat = enc.describe(scene, p.outer, rng).transpose();
  const HeadOutputs out = forward(params, feat);
  p.score = out.roi_prob(0, inst.cls);
  p.decoded = decode(roi_delta(out, 0, inst.cls), p.outer);
  return p;
}

bool accept_decoded(const OuterProbe& probe, const Instance& inst, const LaConfig& cfg) {
  return probe.score > cfg.tau_score && iou(probe.decoded, inst.box) < cfg.tau_assign;
}

void update_reg_targets(const DetectorParams& params, const FeatureEncoder& enc,
                        const ImageRecord& image, std::span<const Instance> instances,
                        std::vector<RegTarget>& targets, const LaConfig& cfg, Rng& rng,
                        int step, std::vector<AcceptEvent>* events) {
  for (std::size_t k = 0; k < instances.size(); ++k) {
    const OuterProbe p = probe_outer_box(params, enc, image.scene, instances[k], cfg.alpha, rng);
    if (!accept_decoded(p, instances[k], cfg)) continue;
    RegTarget& t = targets[k];
    t.ema_box = t.initialized ? box_ema(t.ema_box, p.decoded, cfg.beta) : p.decoded;
    t.initialized = true;
    if (events) {
      events->push_back(AcceptEvent{step, image.id, static_cast<int>(k), p.decoded, p.score,
                                    iou(p.decoded, instances[k].box)});
    }
  }
}

ImageSupervision reg_supervision(const ImageRecord& image, std::span<const Instance> instances,
                                 std::span<const RegTarget> targets, double tau_assign) {
  std::vector<Instance> reg;
  for (std::size_t k = 0; k < targets.size(); ++k)
    if (targets[k].initialized) reg.push_back(Instance{targets[k].ema_box, instances[k].cls, 1, 1});
  return make_supervision(image.proposals.features, image.proposals.boxes, std::move(reg),
                          tau_assign, false);
}

LossBreakdown la_step(DetectorParams& params, const Dataset& ds, const PseudoDataset& pseudo,
                      std::span<const ImageSupervision> primary, RegTargets& targets,
                      const LaConfig& cfg, std::uint64_t seed, int step, int threads,
                      LaTrace* trace) {
  const FeatureEncoder enc = ds.encoder();
  const std::size_t n = ds.images.size();
  std::vector<std::vector<AcceptEvent>> events(trace ? n : 0);
  std::vector<ImageSupervision> reg(n);
  parallel_for(n, threads, [&](std::size_t i) {
    Rng rng = derive_rng(seed, {kStreamLa, static_cast<std::uint64_t>(step), i});
    update_reg_targets(params, enc, ds.images[i], pseudo.images[i], targets[i], cfg, rng, step,
                       trace ? &events[i] : nullptr);
    reg[i] = reg_supervision(ds.images[i], pseudo.images[i], targets[i], cfg.tau_assign);
  });

  DetectorParams g, g_re;
  const LossBreakdown lp = loss_and_grad(params, primary, &g, threads);
  const LossBreakdown l_re = loss_and_grad(params, reg, &g_re, threads);
  const double total = lp.total() + cfg.lambda_re * l_re.total();
  if (!std::isfinite(total)) {
    std::ostringstream os;
    os << "la: loss diverged at step " << step;
    fail(ErrorKind::kDivergence, os.str());
  }
  sgd_step(params, cfg.lr, g, cfg.lambda_re, g_re);
  if (trace) {
    trace->loss_history.push_back(total);
    for (auto& ev : events) trace->accepted.insert(trace->accepted.end(), ev.begin(), ev.end());
  }
  LossBreakdown out = lp;
  out += l_re.scaled(cfg.lambda_re);
  return out;
}

std::vector<TrackedBox> select_tracked_boxes(const Dataset& ds, const PseudoDataset& pseudo) {
  std::vector<TrackedBox> part_problem, matched;
  for (std::size_t i = 0; i < pseudo.images.size() && i < ds.images.size(); ++i) {
    const auto& scene = ds.images[i].scene;
    for (const auto& inst : pseudo.images[i]) {
      int best_part = -1, best_obj = -1;
      double part_iou = 0.0, obj_iou = 0.0;
      for (std::size_t k = 0; k < scene.objects.size(); ++k) {
        if (scene.objects[k].cls != inst.cls) continue;
        const double o = iou(inst.box, scene.objects[k].box);
        if (o > obj_iou) {
          obj_iou = o;
          best_obj = static_cast<int>(k);
        }
        if (k < scene.parts.size() && scene.parts[k]) {
          const double p = iou(inst.box, *scene.parts[k]);
          if (p > part_iou) {
            part_iou = p;
            best_part = static_cast<int>(k);
          }
        }
      }
      if (best_part >= 0 && part_iou >= 0.5 && part_iou > obj_iou)
        part_problem.push_back({static_cast<int>(i), inst.cls, inst.box,
                                scene.objects[best_part].box});
      if (best_obj >= 0)
        matched.push_back({static_cast<int>(i), inst.cls, inst.box, scene.objects[best_obj].box});
    }
  }
  return part_problem.empty() ? matched : part_problem;
}

LaResult la_train(const Dataset& ds, const PseudoDataset& pseudo, const LaConfig& cfg,
                  std::uint64_t seed, int threads, const CurveOptions* curve,
                  bool record_events) {
  validate(cfg);
  if (pseudo.images.size() != ds.images.size())
    fail(ErrorKind::kInvalidArgument, "la: pseudo labels do not match the dataset");
  LaResult result;
  result.params = DetectorParams::zeros(ds.encoder().dim(), ds.classes());
  result.targets = init_reg_targets(pseudo);
  const auto primary = primary_supervision(ds, pseudo, cfg.tau_assign);

  std::vector<TrackedBox> tracked;
  if (curve) {
    tracked = select_tracked_boxes(ds, pseudo);
    if (tracked.empty())
      fail(ErrorKind::kMissingGroundTruth, "la curves: no pseudo box matches any ground truth");
  }
  const bool regularized = cfg.lambda_re > 0.0;
  auto log_curve = [&](int iter) {
    if (curve)
      result.curve.push_back(
          probe_curve(result.params, ds, tracked, cfg, seed, iter, curve->samples, regularized));
  };
  log_curve(0);
  for (int step = 0; step < cfg.steps; ++step) {
    la_step(result.params, ds, pseudo, primary, result.targets, cfg, seed, step, threads,
            &result.trace);
    if (curve && ((step + 1) % curve->interval == 0 || step + 1 == cfg.steps))
      log_curve(step + 1);
  }
  if (!record_events) result.trace.accepted.clear();
  return result;
}

PseudoDataset refine_labels(const DetectorParams& params, const Dataset& ds, const PgeConfig& pge,
                            int threads) {
  PseudoDataset out;
  out.images.resize(ds.images.size());
  parallel_for(ds.images.size(), threads, [&](std::size_t i) {
    const auto& rec = ds.images[i];
    const auto dets = detect_all(params, rec.proposals.features, rec.proposals.boxes, 0.0);
    out.images[i] = excavate(dets, rec.scene.image_label, pge);
  });
  return out;
}

std::vector<CurveRow> emit_iou_curves(const Dataset& ds, const PseudoDataset& pseudo,
                                      const LaConfig& cfg, std::uint64_t seed, int threads,
                                      const CurveOptions& options) {
  if (options.interval < 1 || options.samples < 1)
    fail(ErrorKind::kInvalidArgument, "curve interval and samples must be >= 1");
  LaConfig plain = cfg;
  plain.lambda_re = 0.0;
  std::vector<CurveRow> rows = la_train(ds, pseudo, plain, seed, threads, &options).curve;
  const auto reg = la_train(ds, pseudo, cfg, seed, threads, &options).curve;
  rows.insert(rows.end(), reg.begin(), reg.end());
  return rows;
}

void write_curve_csv(std::ostream& os, std::span<const CurveRow> rows) {
  os << "iter,iou_gt,iou_pgt,regularized\n";
  auto old = os.precision(17);
  for (const auto& r : rows)
    os << r.iter << ',' << r.iou_gt << ',' << r.iou_pgt << ',' << (r.regularized ? 1 : 0) << '\n';
  os.precision(old);
}

}  // namespace w2n
