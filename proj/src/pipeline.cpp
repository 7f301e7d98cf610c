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

#include "w2n/pipeline.hpp"

#include <algorithm>
#include <numeric>
#include <ostream>
#include <string>

#include "w2n/error.hpp"
#include "w2n/log.hpp"
#include "w2n/parallel.hpp"

namespace w2n {
namespace {

constexpr std::uint64_t kTrainSplit = 0;
constexpr std::uint64_t kTestSplit = 1;

template <class F>
auto with_context(int t, F&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const Error& e) {
    fail(e.kind(), "iteration " + std::to_string(t) + ": " + e.what());
  }
}

double class_ap(std::vector<std::pair<double, bool>> ranked, std::size_t n_gt) {
  // ranked: (score, true positive), already in rank order
  std::vector<double> prec, rec;
  std::size_t tp = 0;
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    if (ranked[i].second) ++tp;
    prec.push_back(static_cast<double>(tp) / static_cast<double>(i + 1));
    rec.push_back(static_cast<double>(tp) / static_cast<double>(n_gt));
  }
  for (std::size_t i = prec.size(); i-- > 1;) prec[i - 1] = std::max(prec[i - 1], prec[i]);
  double ap = 0.0, last = 0.0;
  for (std::size_t i = 0; i < rec.size(); ++i) {
    ap += (rec[i] - last) * prec[i];
    last = rec[i];
  }
  return ap;
}

}  // namespace

void validate(const RunConfig& cfg) {
  validate(cfg.world);
  validate(cfg.noise);
  validate(cfg.pge);
  validate(cfg.la);
  validate(cfg.ssod);
  if (!(cfg.p > 0.0 && cfg.p <= 1.0)) fail(ErrorKind::kInvalidArgument, "p must lie in (0,1]");
  if (cfg.T < 0) fail(ErrorKind::kInvalidArgument, "T must be >= 0");
  if (cfg.test_images < 1) fail(ErrorKind::kInvalidArgument, "test_images must be >= 1");
  if (!(cfg.eval_nms > 0.0 && cfg.eval_nms < 1.0))
    fail(ErrorKind::kInvalidArgument, "eval_nms must lie in (0,1)");
  if (cfg.curve_interval < 1 || cfg.curve_samples < 1)
    fail(ErrorKind::kInvalidArgument, "curve_interval and curve_samples must be >= 1");
}

WorldConfig test_world_config(const RunConfig& cfg) {
  WorldConfig w = cfg.world;
  w.num_images = cfg.test_images;
  w.seed = derive_seed(cfg.world.seed, {kStreamTestWorld});
  return w;
}

std::vector<std::vector<Detection>> simulate_wsod(const Dataset& ds, const NoiseModel& noise,
                                                  std::uint64_t seed, std::uint64_t split_tag,
                                                  int threads) {
  std::vector<std::vector<Detection>> out(ds.images.size());
  parallel_for(ds.images.size(), threads, [&](std::size_t i) {
    Rng rng = derive_rng(seed, {kStreamNoise, split_tag, i});
    out[i] = corrupt_to_wsod_output(ds.images[i].scene, ds.images[i].proposals, noise, rng);
  });
  return out;
}

PseudoDataset initial_pseudo_labels(const Dataset& ds, const RunConfig& cfg, int threads) {
  const auto preds = simulate_wsod(ds, cfg.noise, cfg.seed, kTrainSplit, threads);
  PseudoDataset out;
  out.images.resize(ds.images.size());
  for (std::size_t i = 0; i < ds.images.size(); ++i)
    out.images[i] = excavate(preds[i], ds.images[i].scene.image_label, cfg.pge);
  return out;
}

std::vector<std::vector<Detection>> detect_dataset(const DetectorParams& params,
                                                   const Dataset& ds, double eval_nms,
                                                   int threads) {
  std::vector<std::vector<Detection>> out(ds.images.size());
  parallel_for(ds.images.size(), threads, [&](std::size_t i) {
    const auto& rec = ds.images[i];
    auto dets = detect_all(params, rec.proposals.features, rec.proposals.boxes, 1e-3);
    std::erase_if(dets, [](const Detection& d) { return !is_valid(d.box); });
    out[i] = nms(dets, eval_nms);
  });
  return out;
}

double toy_map(std::span<const std::vector<Detection>> dets,
               std::span<const GroundTruthScene> gt, int classes) {
  if (dets.size() != gt.size())
    fail(ErrorKind::kInvalidArgument, "toy_map: detections and ground truth differ in length");
  double sum = 0.0;
  int counted = 0;
  for (int c = 0; c < classes; ++c) {
    std::size_t n_gt = 0;
    struct Cand {
      double score;
      std::size_t image;
      std::size_t order;
      Box box;
    };
    std::vector<Cand> cands;
    for (std::size_t i = 0; i < gt.size(); ++i) {
      for (const auto& o : gt[i].objects) n_gt += o.cls == c ? 1 : 0;
      for (std::size_t k = 0; k < dets[i].size(); ++k)
        if (dets[i][k].cls == c) cands.push_back({dets[i][k].score, i, k, dets[i][k].box});
    }
    if (n_gt == 0) continue;
    std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
      if (a.score != b.score) return a.score > b.score;
      if (a.image != b.image) return a.image < b.image;
      return a.order < b.order;
    });
    std::vector<std::vector<char>> used(gt.size());
    for (std::size_t i = 0; i < gt.size(); ++i) used[i].assign(gt[i].objects.size(), 0);
    std::vector<std::pair<double, bool>> ranked;
    ranked.reserve(cands.size());
    for (const auto& cd : cands) {
      const auto& objs = gt[cd.image].objects;
      double best = 0.0;
      int best_k = -1;
      for (std::size_t k = 0; k < objs.size(); ++k) {
        if (objs[k].cls != c) continue;
        const double o = iou(cd.box, objs[k].box);
        if (o > best) {
          best = o;
          best_k = static_cast<int>(k);
        }
      }
      bool tp = false;
      if (best_k >= 0 && best >= 0.5 && !used[cd.image][best_k]) {
        used[cd.image][best_k] = 1;
        tp = true;
      }
      ranked.emplace_back(cd.score, tp);
    }
    sum += class_ap(std::move(ranked), n_gt);
    ++counted;
  }
  if (counted == 0) fail(ErrorKind::kMissingGroundTruth, "toy_map: no ground-truth boxes");
  return sum / counted;
}

double toy_map(std::span<const std::vector<Detection>> dets, const Dataset& ds) {
  std::vector<GroundTruthScene> gt;
  gt.reserve(ds.images.size());
  for (const auto& rec : ds.images) gt.push_back(rec.scene);
  return toy_map(dets, gt, ds.classes());
}

double corloc(std::span<const std::vector<Detection>> dets, const Dataset& ds) {
  std::size_t pairs = 0, hits = 0;
  for (std::size_t i = 0; i < ds.images.size(); ++i) {
    const auto& scene = ds.images[i].scene;
    for (int c = 0; c < static_cast<int>(scene.image_label.size()); ++c) {
      if (!scene.image_label[c]) continue;
      ++pairs;
      const Detection* top = nullptr;
      if (i < dets.size())
        for (const auto& d : dets[i])
          if (d.cls == c && (!top || d.score > top->score)) top = &d;
      if (!top) continue;
      for (const auto& o : scene.objects) {
        if (o.cls == c && iou(o.box, top->box) >= 0.5) {
          ++hits;
          break;
        }
      }
    }
  }
  return pairs ? static_cast<double>(hits) / static_cast<double>(pairs) : 0.0;
}

IterationReport evaluate(const DetectorParams& params, const Dataset& train, const Dataset& test,
                         const PseudoDataset& pseudo, double eval_nms, double labeled_fraction,
                         int t, int threads) {
  IterationReport r;
  r.t = t;
  r.mean_iou = mean_iou_to_gt(train, pseudo);
  r.map = toy_map(detect_dataset(params, test, eval_nms, threads), test);
  r.corloc = corloc(detect_dataset(params, train, eval_nms, threads), train);
  r.labeled_fraction = labeled_fraction;
  return r;
}

RunResult run(const RunConfig& cfg, int threads) {
  validate(cfg);
  const Dataset train = generate_world(cfg.world, threads);
  const Dataset test = generate_world(test_world_config(cfg), threads);
  RunResult res;

  PseudoDataset xp = initial_pseudo_labels(train, cfg, threads);
  {
    IterationReport r0;
    r0.t = 0;
    r0.mean_iou = mean_iou_to_gt(train, xp);
    const auto test_preds = simulate_wsod(test, cfg.noise, cfg.seed, kTestSplit, threads);
    r0.map = toy_map(test_preds, test);
    r0.corloc = corloc(simulate_wsod(train, cfg.noise, cfg.seed, kTrainSplit, threads), train);
    r0.labeled_fraction = 1.0;
    res.reports.push_back(r0);
    res.pseudo.push_back(xp);
  }

  const int passes = std::max(cfg.T, 1);
  for (int t = 0; t < passes; ++t) {
    with_context(t, [&] {
      const std::uint64_t seed = derive_seed(cfg.seed, {static_cast<std::uint64_t>(t)});
      IterationArtifacts art;
      const LaResult la = la_train(train, xp, cfg.la, seed, threads);
      art.refined = refine_labels(la.params, train, cfg.pge, threads);
      DetectorParams evaluated = la.params;
      PseudoDataset next = art.refined;
      double fraction = 1.0;
      if (cfg.T > 0) {
        art.split = split_dataset(la.params, train, art.refined, cfg.la.tau_assign,
                                  cfg.split_mode, cfg.p, threads, &art.records);
        const std::size_t total = art.refined.instance_count();
        fraction = total ? static_cast<double>(art.split.labeled.size()) /
                               static_cast<double>(total)
                         : 0.0;
        SsodResult ss = ssod_train(la.params, train, art.refined, art.split, cfg.ssod, seed,
                                   threads);
        art.ssod_log = std::move(ss.log);
        evaluated = std::move(ss.teacher);
        next = refine_labels(evaluated, train, cfg.pge, threads);
      }
      res.reports.push_back(
          evaluate(evaluated, train, test, next, cfg.eval_nms, fraction, t + 1, threads));
      log_info("iteration " + std::to_string(t + 1) + " done");
      res.pseudo.push_back(next);
      res.params.push_back(evaluated);
      res.iterations.push_back(std::move(art));
      xp = std::move(next);
    });
  }
  res.final_params = res.params.back();
  return res;
}

void write_report_csv(std::ostream& os, std::span<const IterationReport> reports) {
  os << "t,mean_iou,map,corloc,labeled_fraction\n";
  auto old = os.precision(17);
  for (const auto& r : reports)
    os << r.t << ',' << r.mean_iou << ',' << r.map << ',' << r.corloc << ','
       << r.labeled_fraction << '\n';
  os.precision(old);
}

void write_report_summary(std::ostream& os, std::span<const IterationReport> reports,
                          const RunConfig& cfg) {
  os << "iterations: " << cfg.T << "\n";
  os << "split: " << to_string(cfg.split_mode) << " p=" << cfg.p << "\n";
  os << "ap_interpolation: all-points\n";
  os << "iou_match: 0.5\n";
  for (const auto& r : reports) {
    os << "t=" << r.t << " mean_iou=" << r.mean_iou << " map=" << r.map
       << " corloc=" << r.corloc << " labeled_fraction=" << r.labeled_fraction << "\n";
  }
}

}  // namespace w2n
