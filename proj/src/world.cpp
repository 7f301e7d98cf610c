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

#include "w2n/world.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "w2n/error.hpp"
#include "w2n/parallel.hpp"

namespace w2n {
namespace {

constexpr int kPerClassDims = 3;
constexpr int kDeltaDims = 8;
constexpr int kGeometryDims = 4;
constexpr double kDeltaClamp = 3.0;

double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

double step_at_half(double v) { return logistic((v - 0.5) / 0.04); }

double containment(const Box& outer, const Box& inner) {
  return intersection_area(outer, inner) / inner.area();
}

double clamp_delta(double v) { return std::clamp(v, -kDeltaClamp, kDeltaClamp); }

Box jitter_box(const Box& b, double shift, double log_scale, Rng& rng) {
  const double dx = rng.uniform(-shift, shift);
  const double dy = rng.uniform(-shift, shift);
  const double sw = std::exp(rng.uniform(-log_scale, log_scale));
  const double sh = std::exp(rng.uniform(-log_scale, log_scale));
  return Box{b.x + dx * b.w, b.y + dy * b.h, b.w * sw, b.h * sh};
}

bool is_part_class(const WorldConfig& cfg, int cls) {
  return std::find(cfg.part_classes.begin(), cfg.part_classes.end(), cls) !=
         cfg.part_classes.end();
}

}  // namespace

void validate(const WorldConfig& cfg) {
  auto bad = [](const std::string& msg) { fail(ErrorKind::kInfeasibleConfig, msg); };
  if (cfg.num_images < 1) bad("world.num_images must be >= 1");
  if (cfg.classes < 2) bad("world.classes must be >= 2");
  if (cfg.min_objects < 1 || cfg.max_objects < cfg.min_objects)
    bad("world.min_objects/max_objects must satisfy 1 <= min <= max");
  if (!(cfg.canvas_width > 0.0) || !(cfg.canvas_height > 0.0))
    bad("world canvas must be positive");
  if (!(cfg.min_object_size > 0.0) || cfg.max_object_size < cfg.min_object_size)
    bad("world object size range is empty");
  if (cfg.max_object_size > std::min(cfg.canvas_width, cfg.canvas_height))
    bad("world objects are too large for the canvas");
  if (!(cfg.part_fraction > 0.0 && cfg.part_fraction < 1.0))
    bad("world.part_fraction must lie in (0,1)");
  if (!(cfg.part_presence >= 0.0 && cfg.part_presence <= 1.0))
    bad("world.part_presence must lie in [0,1]");
  for (int c : cfg.part_classes)
    if (c < 0 || c >= cfg.classes) bad("world.part_classes holds an unknown class id");
  if (cfg.proposals_per_image < 1) bad("world.proposals_per_image must be >= 1");
  if (cfg.object_proposal_fraction < 0.0 || cfg.part_proposal_fraction < 0.0 ||
      cfg.object_proposal_fraction + cfg.part_proposal_fraction > 1.0)
    bad("world proposal fractions must be non-negative and sum to <= 1");
  const int base = FeatureEncoder::base_dim(cfg.classes);
  if (cfg.feature_dim != 0 && cfg.feature_dim < base) {
    std::ostringstream os;
    os << "world.feature_dim must be 0 or >= " << base;
    bad(os.str());
  }
  if (cfg.feature_noise < 0.0) bad("world.feature_noise must be >= 0");
  // Enough slots for the largest scene under the overlap bound.
  const double slot = cfg.max_object_size * cfg.max_object_size;
  if (cfg.max_objects * slot > 4.0 * cfg.canvas_width * cfg.canvas_height)
    bad("world cannot place max_objects objects on the canvas");
}

int FeatureEncoder::base_dim(int classes) {
  return kPerClassDims * classes + kDeltaDims + kGeometryDims;
}

FeatureEncoder::FeatureEncoder(const WorldConfig& cfg)
    : classes_(cfg.classes),
      dim_(cfg.feature_dim == 0 ? base_dim(cfg.classes) : cfg.feature_dim),
      canvas_w_(cfg.canvas_width),
      canvas_h_(cfg.canvas_height),
      ref_size_(0.5 * (cfg.min_object_size + cfg.max_object_size)),
      noise_(cfg.feature_noise),
      object_scale_(cfg.object_evidence_scale),
      part_scale_(cfg.part_evidence_scale) {}

Eigen::VectorXd FeatureEncoder::describe_clean(const GroundTruthScene& scene,
                                               const Box& box) const {
  Eigen::VectorXd f = Eigen::VectorXd::Zero(dim_);
  std::vector<double> body(classes_, 0.0), part(classes_, 0.0);

  int best_obj = -1, best_part = -1;
  double best_obj_iou = 0.0, best_cont = 0.0;
  for (std::size_t k = 0; k < scene.objects.size(); ++k) {
    const auto& obj = scene.objects[k];
    const double o = iou(box, obj.box);
    body[obj.cls] = std::max(body[obj.cls], o);
    if (o > best_obj_iou) {
      best_obj_iou = o;
      best_obj = static_cast<int>(k);
    }
    if (k < scene.parts.size() && scene.parts[k]) {
      const Box& p = *scene.parts[k];
      part[obj.cls] = std::max(part[obj.cls], iou(box, p));
      const double cont = containment(box, p);
      if (cont > best_cont) {
        best_cont = cont;
        best_part = static_cast<int>(k);
      }
    }
  }

  int at = 0;
  for (int c = 0; c < classes_; ++c) {
    f[at++] = step_at_half(body[c]);
    f[at++] = body[c];
    f[at++] = step_at_half(part[c]);
  }
  auto put_delta = [&](const Box& target, double gate) {
    const BoxDelta d = encode(target, box);
    f[at++] = gate * clamp_delta(d.tx);
    f[at++] = gate * clamp_delta(d.ty);
    f[at++] = gate * clamp_delta(d.tw);
    f[at++] = gate * clamp_delta(d.th);
  };
  if (best_obj >= 0)
    put_delta(scene.objects[best_obj].box, object_scale_ * logistic((best_obj_iou - 0.4) / 0.03));
  else
    at += 4;
  if (best_part >= 0)
    put_delta(*scene.parts[best_part],
              part_scale_ * logistic((best_cont - 0.6) / 0.08));
  else
    at += 4;
  f[at++] = box.x / canvas_w_ - 0.5;
  f[at++] = box.y / canvas_h_ - 0.5;
  f[at++] = 0.5 * std::log(box.w / ref_size_);
  f[at++] = 0.5 * std::log(box.h / ref_size_);
  return f;
}

Eigen::VectorXd FeatureEncoder::describe(const GroundTruthScene& scene, const Box& box,
                                         Rng& rng) const {
  Eigen::VectorXd f = describe_clean(scene, box);
  const int base = base_dim(classes_);
  for (int i = 0; i < base; ++i) f[i] += rng.uniform(-noise_, noise_);
  for (int i = base; i < dim_; ++i) f[i] = rng.uniform(-1.0, 1.0);
  return f;
}

Eigen::MatrixXd FeatureEncoder::describe_all(const GroundTruthScene& scene,
                                             const std::vector<Box>& boxes,
                                             Rng& rng) const {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(boxes.size()), dim_);
  for (std::size_t i = 0; i < boxes.size(); ++i)
    m.row(static_cast<Eigen::Index>(i)) = describe(scene, boxes[i], rng).transpose();
  return m;
}

GroundTruthScene generate_scene(const WorldConfig& cfg, Rng& rng) {
  GroundTruthScene scene;
  scene.image_label.assign(cfg.classes, 0);
  const int n = rng.uniform_int(cfg.min_objects, cfg.max_objects);
  for (int k = 0; k < n; ++k) {
    bool placed = false;
    for (int attempt = 0; attempt < 1000 && !placed; ++attempt) {
      const double w = rng.uniform(cfg.min_object_size, cfg.max_object_size);
      const double h = rng.uniform(cfg.min_object_size, cfg.max_object_size);
      const double x = rng.uniform(0.5 * w, cfg.canvas_width - 0.5 * w);
      const double y = rng.uniform(0.5 * h, cfg.canvas_height - 0.5 * h);
      const Box b{x, y, w, h};
      bool ok = true;
      for (const auto& o : scene.objects)
        if (iou(o.box, b) > cfg.max_object_overlap) ok = false;
      if (!ok) continue;
      const int cls = rng.uniform_int(0, cfg.classes - 1);
      scene.objects.push_back({b, cls});
      std::optional<Box> part;
      if (is_part_class(cfg, cls) && rng.bernoulli(cfg.part_presence)) {
        // Offsets stay below the (1 - f) / 2 margin so the part is strictly inside.
        const double margin = 0.5 * (1.0 - cfg.part_fraction);
        const double ux = rng.uniform(-0.6 * margin, 0.6 * margin);
        const double uy = rng.uniform(-0.6 * margin, 0.6 * margin);
        part = Box{x + ux * w, y + uy * h, cfg.part_fraction * w, cfg.part_fraction * h};
      }
      scene.parts.push_back(part);
      scene.image_label[cls] = 1;
      placed = true;
    }
    if (!placed) fail(ErrorKind::kInfeasibleConfig, "world: failed to place objects without overlap");
  }
  return scene;
}

std::vector<Box> generate_proposals(const WorldConfig& cfg, const GroundTruthScene& scene,
                                    Rng& rng) {
  const int total = cfg.proposals_per_image;
  const int n_obj = static_cast<int>(scene.objects.size());
  std::vector<int> with_part;
  for (int k = 0; k < n_obj; ++k)
    if (scene.parts[k]) with_part.push_back(k);

  int object_budget = static_cast<int>(std::lround(cfg.object_proposal_fraction * total));
  int part_budget = with_part.empty()
                        ? 0
                        : static_cast<int>(std::lround(cfg.part_proposal_fraction * total));
  object_budget = std::max(object_budget, n_obj);
  part_budget = std::max(part_budget, static_cast<int>(with_part.size()));
  if (object_budget + part_budget > total) {
    fail(ErrorKind::kInfeasibleConfig,
         "world.proposals_per_image too small to cover every object");
  }

  std::vector<Box> boxes;
  boxes.reserve(total);
  // Round-robin over objects; each object's first jitter is tight, which keeps
  // IoU >= 0.5 with its ground truth.
  for (int i = 0; i < object_budget; ++i) {
    const Box& gt = scene.objects[i % n_obj].box;
    Box b = i < n_obj ? jitter_box(gt, 0.04, 0.08, rng) : jitter_box(gt, 0.2, 0.35, rng);
    if (i < n_obj && iou(b, gt) < 0.5) b = gt;
    boxes.push_back(b);
  }
  for (int i = 0; i < part_budget; ++i) {
    const Box& p = *scene.parts[with_part[i % with_part.size()]];
    boxes.push_back(jitter_box(p, 0.2, 0.35, rng));
  }
  const double lo = 0.25 * cfg.min_object_size;
  const double hi = 1.3 * cfg.max_object_size;
  while (static_cast<int>(boxes.size()) < total) {
    const double w = std::exp(rng.uniform(std::log(lo), std::log(hi)));
    const double h = std::exp(rng.uniform(std::log(lo), std::log(hi)));
    boxes.push_back(Box{rng.uniform(0.0, cfg.canvas_width), rng.uniform(0.0, cfg.canvas_height), w, h});
  }
  return boxes;
}

Dataset generate_world(const WorldConfig& cfg, int threads) {
  validate(cfg);
  Dataset ds;
  ds.config = cfg;
  ds.images.resize(cfg.num_images);
  const FeatureEncoder enc(cfg);
  parallel_for(ds.images.size(), threads, [&](std::size_t i) {
    Rng rng = derive_rng(cfg.seed, {kStreamWorld, i});
    ImageRecord& rec = ds.images[i];
    rec.id = static_cast<int>(i);
    rec.scene = generate_scene(cfg, rng);
    rec.proposals.boxes = generate_proposals(cfg, rec.scene, rng);
    rec.proposals.features = enc.describe_all(rec.scene, rec.proposals.boxes, rng);
  });
  return ds;
}

void validate(const NoiseModel& n) {
  auto unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!unit(n.part_rate) || !unit(n.mislabel_rate) || !unit(n.drop_rate) ||
      n.mislabel_rate + n.drop_rate > 1.0)
    fail(ErrorKind::kInvalidArgument, "noise rates must lie in [0,1] with mislabel+drop <= 1");
  if (n.fp_rate < 0.0) fail(ErrorKind::kInvalidArgument, "noise.fp_rate must be >= 0");
}

std::vector<WsodPrediction> corrupt_to_wsod_output_traced(const GroundTruthScene& scene,
                                                          const ProposalSet& proposals,
                                                          const NoiseModel& noise, Rng& rng) {
  validate(noise);
  const int classes = static_cast<int>(scene.image_label.size());
  std::vector<int> present;
  for (int c = 0; c < classes; ++c)
    if (scene.image_label[c]) present.push_back(c);

  std::vector<WsodPrediction> out;
  for (std::size_t k = 0; k < scene.objects.size(); ++k) {
    const auto& obj = scene.objects[k];
    const bool has_part = k < scene.parts.size() && scene.parts[k].has_value();
    WsodPrediction p;
    p.source_object = static_cast<int>(k);
    if (has_part && rng.bernoulli(noise.part_rate)) {
      p.outcome = NoiseOutcome::kPart;
      p.det = {*scene.parts[k], obj.cls, rng.uniform(noise.part_score_lo, noise.part_score_hi)};
      out.push_back(p);
      continue;
    }
    const double u = rng.uniform();
    if (u < noise.mislabel_rate) {
      // Weak detectors confuse classes within the image label when they can.
      std::vector<int> others;
      for (int c : present)
        if (c != obj.cls) others.push_back(c);
      if (others.empty())
        for (int c = 0; c < classes; ++c)
          if (c != obj.cls) others.push_back(c);
      const int wrong = others[rng.uniform_int(0, static_cast<int>(others.size()) - 1)];
      p.outcome = NoiseOutcome::kMislabel;
      p.det = {obj.box, wrong, rng.uniform(noise.mislabel_score_lo, noise.mislabel_score_hi)};
      out.push_back(p);
    } else if (u < noise.mislabel_rate + noise.drop_rate) {
      continue;
    } else {
      p.outcome = NoiseOutcome::kAccurate;
      p.det = {obj.box, obj.cls, rng.uniform(noise.accurate_score_lo, noise.accurate_score_hi)};
      out.push_back(p);
    }
  }

  int fps = static_cast<int>(std::floor(noise.fp_rate));
  if (rng.bernoulli(noise.fp_rate - fps)) ++fps;
  if (present.empty()) fps = 0;
  std::vector<int> background;
  for (std::size_t i = 0; i < proposals.boxes.size(); ++i) {
    double best = 0.0;
    for (const auto& obj : scene.objects) best = std::max(best, iou(proposals.boxes[i], obj.box));
    if (best < 0.3) background.push_back(static_cast<int>(i));
  }
  for (int i = 0; i < fps && !background.empty(); ++i) {
    const int pick = background[rng.uniform_int(0, static_cast<int>(background.size()) - 1)];
    WsodPrediction p;
    p.outcome = NoiseOutcome::kFalsePositive;
    p.det = {proposals.boxes[pick], present[rng.uniform_int(0, static_cast<int>(present.size()) - 1)],
             rng.uniform(noise.fp_score_lo, noise.fp_score_hi)};
    out.push_back(p);
  }
  return out;
}

std::vector<Detection> corrupt_to_wsod_output(const GroundTruthScene& scene,
                                              const ProposalSet& proposals,
                                              const NoiseModel& noise, Rng& rng) {
  std::vector<Detection> dets;
  for (const auto& p : corrupt_to_wsod_output_traced(scene, proposals, noise, rng))
    dets.push_back(p.det);
  return dets;
}

}  // namespace w2n
