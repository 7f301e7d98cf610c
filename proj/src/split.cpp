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

#include "w2n/split.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include "w2n/error.hpp"
#include "w2n/parallel.hpp"

namespace w2n {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void mark_missing(LossRecord& r) {
  r.has_foreground = false;
  r.rpn_cls = r.rpn_reg = r.roi_cls = r.roi_reg = kInf;
}

// Record indices in ascending order of `loss`, ties by key.
template <class F>
std::vector<std::size_t> ranking(std::span<const LossRecord> records, F loss) {
  std::vector<std::size_t> order(records.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const double la = loss(records[a]), lb = loss(records[b]);
    if (la != lb) return la < lb;
    return records[a].key < records[b].key;
  });
  return order;
}

std::vector<char> top_mask(std::span<const LossRecord> records,
                           const std::vector<std::size_t>& order, double p) {
  std::vector<char> mask(records.size(), 0);
  const std::size_t k = top_count(p, records.size());
  for (std::size_t i = 0; i < k && i < order.size(); ++i)
    if (records[order[i]].has_foreground) mask[order[i]] = 1;
  return mask;
}

void finish(SplitResult& r, const std::vector<std::vector<char>>& taken,
            std::size_t images) {
  std::sort(r.labeled.begin(), r.labeled.end(), [](const auto& a, const auto& b) {
    return a.image != b.image ? a.image < b.image : a.instance < b.instance;
  });
  for (std::size_t i = 0; i < taken.size(); ++i)
    for (std::size_t k = 0; k < taken[i].size(); ++k)
      if (!taken[i][k]) r.excluded.push_back({static_cast<int>(i), static_cast<int>(k)});
  r.unlabeled_images.resize(images);
  std::iota(r.unlabeled_images.begin(), r.unlabeled_images.end(), 0);
}

void check_p(double p) {
  if (!(p > 0.0 && p <= 1.0)) fail(ErrorKind::kInvalidArgument, "split: p must lie in (0,1]");
}

}  // namespace

const char* to_string(SplitMode mode) {
  switch (mode) {
    case SplitMode::kImage: return "image";
    case SplitMode::kInstance: return "instance";
    case SplitMode::kTwoTasks: return "two_tasks";
    case SplitMode::kIdeal: return "ideal";
  }
  return "?";
}

SplitMode parse_split_mode(const std::string& name) {
  if (name == "image") return SplitMode::kImage;
  if (name == "instance") return SplitMode::kInstance;
  if (name == "two_tasks") return SplitMode::kTwoTasks;
  if (name == "ideal") return SplitMode::kIdeal;
  fail(ErrorKind::kInvalidArgument, "unknown split mode '" + name + "'");
}

std::vector<LossRecord> accumulate_losses(const DetectorParams& params, const Dataset& ds,
                                          const PseudoDataset& pseudo, double tau_assign,
                                          SplitMode mode, int threads) {
  if (pseudo.images.size() != ds.images.size())
    fail(ErrorKind::kInvalidArgument, "split: pseudo labels do not match the dataset");
  const bool by_image = mode == SplitMode::kImage;
  std::vector<std::vector<LossRecord>> per_image(ds.images.size());
  parallel_for(ds.images.size(), threads, [&](std::size_t i) {
    const auto& insts = pseudo.images[i];
    if (insts.empty()) return;
    const auto& rec = ds.images[i];
    const ImageSupervision sup =
        make_supervision(rec.proposals.features, rec.proposals.boxes, insts, tau_assign);
    const auto losses = foreground_losses(params, sup);
    const std::size_t slots = by_image ? 1 : insts.size();
    std::vector<LossRecord> out(slots);
    std::vector<int> counts(slots, 0);
    for (std::size_t s = 0; s < slots; ++s) {
      out[s].image = static_cast<int>(i);
      out[s].instance = by_image ? -1 : static_cast<int>(s);
      out[s].instance_count = by_image ? static_cast<int>(insts.size()) : 1;
    }
    for (const auto& pl : losses) {
      const std::size_t s = by_image ? 0 : static_cast<std::size_t>(pl.target);
      out[s].rpn_cls += pl.rpn_cls;
      out[s].rpn_reg += pl.rpn_reg;
      out[s].roi_cls += pl.roi_cls;
      out[s].roi_reg += pl.roi_reg;
      ++counts[s];
    }
    for (std::size_t s = 0; s < slots; ++s) {
      if (counts[s] == 0) {
        mark_missing(out[s]);
        continue;
      }
      const double n = counts[s];
      out[s].rpn_cls /= n;
      out[s].rpn_reg /= n;
      out[s].roi_cls /= n;
      out[s].roi_reg /= n;
    }
    per_image[i] = std::move(out);
  });
  std::vector<LossRecord> records;
  for (auto& v : per_image)
    for (auto& r : v) {
      r.key = by_image ? r.image : static_cast<int>(records.size());
      records.push_back(r);
    }
  return records;
}

std::size_t top_count(double p, std::size_t n) {
  const auto k = static_cast<std::size_t>(std::floor(p * static_cast<double>(n) + 1e-9));
  return std::max<std::size_t>(1, std::min(k, n));
}

SplitResult split(std::span<const LossRecord> records, SplitMode mode, double p) {
  check_p(p);
  if (mode == SplitMode::kIdeal)
    fail(ErrorKind::kInvalidArgument, "split: ideal mode needs ground truth, use ideal_split");
  SplitResult r;
  r.mode = mode;
  r.p = p;
  int images = 0;
  for (const auto& rec : records) images = std::max(images, rec.image + 1);
  std::vector<std::vector<char>> taken(images);
  for (const auto& rec : records) {
    auto& t = taken[rec.image];
    const int need = rec.instance < 0 ? rec.instance_count : rec.instance + 1;
    if (static_cast<int>(t.size()) < need) t.resize(need, 0);
  }

  if (mode == SplitMode::kTwoTasks) {
    const auto cls_mask =
        top_mask(records, ranking(records, [](const LossRecord& x) { return x.cls_loss(); }), p);
    const auto reg_mask =
        top_mask(records, ranking(records, [](const LossRecord& x) { return x.reg_loss(); }), p);
    for (std::size_t i = 0; i < records.size(); ++i) {
      if (!cls_mask[i] && !reg_mask[i]) continue;
      r.labeled.push_back({records[i].image, records[i].instance,
                           static_cast<std::uint8_t>(cls_mask[i] ? 1 : 0),
                           static_cast<std::uint8_t>(reg_mask[i] ? 1 : 0)});
      taken[records[i].image][records[i].instance] = 1;
    }
  } else {
    const auto mask =
        top_mask(records, ranking(records, [](const LossRecord& x) { return x.total(); }), p);
    for (std::size_t i = 0; i < records.size(); ++i) {
      if (!mask[i]) continue;
      const auto& rec = records[i];
      if (rec.instance < 0) {
        for (int k = 0; k < rec.instance_count; ++k) {
          r.labeled.push_back({rec.image, k, 1, 1});
          taken[rec.image][k] = 1;
        }
      } else {
        r.labeled.push_back({rec.image, rec.instance, 1, 1});
        taken[rec.image][rec.instance] = 1;
      }
    }
  }
  finish(r, taken, images);
  return r;
}

SplitResult ideal_split(const PseudoDataset& pseudo, const Dataset& ds) {
  if (pseudo.images.size() != ds.images.size())
    fail(ErrorKind::kMissingGroundTruth, "ideal split: ground truth unavailable for the pseudo labels");
  const bool any_gt = std::any_of(ds.images.begin(), ds.images.end(),
                                  [](const ImageRecord& r) { return !r.scene.objects.empty(); });
  if (!any_gt) fail(ErrorKind::kMissingGroundTruth, "ideal split: dataset carries no ground truth");
  SplitResult r;
  r.mode = SplitMode::kIdeal;
  r.p = 1.0;
  std::vector<std::vector<char>> taken(pseudo.images.size());
  for (std::size_t i = 0; i < pseudo.images.size(); ++i) {
    const auto& insts = pseudo.images[i];
    taken[i].assign(insts.size(), 0);
    for (std::size_t k = 0; k < insts.size(); ++k) {
      for (const auto& obj : ds.images[i].scene.objects) {
        if (obj.cls == insts[k].cls && iou(obj.box, insts[k].box) > 0.5) {
          taken[i][k] = 1;
          break;
        }
      }
      if (taken[i][k]) r.labeled.push_back({static_cast<int>(i), static_cast<int>(k), 1, 1});
    }
  }
  finish(r, taken, pseudo.images.size());
  return r;
}

SplitResult split_dataset(const DetectorParams& params, const Dataset& ds,
                          const PseudoDataset& pseudo, double tau_assign, SplitMode mode,
                          double p, int threads, std::vector<LossRecord>* records_out) {
  check_p(p);
  const SplitMode acc_mode = mode == SplitMode::kIdeal ? SplitMode::kInstance : mode;
  std::vector<LossRecord> records;
  if (mode != SplitMode::kIdeal || records_out)
    records = accumulate_losses(params, ds, pseudo, tau_assign, acc_mode, threads);
  SplitResult result;
  if (mode == SplitMode::kIdeal) {
    result = ideal_split(pseudo, ds);
  } else {
    result = split(records, mode, p);
    // Images without records still feed the unlabeled stream.
    result.unlabeled_images.resize(ds.images.size());
    std::iota(result.unlabeled_images.begin(), result.unlabeled_images.end(), 0);
  }
  if (records_out) *records_out = std::move(records);
  return result;
}

LabeledView apply_split(const PseudoDataset& pseudo, const SplitResult& result) {
  LabeledView view;
  const std::size_t n = pseudo.images.size();
  view.labeled.resize(n);
  view.ignored.resize(n);
  std::vector<std::vector<char>> taken(n);
  for (std::size_t i = 0; i < n; ++i) taken[i].assign(pseudo.images[i].size(), 0);
  for (const auto& l : result.labeled) {
    if (l.image < 0 || static_cast<std::size_t>(l.image) >= n || l.instance < 0 ||
        static_cast<std::size_t>(l.instance) >= pseudo.images[l.image].size())
      fail(ErrorKind::kInvalidArgument, "split result does not match the pseudo labels");
    Instance inst = pseudo.images[l.image][l.instance];
    inst.lambda_cls = l.lambda_cls;
    inst.lambda_reg = l.lambda_reg;
    view.labeled[l.image].push_back(inst);
    taken[l.image][l.instance] = 1;
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < taken[i].size(); ++k)
      if (!taken[i][k]) view.ignored[i].push_back(pseudo.images[i][k].box);
  const std::size_t total = pseudo.instance_count();
  view.labeled_fraction =
      total ? static_cast<double>(result.labeled.size()) / static_cast<double>(total) : 0.0;
  return view;
}

void write_split_audit(std::ostream& os, std::span<const LossRecord> records,
                       const SplitResult& result) {
  os << "key,mode,total,cls_loss,reg_loss,lambda_cls,lambda_reg,labeled\n";
  auto old = os.precision(17);
  for (const auto& rec : records) {
    int lc = 0, lr = 0;
    bool labeled = false;
    for (const auto& l : result.labeled) {
      if (l.image != rec.image || (rec.instance >= 0 && l.instance != rec.instance)) continue;
      labeled = true;
      lc = std::max<int>(lc, l.lambda_cls);
      lr = std::max<int>(lr, l.lambda_reg);
    }
    os << rec.key << ',' << to_string(result.mode) << ',' << rec.total() << ','
       << rec.cls_loss() << ',' << rec.reg_loss() << ',' << lc << ',' << lr << ','
       << (labeled ? 1 : 0) << '\n';
  }
  os.precision(old);
}

}  // namespace w2n
