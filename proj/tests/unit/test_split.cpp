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

#include <cmath>
#include <sstream>

#include "doctest.h"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace w2n;

namespace {

std::vector<LossRecord> records(const std::vector<double>& totals) {
  std::vector<LossRecord> out;
  for (std::size_t i = 0; i < totals.size(); ++i) {
    LossRecord r;
    r.key = static_cast<int>(i);
    r.image = static_cast<int>(i);
    r.instance = 0;
    r.roi_cls = totals[i];
    out.push_back(r);
  }
  return out;
}

}  // namespace

TEST_CASE("top count rule") {
  CHECK(top_count(0.6, 10) == 6);
  CHECK(top_count(0.6, 1) == 1);
  CHECK(top_count(0.01, 5) == 1);
  CHECK(top_count(1.0, 7) == 7);
  CHECK(top_count(0.3, 10) == 3);  // 0.3*10 is 2.9999999999999996
}

TEST_CASE("instance mode example") {
  const auto recs = records({0.1, 0.2, 0.3, 0.4});
  const auto r = split(recs, SplitMode::kInstance, 0.5);
  REQUIRE(r.labeled.size() == 2);
  CHECK(r.labeled[0].image == 0);
  CHECK(r.labeled[1].image == 1);
  for (SplitMode m : {SplitMode::kInstance, SplitMode::kTwoTasks, SplitMode::kImage}) {
    const auto all = split(recs, m, 1.0);
    CHECK(all.labeled.size() == 4);
    for (const auto& l : all.labeled) CHECK((l.lambda_cls == 1 && l.lambda_reg == 1));
  }
  CHECK_THROWS_AS(split(recs, SplitMode::kInstance, 0.0), Error);
}

TEST_CASE("records without foreground are never labeled") {
  auto recs = records({0.1, 0.2, 0.3});
  recs[0].has_foreground = false;
  recs[0].roi_cls = std::numeric_limits<double>::infinity();
  const auto r = split(recs, SplitMode::kInstance, 1.0);
  CHECK(r.labeled.size() == 2);
  CHECK(r.excluded.size() == 1);
}

TEST_CASE("two tasks tags") {
  std::vector<LossRecord> recs(4);
  const double cls[] = {0.1, 0.9, 0.2, 0.8}, reg[] = {0.9, 0.1, 0.2, 0.8};
  for (int i = 0; i < 4; ++i) {
    recs[i].key = recs[i].image = i;
    recs[i].instance = 0;
    recs[i].roi_cls = cls[i];
    recs[i].roi_reg = reg[i];
  }
  const auto r = split(recs, SplitMode::kTwoTasks, 0.5);
  // cls top: 0, 2; reg top: 1, 2
  REQUIRE(r.labeled.size() == 3);
  CHECK(r.labeled[0].lambda_cls == 1);
  CHECK(r.labeled[0].lambda_reg == 0);
  CHECK(r.labeled[1].lambda_cls == 0);
  CHECK(r.labeled[1].lambda_reg == 1);
  CHECK(r.labeled[2].lambda_cls == 1);
  CHECK(r.labeled[2].lambda_reg == 1);
  for (const auto& l : r.labeled) CHECK(l.lambda_cls + l.lambda_reg >= 1);
}

TEST_CASE("split oracles on a short run") {
  oracle::SuiteConfig cfg;
  cfg.split_max_n = 8;
  cfg.split_cases_per_n = 5;
  cfg.ideal_instances = 200;
  CHECK_NOTHROW(oracle::check_split(cfg));
  CHECK_NOTHROW(oracle::check_ideal(cfg));
}

TEST_CASE("monotone in p") {
  Rng rng(2);
  std::vector<double> t(12);
  for (auto& v : t) v = rng.uniform();
  const auto recs = records(t);
  auto prev = split(recs, SplitMode::kInstance, 0.1).labeled;
  for (double p : {0.3, 0.5, 0.7, 1.0}) {
    const auto cur = split(recs, SplitMode::kInstance, p).labeled;
    for (const auto& l : prev) CHECK(std::find(cur.begin(), cur.end(), l) != cur.end());
    prev = cur;
  }
}

TEST_CASE("ideal split examples") {
  Dataset ds;
  ds.config.classes = 2;
  ImageRecord rec;
  rec.scene.objects = {SceneObject{Box{20, 20, 10, 10}, 0}};
  rec.scene.parts = {std::nullopt};
  ds.images.push_back(rec);
  PseudoDataset pseudo;
  pseudo.images = {{Instance{Box{20, 20, 10, 10}, 0}, Instance{Box{22, 20, 10, 10}, 1}}};
  const auto r = ideal_split(pseudo, ds);
  REQUIRE(r.labeled.size() == 1);
  CHECK(r.labeled[0].instance == 0);
  REQUIRE(r.excluded.size() == 1);
  CHECK(r.excluded[0].instance == 1);
  Dataset no_gt;
  no_gt.config.classes = 2;
  no_gt.images.resize(1);
  CHECK_THROWS_AS(ideal_split(pseudo, no_gt), Error);
}

TEST_CASE("accumulated losses re-aggregate the per proposal terms") {
  const Dataset ds = generate_world(testing::small_world());
  PseudoDataset pseudo = pseudo_from_ground_truth(ds);
  Rng rng(3);
  const auto params = oracle::random_params(ds.encoder().dim(), ds.classes(), 0.2, rng);
  const auto inst = accumulate_losses(params, ds, pseudo, 0.5, SplitMode::kInstance, 2);
  const auto img = accumulate_losses(params, ds, pseudo, 0.5, SplitMode::kImage, 1);
  REQUIRE(inst.size() == pseudo.instance_count());
  REQUIRE(img.size() == ds.images.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < ds.images.size(); ++i) {
    const auto& rec = ds.images[i];
    const auto terms = oracle::manual_terms(params, rec.proposals.features, rec.proposals.boxes,
                                            pseudo.images[i], 0.5);
    double img_sum = 0.0;
    int img_n = 0;
    for (std::size_t j = 0; j < pseudo.images[i].size(); ++j, ++k) {
      double sum = 0.0;
      int n = 0;
      for (const auto& t : terms)
        if (t.target == static_cast<int>(j)) {
          sum += t.rpn_cls + t.rpn_reg + t.roi_cls + t.roi_reg;
          ++n;
        }
      img_sum += sum;
      img_n += n;
      CHECK(inst[k].image == static_cast<int>(i));
      CHECK(inst[k].instance == static_cast<int>(j));
      if (n == 0) {
        CHECK_FALSE(inst[k].has_foreground);
      } else {
        CHECK(inst[k].total() == doctest::Approx(sum / n).epsilon(1e-10));
      }
    }
    if (img_n > 0) CHECK(img[i].total() == doctest::Approx(img_sum / img_n).epsilon(1e-10));
  }
}

TEST_CASE("perfect detector gives near zero records") {
  // one proposal on the target, hand-set weights predicting it exactly
  Dataset ds;
  ds.config.classes = 1;
  ds.config.feature_dim = 1;
  ImageRecord rec;
  rec.scene.objects = {SceneObject{Box{30, 30, 20, 20}, 0}};
  rec.scene.parts = {std::nullopt};
  rec.proposals.boxes = {Box{30, 30, 20, 20}};
  rec.proposals.features = Eigen::MatrixXd::Ones(1, 1);
  ds.images.push_back(rec);
  auto p = DetectorParams::zeros(1, 1);
  p.rpn_cls(0, 1) = 40;
  p.roi_cls(0, 0) = 40;
  const auto recs =
      accumulate_losses(p, ds, pseudo_from_ground_truth(ds), 0.5, SplitMode::kInstance, 1);
  REQUIRE(recs.size() == 1);
  CHECK(recs[0].total() < 1e-6);
}

TEST_CASE("audit table and labeled view") {
  const auto recs = records({0.1, 0.2, 0.3, 0.4});
  const auto r = split(recs, SplitMode::kInstance, 0.5);
  std::ostringstream os;
  write_split_audit(os, recs, r);
  const std::string s = os.str();
  CHECK(s.rfind("key,mode,total,cls_loss,reg_loss,lambda_cls,lambda_reg,labeled\n", 0) == 0);
  CHECK(std::count(s.begin(), s.end(), '\n') == 5);
  PseudoDataset pseudo;
  for (int i = 0; i < 4; ++i) pseudo.images.push_back({Instance{Box{10, 10, 5, 5}, 0}});
  const auto view = apply_split(pseudo, r);
  CHECK(view.labeled_fraction == 0.5);
  CHECK(view.labeled[0].size() == 1);
  CHECK(view.labeled[3].empty());
  CHECK(view.ignored[3].size() == 1);
}
