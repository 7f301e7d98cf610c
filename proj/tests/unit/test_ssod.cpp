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

struct Fixture {
  Dataset ds = generate_world(testing::small_world(3));
  PseudoDataset pseudo = pseudo_from_ground_truth(ds);
  DetectorParams init;
  SplitResult sp;
  Fixture() {
    LaConfig la;
    la.steps = 30;
    init = la_train(ds, pseudo, la, 1, 1).params;
    sp = split_dataset(init, ds, pseudo, 0.5, SplitMode::kTwoTasks, 0.6, 1);
  }
};

SsodConfig quick() {
  SsodConfig c;
  c.steps = 12;
  c.jitter_samples = 4;
  c.labeled_batch = 6;
  c.unlabeled_batch = 4;
  return c;
}

}  // namespace

TEST_CASE("jitter deviation closed form") {
  const Box p{10, 10, 4, 2};
  std::vector<Box> same(5, p);
  CHECK(jitter_deviation(same, p) == 0.0);
  // x in {9, 11}: population std 1, normalized by w = 4; other coords fixed
  std::vector<Box> two = {Box{9, 10, 4, 2}, Box{11, 10, 4, 2}};
  CHECK(jitter_deviation(two, p) == doctest::Approx(0.25 / 4.0));
}

TEST_CASE("ema update") {
  Rng rng(1);
  auto t = oracle::random_params(3, 2, 1.0, rng);
  const auto s = oracle::random_params(3, 2, 1.0, rng);
  const auto t0 = t;
  ema_update(t, s, 1.0);
  CHECK(t == t0);
  ema_update(t, s, 0.0);
  CHECK(t == s);
  auto r = t0;
  ema_update(r, s, 0.75);
  CHECK(r.roi_reg(1, 2) == 0.75 * t0.roi_reg(1, 2) + 0.25 * s.roi_reg(1, 2));
}

TEST_CASE("pseudo labels respect the image label and threshold") {
  Fixture f;
  SsodConfig cfg = quick();
  cfg.pseudo_score_threshold = 0.3;
  for (std::size_t i = 0; i < f.ds.images.size(); ++i) {
    Rng rng(i);
    for (const auto& pl : pseudo_label(f.init, f.ds.encoder(), f.ds.images[i], cfg, rng)) {
      CHECK(f.ds.images[i].scene.image_label[pl.inst.cls] == 1);
      CHECK(pl.score >= cfg.pseudo_score_threshold);
      CHECK(pl.inst.lambda_cls == 1);
      CHECK(pl.reg_ok == (pl.jitter_deviation < cfg.jitter_variance_threshold));
      CHECK(pl.inst.lambda_reg == (pl.reg_ok ? 1 : 0));
    }
  }
}

TEST_CASE("lambda_u zero equals supervised training") {
  Fixture f;
  SsodConfig cfg = quick();
  cfg.lambda_u = 0.0;
  cfg.labeled_batch = 0;
  const auto res = ssod_train(f.init, f.ds, f.pseudo, f.sp, cfg, 9, 1);
  const auto view = apply_split(f.pseudo, f.sp);
  const auto sup = labeled_supervision(f.ds, view, cfg.tau_assign);
  const auto plain = train(f.init, sup, {}, TrainOptions{cfg.steps, cfg.lr, 0.0, 1});
  CHECK(res.student == plain.params);

  // also with minibatches: no unlabeled pool at all gives the same run
  cfg.labeled_batch = 5;
  SplitResult no_pool = f.sp;
  no_pool.unlabeled_images.clear();
  CHECK(ssod_train(f.init, f.ds, f.pseudo, f.sp, cfg, 9, 1).student ==
        ssod_train(f.init, f.ds, f.pseudo, no_pool, cfg, 9, 1).student);
}

TEST_CASE("momentum one freezes the teacher") {
  Fixture f;
  SsodConfig cfg = quick();
  cfg.teacher_momentum = 1.0;
  const auto res = ssod_train(f.init, f.ds, f.pseudo, f.sp, cfg, 9, 1);
  CHECK(res.teacher == f.init);
  CHECK_FALSE(res.student == f.init);
}

TEST_CASE("ssod is deterministic across thread counts") {
  Fixture f;
  const SsodConfig cfg = quick();
  const auto a = ssod_train(f.init, f.ds, f.pseudo, f.sp, cfg, 9, 1);
  const auto b = ssod_train(f.init, f.ds, f.pseudo, f.sp, cfg, 9, 4);
  CHECK(a.student == b.student);
  CHECK(a.teacher == b.teacher);
  std::ostringstream x, y;
  write_ssod_log(x, a.log);
  write_ssod_log(y, b.log);
  CHECK(x.str() == y.str());
  CHECK(x.str().rfind("step,l_sup,l_unsup,l_total,n_pseudo,n_reg_ok\n", 0) == 0);
}

TEST_CASE("labeled supervision ignores unlabeled boxes") {
  Fixture f;
  const auto view = apply_split(f.pseudo, f.sp);
  const auto sup = labeled_supervision(f.ds, view, 0.5);
  std::size_t with_labels = 0;
  for (const auto& v : view.labeled) with_labels += v.empty() ? 0 : 1;
  CHECK(sup.size() == with_labels);
  SsodConfig bad;
  bad.teacher_momentum = 1.5;
  CHECK_THROWS_AS(validate(bad), Error);
}
