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

#include "doctest.h"
#include "w2n/error.hpp"
#include "oracles.hpp"
#include "w2n/detector.hpp"

using namespace w2n;

namespace {

struct Toy {
  Eigen::MatrixXd x;
  std::vector<Box> boxes;
  std::vector<Instance> targets;
};

Toy toy(Rng& rng, int rows = 10, int dim = 5) {
  Toy t;
  t.x = oracle::random_features(rows, dim, rng);
  t.targets = {Instance{Box{20, 20, 20, 20}, 0}, Instance{Box{60, 60, 16, 24}, 2}};
  for (int r = 0; r < rows; ++r) {
    const Box& g = t.targets[r % 2].box;
    t.boxes.push_back(r < 6 ? Box{g.x + rng.uniform(-2, 2), g.y + rng.uniform(-2, 2), g.w, g.h}
                            : oracle::random_box(rng));
  }
  return t;
}

}  // namespace

TEST_CASE("assignment") {
  std::vector<Box> props = {Box{5, 5, 10, 10}, Box{80, 80, 5, 5}, Box{0, 0, 10, 10}};
  // proposal 2 overlaps target 0 at 0.6-ish and target 1 at 0.4-ish
  std::vector<Instance> t = {Instance{Box{5, 5, 10, 10}, 1}, Instance{Box{2, 0, 10, 10}, 0}};
  auto a = assign(props, t, 0.5);
  CHECK(a[0].is_foreground);
  CHECK(a[0].target == 0);
  CHECK_FALSE(a[1].is_foreground);
  CHECK(a[1].target == kBackgroundTarget);
  std::vector<Box> p2 = {Box{0, 0, 10, 10}};
  std::vector<Instance> t2 = {Instance{Box{2.5, 0, 10, 10}, 0}, Instance{Box{-4.2857142857, 0, 10, 10}, 1}};
  // IoU 0.6 vs 0.4
  CHECK(iou(p2[0], t2[0].box) == doctest::Approx(0.6));
  CHECK(iou(p2[0], t2[1].box) == doctest::Approx(0.4).epsilon(1e-6));
  auto a2 = assign(p2, t2, 0.5);
  CHECK(a2[0].target == 0);
  CHECK_THROWS_AS(assign(p2, t2, 1.5), Error);
}

TEST_CASE("forward with zero weights is uniform") {
  const auto p = DetectorParams::zeros(4, 3);
  Eigen::MatrixXd x = Eigen::MatrixXd::Random(3, 4);
  const auto out = forward(p, x);
  CHECK(out.rpn_prob(0, 0) == doctest::Approx(0.5));
  CHECK(out.roi_prob(2, 1) == doctest::Approx(0.25));
  CHECK(out.roi_delta.cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(forward(p, Eigen::MatrixXd::Zero(1, 5)), Error);
}

TEST_CASE("forward matches manual dot products and normalizes") {
  Rng rng(4);
  for (int i = 0; i < 1000; ++i) {
    const auto p = oracle::random_params(3, 2, 2.0, rng);
    const Eigen::MatrixXd x = oracle::random_features(1, 3, rng);
    const auto out = forward(p, x);
    CHECK(out.roi_prob.row(0).sum() == doctest::Approx(1.0));
    CHECK(out.rpn_prob.row(0).sum() == doctest::Approx(1.0));
    if (i == 0) {
      double manual = p.rpn_reg(3, 1);
      for (int k = 0; k < 3; ++k) manual += x(0, k) * p.rpn_reg(k, 1);
      CHECK(out.rpn_delta(0, 1) == doctest::Approx(manual));
    }
  }
}

TEST_CASE("per proposal losses equal the hand-written forward pass") {
  Rng rng(8);
  const Toy t = toy(rng);
  const auto p = oracle::random_params(5, 3, 0.5, rng);
  const auto sup = make_supervision(t.x, t.boxes, t.targets, 0.5);
  const auto got = foreground_losses(p, sup);
  const auto want = oracle::manual_terms(p, t.x, t.boxes, t.targets, 0.5);
  std::size_t k = 0;
  for (std::size_t r = 0; r < want.size(); ++r) {
    if (want[r].target < 0) continue;
    REQUIRE(k < got.size());
    CHECK(got[k].proposal_index == static_cast<int>(r));
    CHECK(got[k].rpn_cls == doctest::Approx(want[r].rpn_cls).epsilon(1e-12));
    CHECK(got[k].roi_cls == doctest::Approx(want[r].roi_cls).epsilon(1e-12));
    CHECK(got[k].rpn_reg == doctest::Approx(want[r].rpn_reg).epsilon(1e-12));
    CHECK(got[k].roi_reg == doctest::Approx(want[r].roi_reg).epsilon(1e-12));
    ++k;
  }
  CHECK(k == got.size());
}

TEST_CASE("perfect predictions give vanishing loss") {
  // proposal equals the target: zero deltas needed, huge logits for the class
  const int D = 2, C = 2;
  auto p = DetectorParams::zeros(D, C);
  p.rpn_cls(D, 1) = 60;
  p.roi_cls(D, 1) = 60;
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(1, D);
  std::vector<Box> boxes = {Box{5, 5, 10, 10}};
  auto sup = make_supervision(x, boxes, {Instance{Box{5, 5, 10, 10}, 1}}, 0.5);
  const auto l = loss_and_grad(p, std::span(&sup, 1), nullptr);
  CHECK(l.rpn_reg == 0.0);
  CHECK(l.roi_reg == 0.0);
  CHECK(l.roi_cls < 1e-12);
  CHECK(l.rpn_cls < 1e-12);
}

TEST_CASE("gates zero the classification terms") {
  Rng rng(12);
  Toy t = toy(rng);
  const auto p = oracle::random_params(5, 3, 0.5, rng);
  for (auto& i : t.targets) i.lambda_cls = 0;
  auto sup = make_supervision(t.x, t.boxes, t.targets, 0.5, false);
  DetectorParams g;
  const auto l = loss_and_grad(p, std::span(&sup, 1), &g);
  CHECK(l.rpn_cls == 0.0);
  CHECK(l.roi_cls == 0.0);
  CHECK(l.roi_reg > 0.0);
  CHECK(g.rpn_cls.cwiseAbs().maxCoeff() == 0.0);
  CHECK(g.roi_cls.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("gradient matches finite differences") {
  oracle::SuiteConfig cfg;
  cfg.gradient_cases = 2;
  const auto rep = oracle::check_gradients(cfg);
  for (const auto& r : rep) CHECK(r.implementation_value < 1e-4);
}

TEST_CASE("training with zero regularization weight equals plain training") {
  Rng rng(14);
  const Toy t = toy(rng);
  auto sup = make_supervision(t.x, t.boxes, t.targets, 0.5);
  auto reg = make_supervision(t.x, t.boxes, t.targets, 0.5, false);
  const auto p0 = DetectorParams::zeros(5, 3);
  TrainOptions o{50, 0.5, 0.0, 1};
  const auto a = train(p0, std::span(&sup, 1), {}, o);
  const auto b = train(p0, std::span(&sup, 1), std::span(&reg, 1), o);
  CHECK(a.params == b.params);
  CHECK(a.loss_history == b.loss_history);
}

TEST_CASE("longer training does not increase the loss on a convex toy") {
  Rng rng(15);
  const Toy t = toy(rng);
  auto sup = make_supervision(t.x, t.boxes, t.targets, 0.5);
  const auto p0 = DetectorParams::zeros(5, 3);
  const auto a = train(p0, std::span(&sup, 1), {}, TrainOptions{100, 0.3, 0.0, 1});
  const auto b = train(p0, std::span(&sup, 1), {}, TrainOptions{200, 0.3, 0.0, 1});
  CHECK(b.loss_history.back() <= a.loss_history.back() + 1e-6);
  CHECK_THROWS_AS(train(p0, std::span(&sup, 1), {}, TrainOptions{1, 0.0, 0.0, 1}), Error);
}

TEST_CASE("detect_all thresholds by score") {
  auto p = DetectorParams::zeros(2, 2);
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(2, 2);
  std::vector<Box> boxes = {Box{5, 5, 10, 10}, Box{50, 50, 10, 10}};
  CHECK(detect_all(p, x, boxes, 0.5).empty());
  CHECK(detect_all(p, x, boxes, 0.0).size() == 4);
}
