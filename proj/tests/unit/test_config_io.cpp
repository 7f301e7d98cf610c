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

#include <filesystem>
#include <sstream>

#include "doctest.h"
#include "helpers.hpp"
#include "oracles.hpp"
#include "w2n/io.hpp"

using namespace w2n;

TEST_CASE("config overrides and round trip") {
  RunConfig c;
  apply_override(c, "la.lambda_re=0.25");
  apply_override(c, "split_mode=ideal");
  apply_override(c, "p=0.4");
  apply_override(c, "world.part_classes=1,3");
  CHECK(c.la.lambda_re == 0.25);
  CHECK(c.split_mode == SplitMode::kIdeal);
  CHECK(c.p == 0.4);
  CHECK(c.world.part_classes == std::vector<int>{1, 3});
  CHECK(get_config_value(c, "split.mode") == "ideal");
  std::stringstream ss;
  write_config(ss, c);
  RunConfig back = parse_config(ss);
  std::stringstream again;
  write_config(again, back);
  CHECK(ss.str() == again.str());
  CHECK(back.world.part_classes == c.world.part_classes);
  for (const auto& k : config_keys()) CHECK(ss.str().find(k + "=") != std::string::npos);
}

TEST_CASE("config errors") {
  RunConfig c;
  CHECK_THROWS_AS(apply_override(c, "bogus.key=1"), Error);
  CHECK_THROWS_AS(apply_override(c, "la.steps=abc"), Error);
  CHECK_THROWS_AS(apply_override(c, "la.steps"), Error);
  std::istringstream is("# comment\nT = 3\n\nseed = 11\n");
  const auto p = parse_config(is);
  CHECK(p.T == 3);
  CHECK(p.seed == 11);
  CHECK(parse_double(format_double(0.1)) == 0.1);
  CHECK_THROWS_AS(load_config("/nonexistent/path.cfg"), Error);
}

TEST_CASE("dataset, pseudo and params round trip") {
  const Dataset ds = generate_world(testing::small_world(5));
  std::stringstream a;
  write_dataset(a, ds);
  const Dataset back = read_dataset(a);
  std::stringstream b;
  write_dataset(b, back);
  CHECK(a.str() == b.str());
  REQUIRE(back.images.size() == ds.images.size());
  CHECK(back.images[3].proposals.features == ds.images[3].proposals.features);
  CHECK(back.images[3].scene.objects == ds.images[3].scene.objects);

  PseudoDataset pseudo = pseudo_from_ground_truth(ds);
  pseudo.images[0][0].lambda_reg = 0;
  std::stringstream c;
  write_pseudo(c, pseudo);
  CHECK(read_pseudo(c) == pseudo);

  Rng rng(3);
  const auto params = oracle::random_params(7, 3, 1.0, rng);
  const auto dir = std::filesystem::temp_directory_path() / "w2n_io_test";
  std::filesystem::create_directories(dir);
  save_params((dir / "p.txt").string(), params);
  CHECK(load_params((dir / "p.txt").string()) == params);
  std::filesystem::remove_all(dir);

  std::istringstream junk("w2n-params 2\n");
  CHECK_THROWS_AS(read_params(junk), Error);
  CHECK_THROWS_AS(load_dataset("/nonexistent/world.txt"), Error);
}
