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

#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "w2n/detector.hpp"
#include "w2n/geometry.hpp"
#include "w2n/pseudo.hpp"
#include "w2n/split.hpp"
#include "w2n/world.hpp"

// Brute-force references for the test suites. Nothing in here calls the
// implementation it is compared against.
namespace w2n::oracle {

struct OracleReport {
  std::string case_id;
  double reference_value = 0.0;
  double implementation_value = 0.0;
  double abs_diff = 0.0;
  double rel_diff = 0.0;
};

OracleReport make_report(std::string case_id, double reference, double implementation);
void write_reports(std::ostream& os, const std::vector<OracleReport>& reports);

// Thrown on the first mismatch; `dump` holds the failing case as key=value
// lines for replay.
struct OracleFailure : std::runtime_error {
  OracleFailure(const std::string& what, std::string dump)
      : std::runtime_error(what), dump(std::move(dump)) {}
  std::string dump;
};

double ref_iou(const Box& a, const Box& b);

// Keeps a detection iff no better-ranked kept detection of its class overlaps
// it at IoU > t. Ranking: score descending, then input index.
std::vector<Detection> ref_nms(const std::vector<Detection>& dets, double t);

// Checks every subset of the records and returns the keys of the unique
// subset of size max(1, floor(p*n)) whose members all rank before every
// non-member by (loss, key).
std::vector<int> top_p_exhaustive(const std::vector<double>& losses, const std::vector<int>& keys,
                                  double p);

// (image, instance) pairs whose box overlaps a same-class GT box at IoU > 0.5.
std::vector<std::pair<int, int>> ideal_pairs(const PseudoDataset& pseudo, const Dataset& ds);

// Per-proposal loss terms rebuilt from a hand-written forward pass.
struct ManualTerms {
  int target = -1;
  double rpn_cls = 0.0, rpn_reg = 0.0, roi_cls = 0.0, roi_reg = 0.0;
};
std::vector<ManualTerms> manual_terms(const DetectorParams& params, const Eigen::MatrixXd& features,
                                      const std::vector<Box>& boxes,
                                      const std::vector<Instance>& targets, double tau);

// Central finite differences of f at p over every parameter entry; returns
// the max relative error against `analytic`, with relative error measured as
// |a - n| / max(1e-6, |a| + |n|).
double max_fd_rel_error(const std::function<double(const DetectorParams&)>& f,
                        const DetectorParams& p, const DetectorParams& analytic, double eps);

struct SuiteConfig {
  std::uint64_t seed = 20260101;
  int nms_cases = 10000;
  int nms_max_n = 8;
  int iou_cases = 100000;
  int coding_cases = 10000;
  int split_max_n = 12;
  int split_cases_per_n = 40;
  int ideal_instances = 1000;
  int gradient_cases = 10;
};

// Runs every oracle against the implementation; throws OracleFailure on the
// first mismatch beyond tolerance.
std::vector<OracleReport> check_all(const SuiteConfig& cfg);

// Individual suites used by check_all.
std::vector<OracleReport> check_nms(const SuiteConfig& cfg);
std::vector<OracleReport> check_iou(const SuiteConfig& cfg);
std::vector<OracleReport> check_coding(const SuiteConfig& cfg);
std::vector<OracleReport> check_split(const SuiteConfig& cfg);
std::vector<OracleReport> check_ideal(const SuiteConfig& cfg);
std::vector<OracleReport> check_gradients(const SuiteConfig& cfg);

// Random helpers shared by the suites and tests.
Box random_box(Rng& rng, double extent = 100.0, double min_size = 1.0, double max_size = 40.0);
DetectorParams random_params(int dim, int classes, double scale, Rng& rng);
Eigen::MatrixXd random_features(int rows, int dim, Rng& rng);

}  // namespace w2n::oracle
