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

#include <iosfwd>
#include <string>

#include "w2n/detector.hpp"
#include "w2n/pseudo.hpp"
#include "w2n/world.hpp"

namespace w2n {

// Text formats with shortest round-trip numbers. Every reader throws
// kParse on malformed input.
//
// Dataset: header lines, then one line per image:
//   image <id> label <C flags> objects <k> {<cls> <x> <y> <w> <h> <has_part> [<px> <py> <pw> <ph>]}
//   proposals <m> dim <d> {<x> <y> <w> <h> <f_1> ... <f_d>}
void write_dataset(std::ostream& os, const Dataset& ds);
Dataset read_dataset(std::istream& is);

// Pseudo labels: one line per image,
//   image <i> <n> {<cls> <lambda_cls> <lambda_reg> <x> <y> <w> <h>}
void write_pseudo(std::ostream& os, const PseudoDataset& pseudo);
PseudoDataset read_pseudo(std::istream& is);

// Parameters: shape header, then each matrix as "<name> <rows> <cols>" and
// its row-major values on one line.
void write_params(std::ostream& os, const DetectorParams& params);
DetectorParams read_params(std::istream& is);

void save_dataset(const std::string& path, const Dataset& ds);
Dataset load_dataset(const std::string& path);
void save_pseudo(const std::string& path, const PseudoDataset& pseudo);
PseudoDataset load_pseudo(const std::string& path);
void save_params(const std::string& path, const DetectorParams& params);
DetectorParams load_params(const std::string& path);

}  // namespace w2n
