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
#include <vector>

#include "w2n/pipeline.hpp"

namespace w2n {

// Flat key=value configuration with section prefixes (world.seed=7).
std::vector<std::string> config_keys();

// Maps the short sweep names (split_mode, p) to their full keys.
std::string canonical_key(const std::string& key);

// Throws kInvalidArgument naming the key when it is unknown or the value does
// not parse.
void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value);
std::string get_config_value(const RunConfig& cfg, const std::string& key);

// "key=value".
void apply_override(RunConfig& cfg, const std::string& assignment);

// Reads key=value lines on top of `base`. Blank lines and lines starting
// with '#' are skipped.
RunConfig parse_config(std::istream& is, RunConfig base = {});
RunConfig load_config(const std::string& path);

// Every key, resolved, in registry order.
void write_config(std::ostream& os, const RunConfig& cfg);

// Shortest text that reads back to the same double.
std::string format_double(double v);
double parse_double(const std::string& text);

}  // namespace w2n
