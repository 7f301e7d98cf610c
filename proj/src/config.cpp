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

#include "w2n/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <istream>
#include <ostream>
#include <sstream>

#include "w2n/error.hpp"

namespace w2n {
namespace {

struct Entry {
  const char* key;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

[[noreturn]] void bad_value(const std::string& key, const std::string& value) {
  fail(ErrorKind::kInvalidArgument, "invalid value for '" + key + "': '" + value + "'");
}

long long parse_int(const std::string& key, const std::string& s) {
  long long v = 0;
  const auto* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || p != end) bad_value(key, s);
  return v;
}

std::uint64_t parse_u64(const std::string& key, const std::string& s) {
  std::uint64_t v = 0;
  const auto* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || p != end) bad_value(key, s);
  return v;
}

double parse_real(const std::string& key, const std::string& s) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || p != end) bad_value(key, s);
  return v;
}

#define W2N_REAL(name, member)                                               \
  Entry {                                                                    \
    name, [](const RunConfig& c) { return format_double(c.member); },        \
        [](RunConfig& c, const std::string& v) { c.member = parse_real(name, v); } \
  }
#define W2N_INT(name, member)                                                          \
  Entry {                                                                              \
    name, [](const RunConfig& c) { return std::to_string(c.member); },                 \
        [](RunConfig& c, const std::string& v) {                                       \
          c.member = static_cast<decltype(c.member)>(parse_int(name, v));              \
        }                                                                              \
  }
#define W2N_U64(name, member)                                                 \
  Entry {                                                                     \
    name, [](const RunConfig& c) { return std::to_string(c.member); },        \
        [](RunConfig& c, const std::string& v) { c.member = parse_u64(name, v); } \
  }

const std::vector<Entry>& registry() {
  static const std::vector<Entry> entries = {
      W2N_INT("world.num_images", world.num_images),
      W2N_INT("world.classes", world.classes),
      W2N_INT("world.min_objects", world.min_objects),
      W2N_INT("world.max_objects", world.max_objects),
      W2N_REAL("world.canvas_width", world.canvas_width),
      W2N_REAL("world.canvas_height", world.canvas_height),
      W2N_REAL("world.min_object_size", world.min_object_size),
      W2N_REAL("world.max_object_size", world.max_object_size),
      W2N_REAL("world.max_object_overlap", world.max_object_overlap),
      W2N_REAL("world.part_fraction", world.part_fraction),
      Entry{"world.part_classes",
            [](const RunConfig& c) {
              std::string s;
              for (std::size_t i = 0; i < c.world.part_classes.size(); ++i)
                s += (i ? "," : "") + std::to_string(c.world.part_classes[i]);
              return s;
            },
            [](RunConfig& c, const std::string& v) {
              std::vector<int> out;
              std::stringstream ss(v);
              std::string item;
              while (std::getline(ss, item, ','))
                if (!item.empty())
                  out.push_back(static_cast<int>(parse_int("world.part_classes", item)));
              c.world.part_classes = std::move(out);
            }},
      W2N_REAL("world.part_presence", world.part_presence),
      W2N_INT("world.proposals_per_image", world.proposals_per_image),
      W2N_REAL("world.object_proposal_fraction", world.object_proposal_fraction),
      W2N_REAL("world.part_proposal_fraction", world.part_proposal_fraction),
      W2N_INT("world.feature_dim", world.feature_dim),
      W2N_REAL("world.feature_noise", world.feature_noise),
      W2N_REAL("world.object_evidence_scale", world.object_evidence_scale),
      W2N_REAL("world.part_evidence_scale", world.part_evidence_scale),
      W2N_U64("world.seed", world.seed),
      W2N_REAL("noise.part_rate", noise.part_rate),
      W2N_REAL("noise.mislabel_rate", noise.mislabel_rate),
      W2N_REAL("noise.drop_rate", noise.drop_rate),
      W2N_REAL("noise.fp_rate", noise.fp_rate),
      W2N_REAL("noise.accurate_score_lo", noise.accurate_score_lo),
      W2N_REAL("noise.accurate_score_hi", noise.accurate_score_hi),
      W2N_REAL("noise.part_score_lo", noise.part_score_lo),
      W2N_REAL("noise.part_score_hi", noise.part_score_hi),
      W2N_REAL("noise.mislabel_score_lo", noise.mislabel_score_lo),
      W2N_REAL("noise.mislabel_score_hi", noise.mislabel_score_hi),
      W2N_REAL("noise.fp_score_lo", noise.fp_score_lo),
      W2N_REAL("noise.fp_score_hi", noise.fp_score_hi),
      W2N_REAL("pge.t_nms", pge.t_nms),
      W2N_REAL("pge.t_score", pge.t_score),
      W2N_REAL("pge.t_fusion", pge.t_fusion),
      W2N_REAL("la.tau_score", la.tau_score),
      W2N_REAL("la.tau_assign", la.tau_assign),
      W2N_REAL("la.lambda_re", la.lambda_re),
      W2N_REAL("la.alpha", la.alpha),
      W2N_REAL("la.beta", la.beta),
      W2N_INT("la.steps", la.steps),
      W2N_REAL("la.lr", la.lr),
      Entry{"split.mode", [](const RunConfig& c) { return std::string(to_string(c.split_mode)); },
            [](RunConfig& c, const std::string& v) {
              try {
                c.split_mode = parse_split_mode(v);
              } catch (const Error&) {
                bad_value("split.mode", v);
              }
            }},
      W2N_REAL("split.p", p),
      W2N_REAL("ssod.lambda_u", ssod.lambda_u),
      W2N_REAL("ssod.teacher_momentum", ssod.teacher_momentum),
      W2N_REAL("ssod.pseudo_score_threshold", ssod.pseudo_score_threshold),
      W2N_INT("ssod.jitter_samples", ssod.jitter_samples),
      W2N_REAL("ssod.jitter_variance_threshold", ssod.jitter_variance_threshold),
      W2N_INT("ssod.steps", ssod.steps),
      W2N_REAL("ssod.lr", ssod.lr),
      W2N_INT("ssod.labeled_batch", ssod.labeled_batch),
      W2N_INT("ssod.unlabeled_batch", ssod.unlabeled_batch),
      W2N_REAL("ssod.strong_noise", ssod.strong_noise),
      W2N_REAL("ssod.jitter_shift", ssod.jitter_shift),
      W2N_REAL("ssod.jitter_scale_lo", ssod.jitter_scale_lo),
      W2N_REAL("ssod.jitter_scale_hi", ssod.jitter_scale_hi),
      W2N_REAL("ssod.pseudo_nms", ssod.pseudo_nms),
      W2N_REAL("ssod.tau_assign", ssod.tau_assign),
      W2N_INT("T", T),
      W2N_U64("seed", seed),
      W2N_INT("test_images", test_images),
      W2N_REAL("eval_nms", eval_nms),
      W2N_INT("curve_interval", curve_interval),
      W2N_INT("curve_samples", curve_samples),
  };
  return entries;
}

const Entry& find(const std::string& key) {
  const std::string k = canonical_key(key);
  for (const auto& e : registry())
    if (k == e.key) return e;
  fail(ErrorKind::kInvalidArgument, "unknown config key '" + key + "'");
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

double parse_double(const std::string& text) { return parse_real("value", text); }

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& e : registry()) keys.emplace_back(e.key);
  return keys;
}

std::string canonical_key(const std::string& key) {
  if (key == "split_mode") return "split.mode";
  if (key == "p") return "split.p";
  return key;
}

void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value) {
  find(key).set(cfg, trim(value));
}

std::string get_config_value(const RunConfig& cfg, const std::string& key) {
  return find(key).get(cfg);
}

void apply_override(RunConfig& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos)
    fail(ErrorKind::kInvalidArgument, "override '" + assignment + "' is not key=value");
  set_config_value(cfg, trim(assignment.substr(0, eq)), assignment.substr(eq + 1));
}

RunConfig parse_config(std::istream& is, RunConfig base) {
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (t.find('=') == std::string::npos)
      fail(ErrorKind::kParse, "config line " + std::to_string(lineno) + " is not key=value");
    apply_override(base, t);
  }
  return base;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kIo, "cannot open config '" + path + "'");
  return parse_config(in);
}

void write_config(std::ostream& os, const RunConfig& cfg) {
  for (const auto& e : registry()) os << e.key << '=' << e.get(cfg) << '\n';
}

}  // namespace w2n
