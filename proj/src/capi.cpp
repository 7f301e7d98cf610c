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

#include "w2n/w2n.h"

#include <cstring>
#include <exception>
#include <filesystem>
#include <fstream>
#include <new>
#include <string>

#include "w2n/config.hpp"
#include "w2n/error.hpp"
#include "w2n/io.hpp"
#include "w2n/la.hpp"
#include "w2n/log.hpp"
#include "w2n/pipeline.hpp"

struct w2n_config {
  w2n::RunConfig cfg;
};
struct w2n_world {
  w2n::Dataset ds;
};
struct w2n_result {
  w2n::RunResult res;
};

namespace {

thread_local std::string g_last_error;

w2n_status to_status(w2n::ErrorKind k) {
  switch (k) {
    case w2n::ErrorKind::kInvalidArgument: return W2N_ERR_INVALID_ARGUMENT;
    case w2n::ErrorKind::kInfeasibleConfig: return W2N_ERR_INFEASIBLE_CONFIG;
    case w2n::ErrorKind::kDimensionMismatch: return W2N_ERR_DIMENSION_MISMATCH;
    case w2n::ErrorKind::kDivergence: return W2N_ERR_DIVERGENCE;
    case w2n::ErrorKind::kIo: return W2N_ERR_IO;
    case w2n::ErrorKind::kParse: return W2N_ERR_PARSE;
    case w2n::ErrorKind::kMissingGroundTruth: return W2N_ERR_MISSING_GROUND_TRUTH;
  }
  return W2N_ERR_INTERNAL;
}

template <class F>
w2n_status guard(F&& fn) {
  try {
    fn();
    g_last_error.clear();
    return W2N_OK;
  } catch (const w2n::Error& e) {
    g_last_error = e.what();
    return to_status(e.kind());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
  } catch (const std::exception& e) {
    g_last_error = e.what();
  } catch (...) {
    g_last_error = "unknown error";
  }
  return W2N_ERR_INTERNAL;
}

template <class T>
void need(const T* p, const char* what) {
  if (!p) w2n::fail(w2n::ErrorKind::kInvalidArgument, std::string(what) + " is null");
}

w2n::IterationReport from_c(const w2n_report& r) {
  return {r.t, r.mean_iou, r.map, r.corloc, r.labeled_fraction};
}
w2n_report to_c(const w2n::IterationReport& r) {
  return {r.t, r.mean_iou, r.map, r.corloc, r.labeled_fraction};
}

template <class F>
void write_file(const std::filesystem::path& path, F&& fn) {
  std::ofstream f(path);
  if (!f) w2n::fail(w2n::ErrorKind::kIo, "cannot open '" + path.string() + "'");
  fn(f);
  if (!f) w2n::fail(w2n::ErrorKind::kIo, "write to '" + path.string() + "' failed");
}

}  // namespace

extern "C" {

const char* w2n_version(void) { return "0.1.0"; }

const char* w2n_last_error(void) { return g_last_error.c_str(); }

const char* w2n_status_name(w2n_status s) {
  switch (s) {
    case W2N_OK: return "ok";
    case W2N_ERR_INVALID_ARGUMENT: return "invalid argument";
    case W2N_ERR_INFEASIBLE_CONFIG: return "infeasible config";
    case W2N_ERR_DIMENSION_MISMATCH: return "dimension mismatch";
    case W2N_ERR_DIVERGENCE: return "divergence";
    case W2N_ERR_IO: return "io error";
    case W2N_ERR_PARSE: return "parse error";
    case W2N_ERR_MISSING_GROUND_TRUTH: return "missing ground truth";
    case W2N_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

w2n_status w2n_set_log_level(int level) {
  return guard([&] {
    if (level < 0 || level > 4) w2n::fail(w2n::ErrorKind::kInvalidArgument, "log level out of range");
    w2n::set_log_level(static_cast<w2n::LogLevel>(level));
  });
}

w2n_status w2n_config_new(w2n_config** out) {
  return guard([&] {
    need(out, "out");
    *out = new w2n_config{};
  });
}

w2n_status w2n_config_load(const char* path, w2n_config** out) {
  return guard([&] {
    need(path, "path");
    need(out, "out");
    auto cfg = w2n::load_config(path);
    *out = new w2n_config{std::move(cfg)};
  });
}

w2n_status w2n_config_clone(const w2n_config* cfg, w2n_config** out) {
  return guard([&] {
    need(cfg, "config");
    need(out, "out");
    *out = new w2n_config{*cfg};
  });
}

w2n_status w2n_config_set(w2n_config* cfg, const char* key, const char* value) {
  return guard([&] {
    need(cfg, "config");
    need(key, "key");
    need(value, "value");
    w2n::set_config_value(cfg->cfg, key, value);
  });
}

w2n_status w2n_config_apply(w2n_config* cfg, const char* assignment) {
  return guard([&] {
    need(cfg, "config");
    need(assignment, "assignment");
    w2n::apply_override(cfg->cfg, assignment);
  });
}

w2n_status w2n_config_get(const w2n_config* cfg, const char* key, char* buf, size_t capacity,
                          size_t* needed) {
  return guard([&] {
    need(cfg, "config");
    need(key, "key");
    const std::string v = w2n::get_config_value(cfg->cfg, key);
    if (needed) *needed = v.size();
    if (buf && capacity > v.size()) std::memcpy(buf, v.c_str(), v.size() + 1);
    else if (buf && capacity > 0)
      w2n::fail(w2n::ErrorKind::kInvalidArgument, "buffer too small for '" + std::string(key) + "'");
  });
}

w2n_status w2n_config_save(const w2n_config* cfg, const char* path) {
  return guard([&] {
    need(cfg, "config");
    need(path, "path");
    write_file(path, [&](std::ostream& os) { w2n::write_config(os, cfg->cfg); });
  });
}

w2n_status w2n_config_validate(const w2n_config* cfg) {
  return guard([&] {
    need(cfg, "config");
    w2n::validate(cfg->cfg);
  });
}

void w2n_config_free(w2n_config* cfg) { delete cfg; }

w2n_status w2n_world_generate(const w2n_config* cfg, int threads, w2n_world** out) {
  return guard([&] {
    need(cfg, "config");
    need(out, "out");
    auto ds = w2n::generate_world(cfg->cfg.world, threads);
    *out = new w2n_world{std::move(ds)};
  });
}

w2n_status w2n_test_world_generate(const w2n_config* cfg, int threads, w2n_world** out) {
  return guard([&] {
    need(cfg, "config");
    need(out, "out");
    auto ds = w2n::generate_world(w2n::test_world_config(cfg->cfg), threads);
    *out = new w2n_world{std::move(ds)};
  });
}

w2n_status w2n_world_load(const char* path, w2n_world** out) {
  return guard([&] {
    need(path, "path");
    need(out, "out");
    auto ds = w2n::load_dataset(path);
    *out = new w2n_world{std::move(ds)};
  });
}

w2n_status w2n_world_save(const w2n_world* world, const char* path) {
  return guard([&] {
    need(world, "world");
    need(path, "path");
    w2n::save_dataset(path, world->ds);
  });
}

w2n_status w2n_world_image_count(const w2n_world* world, size_t* out) {
  return guard([&] {
    need(world, "world");
    need(out, "out");
    *out = world->ds.images.size();
  });
}

void w2n_world_free(w2n_world* world) { delete world; }

w2n_status w2n_run(const w2n_config* cfg, int threads, w2n_result** out) {
  return guard([&] {
    need(cfg, "config");
    need(out, "out");
    auto res = w2n::run(cfg->cfg, threads);
    *out = new w2n_result{std::move(res)};
  });
}

w2n_status w2n_result_report_count(const w2n_result* result, size_t* out) {
  return guard([&] {
    need(result, "result");
    need(out, "out");
    *out = result->res.reports.size();
  });
}

w2n_status w2n_result_report(const w2n_result* result, size_t row, w2n_report* out) {
  return guard([&] {
    need(result, "result");
    need(out, "out");
    if (row >= result->res.reports.size())
      w2n::fail(w2n::ErrorKind::kInvalidArgument, "report row out of range");
    *out = to_c(result->res.reports[row]);
  });
}

w2n_status w2n_result_write(const w2n_result* result, const w2n_config* cfg,
                            const char* out_dir) {
  return guard([&] {
    need(result, "result");
    need(cfg, "config");
    need(out_dir, "out_dir");
    namespace fs = std::filesystem;
    const fs::path dir(out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) w2n::fail(w2n::ErrorKind::kIo, "cannot create '" + dir.string() + "'");
    const auto& r = result->res;
    write_file(dir / "report.csv", [&](std::ostream& os) { w2n::write_report_csv(os, r.reports); });
    write_file(dir / "summary.txt",
               [&](std::ostream& os) { w2n::write_report_summary(os, r.reports, cfg->cfg); });
    write_file(dir / "config.txt", [&](std::ostream& os) { w2n::write_config(os, cfg->cfg); });
    for (std::size_t t = 0; t < r.pseudo.size(); ++t)
      w2n::save_pseudo((dir / ("pseudo_" + std::to_string(t) + ".txt")).string(), r.pseudo[t]);
    for (std::size_t t = 0; t < r.params.size(); ++t)
      w2n::save_params((dir / ("params_" + std::to_string(t + 1) + ".txt")).string(), r.params[t]);
    w2n::save_params((dir / "params_final.txt").string(), r.final_params);
    for (std::size_t t = 0; t < r.iterations.size(); ++t) {
      const auto& art = r.iterations[t];
      const std::string tag = std::to_string(t + 1);
      if (!art.records.empty() || art.split.mode == w2n::SplitMode::kIdeal) {
        write_file(dir / ("split_audit_" + tag + ".csv"), [&](std::ostream& os) {
          w2n::write_split_audit(os, art.records, art.split);
        });
      }
      if (!art.ssod_log.empty()) {
        write_file(dir / ("ssod_log_" + tag + ".csv"),
                   [&](std::ostream& os) { w2n::write_ssod_log(os, art.ssod_log); });
      }
    }
  });
}

void w2n_result_free(w2n_result* result) { delete result; }

w2n_status w2n_iou_curves(const w2n_config* cfg, int threads, const char* csv_path) {
  return guard([&] {
    need(cfg, "config");
    need(csv_path, "path");
    const auto& c = cfg->cfg;
    w2n::validate(c);
    const auto ds = w2n::generate_world(c.world, threads);
    const auto xp = w2n::initial_pseudo_labels(ds, c, threads);
    const w2n::CurveOptions opt{c.curve_interval, c.curve_samples};
    const auto rows = w2n::emit_iou_curves(ds, xp, c.la, c.seed, threads, opt);
    write_file(csv_path, [&](std::ostream& os) { w2n::write_curve_csv(os, rows); });
  });
}

w2n_status w2n_split_audit(const w2n_config* cfg, int threads, const char* csv_path) {
  return guard([&] {
    need(cfg, "config");
    need(csv_path, "path");
    const auto& c = cfg->cfg;
    w2n::validate(c);
    const auto ds = w2n::generate_world(c.world, threads);
    const auto xp = w2n::initial_pseudo_labels(ds, c, threads);
    const std::uint64_t seed = w2n::derive_seed(c.seed, {0});
    const auto la = w2n::la_train(ds, xp, c.la, seed, threads);
    const auto refined = w2n::refine_labels(la.params, ds, c.pge, threads);
    std::vector<w2n::LossRecord> records;
    const auto split = w2n::split_dataset(la.params, ds, refined, c.la.tau_assign, c.split_mode,
                                          c.p, threads, &records);
    write_file(csv_path, [&](std::ostream& os) { w2n::write_split_audit(os, records, split); });
  });
}

w2n_status w2n_eval(const w2n_config* cfg, const char* params_path, const char* pseudo_path,
                    int threads, w2n_report* out) {
  return guard([&] {
    need(cfg, "config");
    need(params_path, "params path");
    need(out, "out");
    const auto& c = cfg->cfg;
    w2n::validate(c);
    const auto params = w2n::load_params(params_path);
    const auto train = w2n::generate_world(c.world, threads);
    const auto test = w2n::generate_world(w2n::test_world_config(c), threads);
    w2n::PseudoDataset pseudo;
    if (pseudo_path) pseudo = w2n::load_pseudo(pseudo_path);
    auto r = w2n::evaluate(params, train, test, pseudo, c.eval_nms, 0.0, 0, threads);
    *out = to_c(r);
  });
}

w2n_status w2n_write_report_csv(const w2n_report* rows, size_t count, const char* path) {
  return guard([&] {
    if (count > 0) need(rows, "rows");
    need(path, "path");
    std::vector<w2n::IterationReport> v;
    for (size_t i = 0; i < count; ++i) v.push_back(from_c(rows[i]));
    write_file(path, [&](std::ostream& os) { w2n::write_report_csv(os, v); });
  });
}

}  // extern "C"
