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

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "w2n/w2n.h"

namespace {

namespace fs = std::filesystem;

struct CliError {
  std::string message;
};

void check(w2n_status s) {
  if (s != W2N_OK) throw CliError{std::string(w2n_status_name(s)) + ": " + w2n_last_error()};
}

struct ConfigDeleter {
  void operator()(w2n_config* c) const { w2n_config_free(c); }
};
struct WorldDeleter {
  void operator()(w2n_world* w) const { w2n_world_free(w); }
};
struct ResultDeleter {
  void operator()(w2n_result* r) const { w2n_result_free(r); }
};
using ConfigPtr = std::unique_ptr<w2n_config, ConfigDeleter>;
using WorldPtr = std::unique_ptr<w2n_world, WorldDeleter>;
using ResultPtr = std::unique_ptr<w2n_result, ResultDeleter>;

struct Common {
  std::string config;
  std::vector<std::string> overrides;
  std::string out = "out";
  int threads = 1;
  bool verbose = false;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config, "config file, or 'defaults'")->required();
  sub->add_option("--set,overrides", c.overrides, "key=value overrides");
  sub->add_option("--out", c.out, "output directory");
  sub->add_option("--threads", c.threads, "worker threads")->check(CLI::Range(1, 256));
  sub->add_flag("-v,--verbose", c.verbose, "log progress to stderr");
}

ConfigPtr resolve(const Common& c) {
  w2n_config* raw = nullptr;
  if (c.config == "defaults")
    check(w2n_config_new(&raw));
  else
    check(w2n_config_load(c.config.c_str(), &raw));
  ConfigPtr cfg(raw);
  for (const auto& o : c.overrides) check(w2n_config_apply(cfg.get(), o.c_str()));
  check(w2n_config_validate(cfg.get()));
  return cfg;
}

ConfigPtr clone(const w2n_config* cfg) {
  w2n_config* raw = nullptr;
  check(w2n_config_clone(cfg, &raw));
  return ConfigPtr(raw);
}

fs::path prepare_out(const Common& c, const w2n_config* cfg) {
  const fs::path dir(c.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw CliError{"cannot create output directory '" + dir.string() + "'"};
  check(w2n_config_save(cfg, (dir / "config.txt").string().c_str()));
  return dir;
}

std::vector<w2n_report> reports(const w2n_result* r) {
  size_t n = 0;
  check(w2n_result_report_count(r, &n));
  std::vector<w2n_report> rows(n);
  for (size_t i = 0; i < n; ++i) check(w2n_result_report(r, i, &rows[i]));
  return rows;
}

void print_reports(const std::vector<w2n_report>& rows) {
  std::printf("t,mean_iou,map,corloc,labeled_fraction\n");
  for (const auto& r : rows)
    std::printf("%d,%.6f,%.6f,%.6f,%.6f\n", r.t, r.mean_iou, r.map, r.corloc, r.labeled_fraction);
}

std::string fmt17(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

int cmd_gen_world(const Common& c) {
  auto cfg = resolve(c);
  const fs::path dir = prepare_out(c, cfg.get());
  w2n_world* raw = nullptr;
  check(w2n_world_generate(cfg.get(), c.threads, &raw));
  WorldPtr world(raw);
  check(w2n_world_save(world.get(), (dir / "world.txt").string().c_str()));
  check(w2n_test_world_generate(cfg.get(), c.threads, &raw));
  WorldPtr test(raw);
  check(w2n_world_save(test.get(), (dir / "test_world.txt").string().c_str()));
  size_t n = 0;
  check(w2n_world_image_count(world.get(), &n));
  std::printf("wrote %zu training images to %s\n", n, (dir / "world.txt").string().c_str());
  return 0;
}

int cmd_run(const Common& c) {
  auto cfg = resolve(c);
  const fs::path dir = prepare_out(c, cfg.get());
  w2n_result* raw = nullptr;
  check(w2n_run(cfg.get(), c.threads, &raw));
  ResultPtr res(raw);
  check(w2n_result_write(res.get(), cfg.get(), dir.string().c_str()));
  print_reports(reports(res.get()));
  return 0;
}

struct Variant {
  std::string label;
  ConfigPtr cfg;
  // Report row taken from the run; -1 keeps every row.
  int row = -1;
};

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(item);
  return out;
}

int cmd_ablate(const Common& c, const std::string& sweep, const std::string& preset) {
  auto base = resolve(c);
  const fs::path dir = prepare_out(c, base.get());
  std::vector<Variant> variants;
  if (!sweep.empty()) {
    const auto eq = sweep.find('=');
    if (eq == std::string::npos || eq == 0)
      throw CliError{"--sweep expects key=v1,v2,..."};
    const std::string key = sweep.substr(0, eq);
    for (const auto& v : split_list(sweep.substr(eq + 1))) {
      Variant var{key + "=" + v, clone(base.get())};
      check(w2n_config_set(var.cfg.get(), key.c_str(), v.c_str()));
      check(w2n_config_validate(var.cfg.get()));
      variants.push_back(std::move(var));
    }
  } else if (preset == "modules") {
    auto make = [&](const char* label, std::vector<std::string> sets, int row) {
      Variant v{label, clone(base.get()), row};
      for (const auto& s : sets) check(w2n_config_apply(v.cfg.get(), s.c_str()));
      variants.push_back(std::move(v));
    };
    make("baseline", {"T=0", "la.lambda_re=0"}, -1);
    make("la_only", {"T=0"}, -1);
    make("ssl_only", {"T=1", "la.lambda_re=0"}, -1);
    make("full", {"T=2"}, -1);
  } else {
    throw CliError{"ablate needs --sweep key=v1,v2,... or --preset modules"};
  }

  std::ofstream table(dir / "ablation.csv");
  if (!table) throw CliError{"cannot write ablation.csv"};
  table << "variant,t,mean_iou,map,corloc,labeled_fraction\n";
  std::printf("variant,t,mean_iou,map,corloc,labeled_fraction\n");
  auto emit = [&](const std::string& label, const w2n_report& r) {
    table << label << ',' << r.t << ',' << fmt17(r.mean_iou) << ',' << fmt17(r.map) << ','
          << fmt17(r.corloc) << ',' << fmt17(r.labeled_fraction) << '\n';
    std::printf("%s,%d,%.6f,%.6f,%.6f,%.6f\n", label.c_str(), r.t, r.mean_iou, r.map, r.corloc,
                r.labeled_fraction);
  };
  for (auto& v : variants) {
    w2n_result* raw = nullptr;
    check(w2n_run(v.cfg.get(), c.threads, &raw));
    ResultPtr res(raw);
    check(w2n_result_write(res.get(), v.cfg.get(), (dir / v.label).string().c_str()));
    const auto rows = reports(res.get());
    emit(v.label, rows.back());
    if (preset == "modules" && v.label == "full" && rows.size() > 2) emit("la_ssl", rows[1]);
  }
  return 0;
}

int cmd_split_audit(const Common& c) {
  auto cfg = resolve(c);
  const fs::path dir = prepare_out(c, cfg.get());
  const auto path = (dir / "split_audit.csv").string();
  check(w2n_split_audit(cfg.get(), c.threads, path.c_str()));
  std::printf("wrote %s\n", path.c_str());
  return 0;
}

int cmd_iou_curves(const Common& c) {
  auto cfg = resolve(c);
  const fs::path dir = prepare_out(c, cfg.get());
  const auto path = (dir / "iou_curves.csv").string();
  check(w2n_iou_curves(cfg.get(), c.threads, path.c_str()));
  std::printf("wrote %s\n", path.c_str());
  return 0;
}

int cmd_eval(const Common& c, const std::string& params, const std::string& pseudo) {
  auto cfg = resolve(c);
  const fs::path dir = prepare_out(c, cfg.get());
  w2n_report r{};
  check(w2n_eval(cfg.get(), params.c_str(), pseudo.empty() ? nullptr : pseudo.c_str(), c.threads,
                 &r));
  check(w2n_write_report_csv(&r, 1, (dir / "eval.csv").string().c_str()));
  print_reports({r});
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"w2n: weak-to-noisy label refinement on a synthetic detection world"};
  app.require_subcommand(1);
  Common gen, runc, abl, audit, curves, eval;
  std::string sweep, preset, params, pseudo;

  auto* s_gen = app.add_subcommand("gen-world", "generate and save the training and test worlds");
  add_common(s_gen, gen);
  auto* s_run = app.add_subcommand("run", "run the full refinement loop");
  add_common(s_run, runc);
  auto* s_abl = app.add_subcommand("ablate", "run one report per sweep value or preset variant");
  add_common(s_abl, abl);
  s_abl->add_option("--sweep", sweep, "key=v1,v2,... (split_mode and p are accepted)");
  s_abl->add_option("--preset", preset, "named variant set: modules")
      ->check(CLI::IsMember({"modules"}));
  auto* s_audit = app.add_subcommand("split-audit", "write the loss-based split table");
  add_common(s_audit, audit);
  auto* s_curves = app.add_subcommand("iou-curves", "write IoU curves with and without regularization");
  add_common(s_curves, curves);
  auto* s_eval = app.add_subcommand("eval", "evaluate saved detector params");
  add_common(s_eval, eval);
  s_eval->add_option("--params", params, "params file")->required();
  s_eval->add_option("--pseudo", pseudo, "pseudo label file for mean IoU");

  try {
    app.parse(argc, argv);
  } catch (const CLI::RequiredError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    const CLI::App* shown = &app;
    for (const auto* sub : app.get_subcommands()) shown = sub;
    std::fprintf(stderr, "%s", shown->help().c_str());
    return 2;
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  auto active = [&](const Common& c) { return c.verbose; };
  const bool verbose = active(gen) || active(runc) || active(abl) || active(audit) ||
                       active(curves) || active(eval);
  w2n_set_log_level(verbose ? 1 : 2);
  try {
    if (*s_gen) return cmd_gen_world(gen);
    if (*s_run) return cmd_run(runc);
    if (*s_abl) return cmd_ablate(abl, sweep, preset);
    if (*s_audit) return cmd_split_audit(audit);
    if (*s_curves) return cmd_iou_curves(curves);
    if (*s_eval) return cmd_eval(eval, params, pseudo);
  } catch (const CliError& e) {
    std::fprintf(stderr, "error: %s\n", e.message.c_str());
    return 1;
  }
  return 1;
}
