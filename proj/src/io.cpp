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

#include "w2n/io.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "w2n/config.hpp"
#include "w2n/error.hpp"

namespace w2n {
namespace {

constexpr const char* kDatasetMagic = "w2n-dataset 1";
constexpr const char* kPseudoMagic = "w2n-pseudo 1";
constexpr const char* kParamsMagic = "w2n-params 1";

class Tokens {
 public:
  explicit Tokens(const std::string& line) : in_(line) {}
  std::string word() {
    std::string w;
    if (!(in_ >> w)) fail(ErrorKind::kParse, "unexpected end of record");
    return w;
  }
  void expect(const char* w) {
    const std::string got = word();
    if (got != w) fail(ErrorKind::kParse, std::string("expected '") + w + "', got '" + got + "'");
  }
  double real() {
    const std::string w = word();
    double v = 0.0;
    auto [p, ec] = std::from_chars(w.data(), w.data() + w.size(), v);
    if (ec != std::errc() || p != w.data() + w.size())
      fail(ErrorKind::kParse, "bad number '" + w + "'");
    return v;
  }
  long long integer() {
    const std::string w = word();
    long long v = 0;
    auto [p, ec] = std::from_chars(w.data(), w.data() + w.size(), v);
    if (ec != std::errc() || p != w.data() + w.size())
      fail(ErrorKind::kParse, "bad integer '" + w + "'");
    return v;
  }
  std::size_t count() {
    const long long v = integer();
    if (v < 0) fail(ErrorKind::kParse, "negative count");
    return static_cast<std::size_t>(v);
  }
  void finish() {
    std::string extra;
    if (in_ >> extra) fail(ErrorKind::kParse, "trailing token '" + extra + "'");
  }

 private:
  std::istringstream in_;
};

std::string next_line(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) fail(ErrorKind::kParse, "unexpected end of file");
  return line;
}

void put(std::ostream& os, double v) { os << ' ' << format_double(v); }
void put(std::ostream& os, const Box& b) {
  put(os, b.x);
  put(os, b.y);
  put(os, b.w);
  put(os, b.h);
}
Box get_box(Tokens& t) {
  Box b;
  b.x = t.real();
  b.y = t.real();
  b.w = t.real();
  b.h = t.real();
  return b;
}

void check_header(std::istream& is, const char* magic) {
  if (next_line(is) != magic) fail(ErrorKind::kParse, std::string("missing header '") + magic + "'");
}

void write_matrix(std::ostream& os, const char* name, const Eigen::MatrixXd& m) {
  os << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
  bool first = true;
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (!first) os << ' ';
      os << format_double(m(r, c));
      first = false;
    }
  os << '\n';
}

Eigen::MatrixXd read_matrix(std::istream& is, const char* name, Eigen::Index rows,
                            Eigen::Index cols) {
  Tokens head(next_line(is));
  head.expect(name);
  if (static_cast<Eigen::Index>(head.count()) != rows ||
      static_cast<Eigen::Index>(head.count()) != cols)
    fail(ErrorKind::kParse, std::string("matrix '") + name + "' has the wrong shape");
  head.finish();
  Eigen::MatrixXd m(rows, cols);
  Tokens body(next_line(is));
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = body.real();
  body.finish();
  return m;
}

template <class F>
void with_file(const std::string& path, std::ios::openmode mode, F&& fn) {
  std::fstream f(path, mode);
  if (!f) fail(ErrorKind::kIo, "cannot open '" + path + "'");
  fn(f);
  if (!f && !(mode & std::ios::in)) fail(ErrorKind::kIo, "write to '" + path + "' failed");
}

}  // namespace

void write_dataset(std::ostream& os, const Dataset& ds) {
  os << kDatasetMagic << '\n';
  RunConfig cfg;
  cfg.world = ds.config;
  int world_keys = 0;
  for (const auto& k : config_keys()) world_keys += k.rfind("world.", 0) == 0 ? 1 : 0;
  os << "config " << world_keys << '\n';
  for (const auto& k : config_keys())
    if (k.rfind("world.", 0) == 0) os << k << '=' << get_config_value(cfg, k) << '\n';
  os << "images " << ds.images.size() << '\n';
  for (const auto& rec : ds.images) {
    const auto& s = rec.scene;
    os << "image " << rec.id << " label";
    for (int v : s.image_label) os << ' ' << v;
    os << " objects " << s.objects.size();
    for (std::size_t k = 0; k < s.objects.size(); ++k) {
      os << ' ' << s.objects[k].cls;
      put(os, s.objects[k].box);
      const bool has = k < s.parts.size() && s.parts[k].has_value();
      os << ' ' << (has ? 1 : 0);
      if (has) put(os, *s.parts[k]);
    }
    const auto& f = rec.proposals.features;
    os << " proposals " << rec.proposals.boxes.size() << " dim " << f.cols();
    for (std::size_t i = 0; i < rec.proposals.boxes.size(); ++i) {
      put(os, rec.proposals.boxes[i]);
      for (Eigen::Index c = 0; c < f.cols(); ++c) put(os, f(static_cast<Eigen::Index>(i), c));
    }
    os << '\n';
  }
}

Dataset read_dataset(std::istream& is) {
  check_header(is, kDatasetMagic);
  Dataset ds;
  Tokens head(next_line(is));
  head.expect("config");
  const std::size_t keys = head.count();
  RunConfig cfg;
  for (std::size_t i = 0; i < keys; ++i) {
    const std::string line = next_line(is);
    if (line.rfind("world.", 0) != 0) fail(ErrorKind::kParse, "expected a world.* entry");
    apply_override(cfg, line);
  }
  ds.config = cfg.world;
  Tokens count(next_line(is));
  count.expect("images");
  const std::size_t n = count.count();
  ds.images.resize(n);
  for (auto& rec : ds.images) {
    Tokens t(next_line(is));
    t.expect("image");
    rec.id = static_cast<int>(t.integer());
    t.expect("label");
    rec.scene.image_label.resize(ds.config.classes);
    for (auto& v : rec.scene.image_label) v = static_cast<int>(t.integer());
    t.expect("objects");
    const std::size_t k = t.count();
    for (std::size_t j = 0; j < k; ++j) {
      SceneObject o;
      o.cls = static_cast<int>(t.integer());
      o.box = get_box(t);
      rec.scene.objects.push_back(o);
      if (t.integer())
        rec.scene.parts.emplace_back(get_box(t));
      else
        rec.scene.parts.emplace_back(std::nullopt);
    }
    t.expect("proposals");
    const std::size_t m = t.count();
    t.expect("dim");
    const auto d = static_cast<Eigen::Index>(t.count());
    rec.proposals.boxes.resize(m);
    rec.proposals.features.resize(static_cast<Eigen::Index>(m), d);
    for (std::size_t i = 0; i < m; ++i) {
      rec.proposals.boxes[i] = get_box(t);
      for (Eigen::Index c = 0; c < d; ++c)
        rec.proposals.features(static_cast<Eigen::Index>(i), c) = t.real();
    }
    t.finish();
  }
  return ds;
}

void write_pseudo(std::ostream& os, const PseudoDataset& pseudo) {
  os << kPseudoMagic << '\n' << "images " << pseudo.images.size() << '\n';
  for (std::size_t i = 0; i < pseudo.images.size(); ++i) {
    os << "image " << i << ' ' << pseudo.images[i].size();
    for (const auto& inst : pseudo.images[i]) {
      os << ' ' << inst.cls << ' ' << int(inst.lambda_cls) << ' ' << int(inst.lambda_reg);
      put(os, inst.box);
    }
    os << '\n';
  }
}

PseudoDataset read_pseudo(std::istream& is) {
  check_header(is, kPseudoMagic);
  Tokens head(next_line(is));
  head.expect("images");
  PseudoDataset out;
  out.images.resize(head.count());
  for (std::size_t i = 0; i < out.images.size(); ++i) {
    Tokens t(next_line(is));
    t.expect("image");
    if (t.count() != i) fail(ErrorKind::kParse, "pseudo images out of order");
    const std::size_t n = t.count();
    for (std::size_t k = 0; k < n; ++k) {
      Instance inst;
      inst.cls = static_cast<int>(t.integer());
      inst.lambda_cls = static_cast<std::uint8_t>(t.integer());
      inst.lambda_reg = static_cast<std::uint8_t>(t.integer());
      inst.box = get_box(t);
      out.images[i].push_back(inst);
    }
    t.finish();
  }
  return out;
}

void write_params(std::ostream& os, const DetectorParams& p) {
  os << kParamsMagic << '\n'
     << "feature_dim " << p.feature_dim << " classes " << p.classes << '\n';
  write_matrix(os, "rpn_cls", p.rpn_cls);
  write_matrix(os, "rpn_reg", p.rpn_reg);
  write_matrix(os, "roi_cls", p.roi_cls);
  write_matrix(os, "roi_reg", p.roi_reg);
}

DetectorParams read_params(std::istream& is) {
  check_header(is, kParamsMagic);
  Tokens head(next_line(is));
  head.expect("feature_dim");
  const auto d = static_cast<int>(head.integer());
  head.expect("classes");
  const auto c = static_cast<int>(head.integer());
  head.finish();
  if (d < 1 || c < 1) fail(ErrorKind::kParse, "params shape must be positive");
  DetectorParams p = DetectorParams::zeros(d, c);
  p.rpn_cls = read_matrix(is, "rpn_cls", d + 1, 2);
  p.rpn_reg = read_matrix(is, "rpn_reg", d + 1, 4);
  p.roi_cls = read_matrix(is, "roi_cls", d + 1, c + 1);
  p.roi_reg = read_matrix(is, "roi_reg", d + 1, 4 * c);
  return p;
}

void save_dataset(const std::string& path, const Dataset& ds) {
  with_file(path, std::ios::out | std::ios::trunc, [&](std::ostream& f) { write_dataset(f, ds); });
}
Dataset load_dataset(const std::string& path) {
  Dataset ds;
  with_file(path, std::ios::in, [&](std::istream& f) { ds = read_dataset(f); });
  return ds;
}
void save_pseudo(const std::string& path, const PseudoDataset& pseudo) {
  with_file(path, std::ios::out | std::ios::trunc,
            [&](std::ostream& f) { write_pseudo(f, pseudo); });
}
PseudoDataset load_pseudo(const std::string& path) {
  PseudoDataset p;
  with_file(path, std::ios::in, [&](std::istream& f) { p = read_pseudo(f); });
  return p;
}
void save_params(const std::string& path, const DetectorParams& params) {
  with_file(path, std::ios::out | std::ios::trunc,
            [&](std::ostream& f) { write_params(f, params); });
}
DetectorParams load_params(const std::string& path) {
  DetectorParams p;
  with_file(path, std::ios::in, [&](std::istream& f) { p = read_params(f); });
  return p;
}

}  // namespace w2n
