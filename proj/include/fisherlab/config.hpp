// Copyright (c) 2026 The fisherlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fisherlab/binary_io.hpp"
#include "fisherlab/curvature.hpp"
#include "fisherlab/error.hpp"
#include "fisherlab/nets.hpp"
#include "fisherlab/optim.hpp"
#include "fisherlab/regularizers.hpp"

namespace fisherlab {

enum class DataSource { spirals, gaussians, idx, flds };

inline std::string_view to_string(DataSource s) {
  switch (s) {
    case DataSource::spirals: return "spirals";
    case DataSource::gaussians: return "gaussians";
    case DataSource::idx: return "idx";
    case DataSource::flds: return "flds";
  }
  return "?";
}

struct DataConfig {
  DataSource source = DataSource::spirals;
  std::size_t classes = 2;
  std::size_t per_class = 200;
  double sigma = 0.0;  // spiral angular noise
  double turns = 1.0;
  double phase = 0.0;
  std::size_t dim = 2;  // gaussians only
  double separation = 3.0;
  std::string images, labels, path;  // idx / flds sources
  std::array<double, 3> split{0.6, 0.2, 0.2};
  double noise = 0.0;  // label-noise fraction, train split only
  std::optional<std::uint64_t> seed;  // fixes the data independently of run.seed

  friend bool operator==(const DataConfig&, const DataConfig&) = default;
};

struct OptimConfig {
  LrSchedule schedule{0.1, {}, 0.5};
  double momentum = 0.9;
  double weight_decay = 0.0;
  std::size_t batch_size = 32;
  std::uint64_t epochs = 100;

  friend bool operator==(const OptimConfig&, const OptimConfig&) = default;
};

struct ProbePlan {
  std::uint64_t every_epochs = 1;  // 0 disables epoch probes
  std::uint64_t every_steps = 0;   // 0 disables per-step probes
  std::size_t step_examples = 128;
  bool tr_f = true;
  std::size_t tr_f_examples = 256;
  std::size_t tr_f_labels = 1;
  bool tr_f_minibatch = true;
  std::size_t batch = 128;
  bool tr_h = false;
  std::size_t hutchinson_m = 30;
  std::size_t tr_h_examples = 256;
  HvpConfig hvp{};
  bool empirical_fisher = false;
  bool group_stats = true;
  std::size_t group_cap = 256;

  friend bool operator==(const ProbePlan& a, const ProbePlan& b) {
    return a.every_epochs == b.every_epochs && a.every_steps == b.every_steps && a.step_examples == b.step_examples &&
           a.tr_f == b.tr_f && a.tr_f_examples == b.tr_f_examples && a.tr_f_labels == b.tr_f_labels &&
           a.tr_f_minibatch == b.tr_f_minibatch && a.batch == b.batch && a.tr_h == b.tr_h &&
           a.hutchinson_m == b.hutchinson_m && a.tr_h_examples == b.tr_h_examples &&
           a.hvp.rel_step == b.hvp.rel_step && a.empirical_fisher == b.empirical_fisher &&
           a.group_stats == b.group_stats && a.group_cap == b.group_cap;
  }
};

using Overrides = std::vector<std::pair<std::string, std::string>>;

struct RunConfig {
  std::uint64_t seed = 0;
  double epsilon = 0.5;  // TrF_i loss threshold
  std::uint64_t eval_every = 1;
  std::string out = "out";
  std::string name;
  std::string sweep_axis = "learning_rate";
  std::vector<double> sweep_values;
  std::vector<std::uint64_t> seeds;
  std::vector<std::uint64_t> start_epochs;
  std::uint64_t branch_epoch = 20;
  std::size_t branches = 8;
  Overrides high, low;  // branch parent overrides, applied on top of the base config

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

struct ExperimentConfig {
  ModelSpec model{};
  bool infer_input_shape = true;  // take the input shape from the data
  bool infer_classes = true;
  InitScheme init = InitScheme::he_normal;
  DataConfig data;
  OptimConfig optim;
  RegularizerConfig reg;
  std::vector<double> alpha_grid;
  ProbePlan probe;
  RunConfig run;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

namespace cfgparse {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split_list(std::string_view s, std::string_view seps = ",") {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || seps.find(s[i]) != std::string_view::npos) {
      const std::string item = trim(s.substr(start, i - start));
      if (!item.empty()) out.push_back(item);
      start = i + 1;
    }
  }
  return out;
}

inline double to_double(const std::string& key, std::string_view v) {
  double out = 0.0;
  const auto s = trim(v);
  const auto r = std::from_chars(s.data(), s.data() + s.size(), out);
  require(r.ec == std::errc{} && r.ptr == s.data() + s.size() && !s.empty(), Errc::config,
          key + ": expected a number, got '" + s + "'");
  return out;
}

inline std::uint64_t to_u64(const std::string& key, std::string_view v) {
  std::uint64_t out = 0;
  const auto s = trim(v);
  const auto r = std::from_chars(s.data(), s.data() + s.size(), out);
  require(r.ec == std::errc{} && r.ptr == s.data() + s.size() && !s.empty(), Errc::config,
          key + ": expected a non-negative integer, got '" + s + "'");
  return out;
}

inline bool to_bool(const std::string& key, std::string_view v) {
  const auto s = trim(v);
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  fail(Errc::config, key + ": expected a boolean, got '" + s + "'");
}

inline std::vector<double> to_doubles(const std::string& key, std::string_view v) {
  std::vector<double> out;
  for (const auto& item : split_list(v)) out.push_back(to_double(key, item));
  return out;
}

inline std::vector<std::uint64_t> to_u64s(const std::string& key, std::string_view v) {
  std::vector<std::uint64_t> out;
  for (const auto& item : split_list(v)) out.push_back(to_u64(key, item));
  return out;
}

/// Shortest text that reads back to the same double.
inline std::string fmt_double(double v) {
  char buf[64];
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

template <class T, class F>
std::string join(const std::vector<T>& xs, F&& f, std::string_view sep = ",") {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += sep;
    out += f(xs[i]);
  }
  return out;
}

}  // namespace cfgparse

inline void apply_setting(ExperimentConfig& c, const std::string& key, const std::string& raw);

inline void apply_overrides(ExperimentConfig& c, const Overrides& ov) {
  for (const auto& [k, v] : ov) apply_setting(c, k, v);
}

/// One `key = value` assignment. Unknown keys are config errors.
inline void apply_setting(ExperimentConfig& c, const std::string& key, const std::string& raw) {
  using namespace cfgparse;
  const std::string v = trim(raw);
  auto& m = c.model;
  auto& d = c.data;
  auto& o = c.optim;
  auto& r = c.reg;
  auto& p = c.probe;
  auto& u = c.run;

  if (key == "model.kind") {
    if (v == "linear") m.kind = ModelKind::linear;
    else if (v == "mlp") m.kind = ModelKind::mlp;
    else if (v == "small_conv") m.kind = ModelKind::small_conv;
    else fail(Errc::config, key + ": unknown model kind '" + v + "'");
    if (m.kind == ModelKind::linear) m.hidden.clear();
  } else if (key == "model.input_shape") {
    if (v.empty() || v == "auto") {
      c.infer_input_shape = true;
    } else {
      std::string t = v;  // "1x6x6" or "1,6,6"
      for (auto& ch : t)
        if (ch == 'x') ch = ',';
      Shape s;
      for (auto x : to_u64s(key, t)) s.push_back(static_cast<std::size_t>(x));
      m.input_shape = s;
      c.infer_input_shape = false;
    }
  } else if (key == "model.hidden") {
    m.hidden.clear();
    for (auto x : to_u64s(key, v)) m.hidden.push_back(static_cast<std::size_t>(x));
  } else if (key == "model.activation") {
    if (v == "relu") m.activation = Activation::relu;
    else if (v == "tanh") m.activation = Activation::tanh;
    else fail(Errc::config, key + ": unknown activation '" + v + "'");
  } else if (key == "model.classes") {
    if (v == "auto") {
      c.infer_classes = true;
    } else {
      m.classes = to_u64(key, v);
      c.infer_classes = false;
    }
  } else if (key == "model.kernel") {
    m.kernel = to_u64(key, v);
  } else if (key == "model.init") {
    if (v == "he_normal") c.init = InitScheme::he_normal;
    else if (v == "zeros") c.init = InitScheme::zeros;
    else fail(Errc::config, key + ": unknown init scheme '" + v + "'");
  } else if (key == "data.source") {
    if (v == "spirals") d.source = DataSource::spirals;
    else if (v == "gaussians") d.source = DataSource::gaussians;
    else if (v == "idx") d.source = DataSource::idx;
    else if (v == "flds") d.source = DataSource::flds;
    else fail(Errc::config, key + ": unknown data source '" + v + "'");
  } else if (key == "data.classes") {
    d.classes = to_u64(key, v);
  } else if (key == "data.per_class") {
    d.per_class = to_u64(key, v);
  } else if (key == "data.sigma") {
    d.sigma = to_double(key, v);
  } else if (key == "data.turns") {
    d.turns = to_double(key, v);
  } else if (key == "data.phase") {
    d.phase = to_double(key, v);
  } else if (key == "data.dim") {
    d.dim = to_u64(key, v);
  } else if (key == "data.separation") {
    d.separation = to_double(key, v);
  } else if (key == "data.images") {
    d.images = v;
  } else if (key == "data.labels") {
    d.labels = v;
  } else if (key == "data.path") {
    d.path = v;
  } else if (key == "data.split") {
    const auto f = to_doubles(key, v);
    require(f.size() == 3, Errc::config, key + ": expected three fractions");
    d.split = {f[0], f[1], f[2]};
  } else if (key == "data.noise") {
    d.noise = to_double(key, v);
  } else if (key == "data.seed") {
    if (v.empty() || v == "auto") d.seed.reset();
    else d.seed = to_u64(key, v);
  } else if (key == "optim.lr") {
    o.schedule.base_lr = to_double(key, v);
  } else if (key == "optim.milestones") {
    o.schedule.milestones = to_u64s(key, v);
  } else if (key == "optim.gamma") {
    o.schedule.gamma = to_double(key, v);
  } else if (key == "optim.momentum") {
    o.momentum = to_double(key, v);
  } else if (key == "optim.weight_decay") {
    o.weight_decay = to_double(key, v);
  } else if (key == "optim.batch_size") {
    o.batch_size = to_u64(key, v);
  } else if (key == "optim.epochs") {
    o.epochs = to_u64(key, v);
  } else if (key == "reg.kind") {
    r.kind = parse_penalty_kind(v);
  } else if (key == "reg.alpha") {
    r.alpha = to_double(key, v);
  } else if (key == "reg.start_epoch") {
    r.start_epoch = to_u64(key, v);
  } else if (key == "reg.refresh_every") {
    r.refresh_every = to_u64(key, v);
  } else if (key == "reg.mixup_beta") {
    r.mixup_beta = to_double(key, v);
  } else if (key == "reg.exact_single_example") {
    r.exact_single_example = to_bool(key, v);
  } else if (key == "reg.alpha_grid") {
    c.alpha_grid = to_doubles(key, v);
  } else if (key == "probe.every_epochs") {
    p.every_epochs = to_u64(key, v);
  } else if (key == "probe.every_steps") {
    p.every_steps = to_u64(key, v);
  } else if (key == "probe.step_examples") {
    p.step_examples = to_u64(key, v);
  } else if (key == "probe.tr_f") {
    p.tr_f = to_bool(key, v);
  } else if (key == "probe.tr_f_examples") {
    p.tr_f_examples = to_u64(key, v);
  } else if (key == "probe.tr_f_labels") {
    p.tr_f_labels = to_u64(key, v);
  } else if (key == "probe.tr_f_minibatch") {
    p.tr_f_minibatch = to_bool(key, v);
  } else if (key == "probe.batch") {
    p.batch = to_u64(key, v);
  } else if (key == "probe.tr_h") {
    p.tr_h = to_bool(key, v);
  } else if (key == "probe.hutchinson_m") {
    p.hutchinson_m = to_u64(key, v);
  } else if (key == "probe.tr_h_examples") {
    p.tr_h_examples = to_u64(key, v);
  } else if (key == "probe.hvp_rel_step") {
    p.hvp.rel_step = to_double(key, v);
  } else if (key == "probe.empirical_fisher") {
    p.empirical_fisher = to_bool(key, v);
  } else if (key == "probe.group_stats") {
    p.group_stats = to_bool(key, v);
  } else if (key == "probe.group_cap") {
    p.group_cap = to_u64(key, v);
  } else if (key == "run.seed") {
    u.seed = to_u64(key, v);
  } else if (key == "run.epsilon") {
    u.epsilon = to_double(key, v);
  } else if (key == "run.eval_every") {
    u.eval_every = to_u64(key, v);
  } else if (key == "run.out") {
    u.out = v;
  } else if (key == "run.name") {
    u.name = v;
  } else if (key == "run.sweep_axis") {
    require(v == "learning_rate" || v == "batch_size", Errc::config,
            key + ": expected learning_rate or batch_size, got '" + v + "'");
    u.sweep_axis = v;
  } else if (key == "run.sweep_values") {
    u.sweep_values = to_doubles(key, v);
  } else if (key == "run.seeds") {
    u.seeds = to_u64s(key, v);
  } else if (key == "run.start_epochs") {
    u.start_epochs = to_u64s(key, v);
  } else if (key == "run.branch_epoch") {
    u.branch_epoch = to_u64(key, v);
  } else if (key == "run.branches") {
    u.branches = to_u64(key, v);
  } else if (key.starts_with("run.high.") || key.starts_with("run.low.")) {
    const bool high = key.starts_with("run.high.");
    const std::string inner = key.substr(high ? 9 : 8);
    require(!inner.starts_with("run.high.") && !inner.starts_with("run.low."), Errc::config,
            key + ": nested branch overrides");
    ExperimentConfig probe_copy = c;
    apply_setting(probe_copy, inner, v);  // validates the inner key now
    Overrides& ov = high ? u.high : u.low;
    std::erase_if(ov, [&](const auto& kv) { return kv.first == inner; });
    ov.emplace_back(inner, v);
  } else {
    fail(Errc::config, "unknown key '" + key + "'");
  }
}

/// Splits `key=value`; used by config lines and --set overrides.
inline std::pair<std::string, std::string> split_assignment(std::string_view line) {
  const auto eq = line.find('=');
  require(eq != std::string_view::npos, Errc::config, "expected key=value, got '" + std::string(line) + "'");
  std::string key = cfgparse::trim(line.substr(0, eq));
  require(!key.empty(), Errc::config, "empty key in '" + std::string(line) + "'");
  return {std::move(key), cfgparse::trim(line.substr(eq + 1))};
}

inline void apply_assignment(ExperimentConfig& c, std::string_view line) {
  auto [k, v] = split_assignment(line);
  apply_setting(c, k, v);
}

/// Flat UTF-8 `key = value` lines; `#` starts a comment line.
inline ExperimentConfig parse_config(std::string_view text, ExperimentConfig base = {}) {
  std::size_t line_no = 0, start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    ++line_no;
    const std::string line = cfgparse::trim(text.substr(start, end - start));
    start = end + 1;
    if (line.empty() || line[0] == '#') continue;
    try {
      apply_assignment(base, line);
    } catch (const Error& e) {
      fail(Errc::config, "line " + std::to_string(line_no) + ": " + e.what());
    }
    if (end == text.size()) break;
  }
  return base;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  const auto bytes = io::read_file(path);
  return parse_config(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

/// Range checks that do not need the data.
inline void validate(const ExperimentConfig& c) {
  const auto& o = c.optim;
  o.schedule.validate();
  require(o.momentum >= 0.0 && o.momentum < 1.0, Errc::config, "optim.momentum must be in [0,1)");
  require(o.weight_decay >= 0.0, Errc::config, "optim.weight_decay must be >= 0");
  require(o.batch_size >= 1, Errc::config, "optim.batch_size must be >= 1");
  try {
    c.reg.validate();
  } catch (const Error& e) {
    fail(Errc::config, e.what());
  }
  const auto& d = c.data;
  require(d.classes >= 2, Errc::config, "data.classes must be >= 2");
  require(d.per_class >= 1, Errc::config, "data.per_class must be >= 1");
  require(d.noise >= 0.0 && d.noise <= 1.0, Errc::config, "data.noise must be in [0,1]");
  require(d.sigma >= 0.0, Errc::config, "data.sigma must be >= 0");
  if (d.source == DataSource::idx)
    require(!d.images.empty() && !d.labels.empty(), Errc::config, "idx source needs data.images and data.labels");
  if (d.source == DataSource::flds) require(!d.path.empty(), Errc::config, "flds source needs data.path");
  const auto& p = c.probe;
  require(p.tr_f_labels >= 1 && p.tr_f_examples >= 1, Errc::config, "probe tr_f sample counts must be >= 1");
  require(p.hutchinson_m >= 1 && p.tr_h_examples >= 1, Errc::config, "probe tr_h sample counts must be >= 1");
  require(p.batch >= 1 && p.step_examples >= 1 && p.group_cap >= 1, Errc::config, "probe sizes must be >= 1");
  require(p.hvp.rel_step > 0.0, Errc::config, "probe.hvp_rel_step must be > 0");
  require(c.run.eval_every >= 1, Errc::config, "run.eval_every must be >= 1");
  require(c.run.epsilon > 0.0, Errc::config, "run.epsilon must be > 0");
  for (double a : c.alpha_grid) require(a >= 0.0, Errc::config, "reg.alpha_grid entries must be >= 0");
}

/// Canonical text form; parse_config(to_text(c)) == c.
inline std::string to_text(const ExperimentConfig& c) {
  using cfgparse::fmt_double;
  using cfgparse::join;
  auto u64s = [](const auto& xs) { return join(xs, [](auto x) { return std::to_string(x); }); };
  auto dbls = [](const auto& xs) { return join(xs, [](double x) { return fmt_double(x); }); };
  auto b = [](bool x) { return std::string(x ? "true" : "false"); };
  std::ostringstream s;
  const auto& m = c.model;
  s << "model.kind = " << to_string(m.kind) << "\n";
  s << "model.input_shape = " << (c.infer_input_shape ? std::string("auto") : u64s(m.input_shape)) << "\n";
  s << "model.hidden = " << u64s(m.hidden) << "\n";
  s << "model.activation = " << to_string(m.activation) << "\n";
  s << "model.classes = " << (c.infer_classes ? std::string("auto") : std::to_string(m.classes)) << "\n";
  s << "model.kernel = " << m.kernel << "\n";
  s << "model.init = " << (c.init == InitScheme::zeros ? "zeros" : "he_normal") << "\n";
  const auto& d = c.data;
  s << "data.source = " << to_string(d.source) << "\n";
  s << "data.classes = " << d.classes << "\n";
  s << "data.per_class = " << d.per_class << "\n";
  s << "data.sigma = " << fmt_double(d.sigma) << "\n";
  s << "data.turns = " << fmt_double(d.turns) << "\n";
  s << "data.phase = " << fmt_double(d.phase) << "\n";
  s << "data.dim = " << d.dim << "\n";
  s << "data.separation = " << fmt_double(d.separation) << "\n";
  s << "data.images = " << d.images << "\n";
  s << "data.labels = " << d.labels << "\n";
  s << "data.path = " << d.path << "\n";
  s << "data.split = " << dbls(std::vector<double>(d.split.begin(), d.split.end())) << "\n";
  s << "data.noise = " << fmt_double(d.noise) << "\n";
  s << "data.seed = " << (d.seed ? std::to_string(*d.seed) : std::string("auto")) << "\n";
  const auto& o = c.optim;
  s << "optim.lr = " << fmt_double(o.schedule.base_lr) << "\n";
  s << "optim.milestones = " << u64s(o.schedule.milestones) << "\n";
  s << "optim.gamma = " << fmt_double(o.schedule.gamma) << "\n";
  s << "optim.momentum = " << fmt_double(o.momentum) << "\n";
  s << "optim.weight_decay = " << fmt_double(o.weight_decay) << "\n";
  s << "optim.batch_size = " << o.batch_size << "\n";
  s << "optim.epochs = " << o.epochs << "\n";
  const auto& r = c.reg;
  s << "reg.kind = " << to_string(r.kind) << "\n";
  s << "reg.alpha = " << fmt_double(r.alpha) << "\n";
  s << "reg.start_epoch = " << r.start_epoch << "\n";
  s << "reg.refresh_every = " << r.refresh_every << "\n";
  s << "reg.mixup_beta = " << fmt_double(r.mixup_beta) << "\n";
  s << "reg.exact_single_example = " << b(r.exact_single_example) << "\n";
  s << "reg.alpha_grid = " << dbls(c.alpha_grid) << "\n";
  const auto& p = c.probe;
  s << "probe.every_epochs = " << p.every_epochs << "\n";
  s << "probe.every_steps = " << p.every_steps << "\n";
  s << "probe.step_examples = " << p.step_examples << "\n";
  s << "probe.tr_f = " << b(p.tr_f) << "\n";
  s << "probe.tr_f_examples = " << p.tr_f_examples << "\n";
  s << "probe.tr_f_labels = " << p.tr_f_labels << "\n";
  s << "probe.tr_f_minibatch = " << b(p.tr_f_minibatch) << "\n";
  s << "probe.batch = " << p.batch << "\n";
  s << "probe.tr_h = " << b(p.tr_h) << "\n";
  s << "probe.hutchinson_m = " << p.hutchinson_m << "\n";
  s << "probe.tr_h_examples = " << p.tr_h_examples << "\n";
  s << "probe.hvp_rel_step = " << fmt_double(p.hvp.rel_step) << "\n";
  s << "probe.empirical_fisher = " << b(p.empirical_fisher) << "\n";
  s << "probe.group_stats = " << b(p.group_stats) << "\n";
  s << "probe.group_cap = " << p.group_cap << "\n";
  const auto& u = c.run;
  s << "run.seed = " << u.seed << "\n";
  s << "run.epsilon = " << fmt_double(u.epsilon) << "\n";
  s << "run.eval_every = " << u.eval_every << "\n";
  s << "run.out = " << u.out << "\n";
  s << "run.name = " << u.name << "\n";
  s << "run.sweep_axis = " << u.sweep_axis << "\n";
  s << "run.sweep_values = " << dbls(u.sweep_values) << "\n";
  s << "run.seeds = " << u64s(u.seeds) << "\n";
  s << "run.start_epochs = " << u64s(u.start_epochs) << "\n";
  s << "run.branch_epoch = " << u.branch_epoch << "\n";
  s << "run.branches = " << u.branches << "\n";
  for (const auto& [k, v] : u.high) s << "run.high." << k << " = " << v << "\n";
  for (const auto& [k, v] : u.low) s << "run.low." << k << " = " << v << "\n";
  return s.str();
}

/// n values spaced evenly in log10 between lo and hi inclusive.
inline std::vector<double> log_grid(double lo, double hi, std::size_t n) {
  require(lo > 0.0 && hi > lo && n >= 2, Errc::invalid_argument, "log_grid needs 0 < lo < hi and n >= 2");
  std::vector<double> out(n);
  const double a = std::log10(lo), b = std::log10(hi);
  for (std::size_t i = 0; i < n; ++i) out[i] = std::pow(10.0, a + (b - a) * static_cast<double>(i) / (n - 1.0));
  return out;
}

/// Default penalty search: 10 log-spaced values in [0.1 v, 10 v].
inline std::vector<double> default_alpha_grid(double v = 0.01) { return log_grid(0.1 * v, 10.0 * v, 10); }

}  // namespace fisherlab
