// Copyright (c) 2026 The fisherlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fisherlab/stats.hpp"
#include "fisherlab/trainer.hpp"

namespace fisherlab {

namespace detail {

inline std::string fmt_opt(std::optional<double> v) { return Report::num(v); }

inline std::optional<double> opt_mean(const std::vector<double>& xs) {
  if (xs.empty()) return std::nullopt;
  return stats::mean(xs);
}
inline std::optional<double> opt_sd(const std::vector<double>& xs) {
  if (xs.empty()) return std::nullopt;
  return stats::stddev(xs);
}

inline void maybe_write_run(const std::optional<std::filesystem::path>& dir, const std::string& name,
                            const ExperimentConfig& c, const TrainResult& r) {
  if (dir) write_run(*dir / "runs" / name, c, r);
}

}  // namespace detail

// ---------------------------------------------------------------- sweep

enum class SweepAxis { learning_rate, batch_size };

inline SweepAxis parse_sweep_axis(std::string_view s) {
  if (s == "learning_rate" || s == "lr") return SweepAxis::learning_rate;
  if (s == "batch_size") return SweepAxis::batch_size;
  fail(Errc::config, "unknown sweep axis '" + std::string(s) + "'");
}

struct SweepRun {
  double value = 0.0;
  std::uint64_t seed = 0;
  TrfiResult trf_i;
  std::optional<double> test_acc;  // final test accuracy
  std::optional<double> max_tr_f;
  std::string failure;  // empty when the run completed
};

struct SweepResult {
  SweepAxis axis = SweepAxis::learning_rate;
  std::vector<SweepRun> runs;  // value-major, then seed, in input order
  std::optional<double> pearson_log_trfi_test, spearman_log_trfi_test;
  std::size_t correlated_runs = 0;
};

inline ExperimentConfig with_axis(ExperimentConfig c, SweepAxis axis, double value) {
  if (axis == SweepAxis::learning_rate) {
    c.optim.schedule.base_lr = value;
  } else {
    require(value >= 1.0 && std::floor(value) == value, Errc::config, "batch size sweep values must be integers");
    c.optim.batch_size = static_cast<std::size_t>(value);
  }
  return c;
}

/// Trains every (value, seed) pair; correlations use runs whose TrF_i is
/// defined and positive. A failed run is listed instead of aborting the sweep.
inline SweepResult run_sweep(const ExperimentConfig& base, SweepAxis axis, const std::vector<double>& values,
                             const std::vector<std::uint64_t>& seeds,
                             const std::optional<std::filesystem::path>& out_dir = {}) {
  require(values.size() >= 2, Errc::config, "a sweep needs at least 2 axis values");
  require(seeds.size() >= 2, Errc::config, "a sweep needs at least 2 seeds");
  validate(base);
  SweepResult res;
  res.axis = axis;
  std::vector<double> log_trfi, test;
  for (double v : values) {
    for (std::uint64_t s : seeds) {
      ExperimentConfig c = with_axis(base, axis, v);
      c.run.seed = s;
      SweepRun run{v, s, {}, {}, {}, {}};
      try {
        const TrainResult r = train_model(c);
        run.trf_i = r.summary.trf_i;
        run.test_acc = r.summary.final_test_acc;
        run.max_tr_f = r.summary.max_tr_f;
        if (r.summary.aborted_at_step) run.failure = r.abort_message;
        detail::maybe_write_run(out_dir, "v" + cfgparse::fmt_double(v) + "_s" + std::to_string(s), c, r);
      } catch (const Error& e) {
        run.failure = e.what();
      }
      if (run.failure.empty() && run.trf_i.value && *run.trf_i.value > 0.0 && run.test_acc) {
        log_trfi.push_back(std::log(*run.trf_i.value));
        test.push_back(*run.test_acc);
      }
      res.runs.push_back(std::move(run));
    }
  }
  res.correlated_runs = log_trfi.size();
  res.pearson_log_trfi_test = stats::pearson(log_trfi, test);
  res.spearman_log_trfi_test = stats::spearman(log_trfi, test);
  return res;
}

inline Report sweep_report(const SweepResult& r) {
  Report rep;
  rep.kv("axis", r.axis == SweepAxis::learning_rate ? "learning_rate" : "batch_size");
  rep.kv_int("runs", r.runs.size());
  rep.kv_int("correlated_runs", r.correlated_runs);
  rep.kv("pearson_log_trfi_test_acc", r.pearson_log_trfi_test);
  rep.kv("spearman_log_trfi_test_acc", r.spearman_log_trfi_test);
  std::size_t failures = 0;
  for (const auto& run : r.runs) failures += !run.failure.empty();
  rep.kv_int("failures", failures);
  rep.blank();
  std::vector<double> values;
  for (const auto& run : r.runs)
    if (std::find(values.begin(), values.end(), run.value) == values.end()) values.push_back(run.value);
  std::vector<std::vector<std::string>> agg;
  for (double v : values) {
    std::vector<double> t, a;
    for (const auto& run : r.runs)
      if (run.value == v && run.failure.empty()) {
        if (run.trf_i.value) t.push_back(*run.trf_i.value);
        if (run.test_acc) a.push_back(*run.test_acc);
      }
    agg.push_back({cfgparse::fmt_double(v), detail::fmt_opt(detail::opt_mean(t)), detail::fmt_opt(detail::opt_sd(t)),
                   detail::fmt_opt(detail::opt_mean(a)), detail::fmt_opt(detail::opt_sd(a))});
  }
  rep.table({"value", "trf_i_mean", "trf_i_std", "test_acc_mean", "test_acc_std"}, agg);
  rep.blank();
  std::vector<std::vector<std::string>> rows;
  for (const auto& run : r.runs) {
    std::string status(to_string(run.trf_i.status));
    std::replace(status.begin(), status.end(), ' ', '_');
    rows.push_back({cfgparse::fmt_double(run.value), std::to_string(run.seed), detail::fmt_opt(run.trf_i.value),
                    status, detail::fmt_opt(run.test_acc), run.failure.empty() ? "ok" : "failed"});
  }
  rep.table({"value", "seed", "trf_i", "trf_i_status", "test_acc", "status"}, rows);
  for (const auto& run : r.runs)
    if (!run.failure.empty())
      rep.kv("failure", cfgparse::fmt_double(run.value) + " seed " + std::to_string(run.seed) + ": " + run.failure);
  return rep;
}

// ---------------------------------------------------------------- noisy labels

struct NoisyRun {
  std::string label;  // "baseline" or "<kind> alpha=<a>"
  RegularizerConfig reg;
  std::vector<MetricsRow> rows;
  RunSummary summary;
  std::optional<double> noisy_acc_at_clean_target;
  std::optional<std::uint64_t> clean_target_epoch;
  std::optional<double> early_cosine;  // mean over the first tenth of the horizon
  std::optional<double> final_ratio;
  std::optional<double> ratio_deviation;  // mean |log(noisy/clean ratio)| over epoch rows after the start
};

struct NoisyResult {
  double fraction = 0.0;
  double clean_target = 0.9;
  std::vector<NoisyRun> runs;
  std::optional<std::size_t> best;  // index with the highest test_acc_at_best_val
};

/// Noisy-train accuracy at the first epoch row whose clean-train accuracy
/// reaches `target`.
inline std::pair<std::optional<double>, std::optional<std::uint64_t>> noisy_acc_at_clean(
    const std::vector<MetricsRow>& rows, double target) {
  for (const auto& r : rows)
    if (r.train_acc_clean && r.train_acc_noisy && *r.train_acc_clean >= target)
      return {r.train_acc_noisy, r.epoch};
  return {std::nullopt, std::nullopt};
}

inline NoisyRun summarize_noisy_run(std::string label, const ExperimentConfig& c, const TrainResult& r,
                                    double clean_target) {
  NoisyRun run;
  run.label = std::move(label);
  run.reg = c.reg;
  run.rows = r.rows;
  run.summary = r.summary;
  std::tie(run.noisy_acc_at_clean_target, run.clean_target_epoch) = noisy_acc_at_clean(r.rows, clean_target);
  // early phase: epochs 1 .. max(1, horizon/10)
  const std::uint64_t early_end = std::max<std::uint64_t>(1, c.optim.epochs / 10);
  double cos_sum = 0.0;
  std::size_t cos_n = 0;
  for (const auto& row : r.rows)
    if (row.epoch > 0 && row.epoch <= early_end && row.train_loss && row.cos_clean_noisy) {
      cos_sum += *row.cos_clean_noisy;
      ++cos_n;
    }
  if (cos_n > 0) run.early_cosine = cos_sum / static_cast<double>(cos_n);
  double dev = 0.0;
  std::size_t dev_n = 0;
  for (const auto& row : r.rows)
    if (row.grad_norm_ratio) {
      run.final_ratio = row.grad_norm_ratio;
      if (row.epoch > 0 && row.train_loss && *row.grad_norm_ratio > 0.0) {
        dev += std::abs(std::log(*row.grad_norm_ratio));
        ++dev_n;
      }
    }
  if (dev_n > 0) run.ratio_deviation = dev / static_cast<double>(dev_n);
  return run;
}

/// Corrupts `fraction` of the train split and trains the configured run.
/// With a non-empty alpha grid (and a gradient penalty kind) it also trains
/// an unregularized baseline and one run per alpha.
inline NoisyResult run_noisy(const ExperimentConfig& base, double fraction,
                             const std::optional<std::filesystem::path>& out_dir = {}, double clean_target = 0.9) {
  require(fraction > 0.0 && fraction < 1.0, Errc::config, "noise fraction must be in (0,1)");
  ExperimentConfig c = base;
  c.data.noise = fraction;
  validate(c);
  const Splits data = prepare_data(c);
  NoisyResult res;
  res.fraction = fraction;
  res.clean_target = clean_target;
  auto one = [&](const ExperimentConfig& cc, std::string label, std::string dir) {
    const TrainResult r = train_model(cc, data);
    detail::maybe_write_run(out_dir, dir, cc, r);
    res.runs.push_back(summarize_noisy_run(std::move(label), cc, r, clean_target));
  };
  if (c.alpha_grid.empty()) {
    one(c, c.reg.kind == PenaltyKind::none ? "baseline" : std::string(to_string(c.reg.kind)), "run");
  } else {
    ExperimentConfig b = c;
    b.reg.kind = PenaltyKind::none;
    b.reg.alpha = 0.0;
    one(b, "baseline", "baseline");
    for (std::size_t i = 0; i < c.alpha_grid.size(); ++i) {
      ExperimentConfig a = c;
      a.reg.alpha = c.alpha_grid[i];
      one(a, std::string(to_string(a.reg.kind)) + " alpha=" + cfgparse::fmt_double(a.reg.alpha),
          "alpha_" + std::to_string(i));
    }
  }
  for (std::size_t i = 0; i < res.runs.size(); ++i) {
    const auto& t = res.runs[i].summary.test_acc_at_best_val;
    if (t && (!res.best || *t > *res.runs[*res.best].summary.test_acc_at_best_val)) res.best = i;
  }
  return res;
}

inline Report noisy_report(const NoisyResult& r) {
  Report rep;
  rep.kv("noise_fraction", r.fraction);
  rep.kv("clean_target", r.clean_target);
  rep.kv("best_run", r.best ? r.runs[*r.best].label : std::string("missing"));
  if (r.best) rep.kv("best_test_acc_at_best_val", r.runs[*r.best].summary.test_acc_at_best_val);
  rep.blank();
  std::vector<std::vector<std::string>> rows;
  for (const auto& run : r.runs) {
    std::string label = run.label;
    std::replace(label.begin(), label.end(), ' ', '_');
    rows.push_back({label, detail::fmt_opt(run.summary.test_acc_at_best_val), Report::num(run.summary.best_val_epoch),
                    detail::fmt_opt(run.noisy_acc_at_clean_target), detail::fmt_opt(run.early_cosine),
                    detail::fmt_opt(run.final_ratio), detail::fmt_opt(run.ratio_deviation),
                    detail::fmt_opt(run.summary.max_tr_f)});
  }
  rep.table({"run", "test_acc_at_best_val", "best_val_epoch", "noisy_acc_at_clean_target", "early_cosine",
             "final_grad_ratio", "mean_abs_log_ratio", "max_tr_f"},
            rows);
  return rep;
}

// ---------------------------------------------------------------- branching

struct BranchChild {
  std::uint64_t seed = 0;
  std::optional<double> best_test_acc;
  std::optional<std::uint64_t> best_test_epoch;
  std::optional<double> tr_h_at_best_test;
};

struct BranchParent {
  std::string label;  // "high" or "low"
  TrfiResult trf_i;
  std::optional<double> tr_f_at_branch;
  std::vector<BranchChild> children;
  std::optional<double> median_tr_h, median_best_test;
};

struct BranchResult {
  std::uint64_t branch_epoch = 0;
  BranchParent high, low;
};

/// Two parents (high and low regularization) train to `branch_epoch` on the
/// same data; each then seeds `n` children that continue with the low
/// configuration under fresh seeds and a zeroed momentum buffer.
inline BranchResult run_branch(const ExperimentConfig& base, std::uint64_t branch_epoch, std::size_t n,
                               const ExperimentConfig& high, const ExperimentConfig& low,
                               const std::optional<std::filesystem::path>& out_dir = {}) {
  require(n >= 2, Errc::config, "branching needs at least 2 children per parent");
  require(branch_epoch >= 1 && branch_epoch < low.optim.epochs, Errc::config,
          "run.branch_epoch must be in [1, optim.epochs)");
  validate(high);
  validate(low);
  const Splits data = prepare_data(base);
  BranchResult res;
  res.branch_epoch = branch_epoch;
  auto grow = [&](const ExperimentConfig& parent_cfg, std::string label, std::uint64_t tag) {
    BranchParent p;
    p.label = label;
    const TrainResult pr = train_model(parent_cfg, data, std::nullopt, branch_epoch);
    require(!pr.summary.aborted_at_step, Errc::non_finite, label + " parent: " + pr.abort_message);
    detail::maybe_write_run(out_dir, label + "_parent", parent_cfg, pr);
    p.trf_i = pr.summary.trf_i;
    for (const auto& row : pr.rows)
      if (row.tr_f && row.train_loss) p.tr_f_at_branch = row.tr_f;
    std::vector<double> trh, acc;
    for (std::size_t j = 0; j < n; ++j) {
      ExperimentConfig cc = low;
      cc.run.seed = derive_seed(base.run.seed, "branch", tag * 1000003 + j);
      TrainStart st{pr.theta, std::nullopt, branch_epoch, pr.steps_done};
      const TrainResult cr = train_model(cc, data, st);
      detail::maybe_write_run(out_dir, label + "_child_" + std::to_string(j), cc, cr);
      BranchChild ch{cc.run.seed, cr.best_test_acc, cr.best_test_epoch, cr.tr_h_at_best_test};
      if (ch.tr_h_at_best_test) trh.push_back(*ch.tr_h_at_best_test);
      if (ch.best_test_acc) acc.push_back(*ch.best_test_acc);
      p.children.push_back(ch);
    }
    if (!trh.empty()) p.median_tr_h = stats::median(trh);
    if (!acc.empty()) p.median_best_test = stats::median(acc);
    return p;
  };
  res.high = grow(high, "high", 1);
  res.low = grow(low, "low", 2);
  return res;
}

inline Report branch_report(const BranchResult& r) {
  Report rep;
  rep.kv_int("branch_epoch", r.branch_epoch);
  for (const BranchParent* p : {&r.high, &r.low}) {
    rep.kv(p->label + "_trf_i", p->trf_i.value);
    rep.kv(p->label + "_tr_f_at_branch", p->tr_f_at_branch);
    rep.kv(p->label + "_median_tr_h_at_best_test", p->median_tr_h);
    rep.kv(p->label + "_median_best_test_acc", p->median_best_test);
  }
  rep.blank();
  std::vector<std::vector<std::string>> rows;
  for (const BranchParent* p : {&r.high, &r.low})
    for (std::size_t j = 0; j < p->children.size(); ++j) {
      const auto& ch = p->children[j];
      rows.push_back({p->label, std::to_string(j), std::to_string(ch.seed), detail::fmt_opt(ch.best_test_acc),
                      Report::num(ch.best_test_epoch), detail::fmt_opt(ch.tr_h_at_best_test)});
    }
  rep.table({"parent", "child", "seed", "best_test_acc", "best_test_epoch", "tr_h_at_best_test"}, rows);
  return rep;
}

// ---------------------------------------------------------------- delayed start

struct DelayedRun {
  std::uint64_t start_epoch = 0;
  bool beyond_horizon = false;
  std::optional<double> final_test_acc;
  std::optional<double> max_tr_f;
};

struct DelayedResult {
  std::vector<DelayedRun> runs;
};

/// One penalized run per start epoch, all on the same data and seed.
inline DelayedResult run_delayed_start(const ExperimentConfig& base, const std::vector<std::uint64_t>& starts,
                                       const std::optional<std::filesystem::path>& out_dir = {}) {
  require(!starts.empty(), Errc::config, "delayed start needs at least one start epoch");
  validate(base);
  const Splits data = prepare_data(base);
  DelayedResult res;
  for (std::uint64_t e : starts) {
    ExperimentConfig c = base;
    c.reg.start_epoch = e;
    const TrainResult r = train_model(c, data);
    detail::maybe_write_run(out_dir, "start_" + std::to_string(e), c, r);
    res.runs.push_back({e, e >= c.optim.epochs, r.summary.final_test_acc, r.summary.max_tr_f});
  }
  return res;
}

inline Report delayed_report(const DelayedResult& r) {
  Report rep;
  rep.kv_int("runs", r.runs.size());
  rep.blank();
  std::vector<std::vector<std::string>> rows;
  for (const auto& run : r.runs)
    rows.push_back({std::to_string(run.start_epoch), run.beyond_horizon ? "yes" : "no",
                    detail::fmt_opt(run.final_test_acc), detail::fmt_opt(run.max_tr_f)});
  rep.table({"start_epoch", "beyond_horizon", "final_test_acc", "max_tr_f"}, rows);
  return rep;
}

// ---------------------------------------------------------------- summarize

struct FileSummary {
  std::string path;
  RunSummary summary;
  std::size_t probe_pairs = 0;
  std::optional<double> pearson_tr_f_tr_h;
};

inline FileSummary summarize_metrics(const std::vector<MetricsRow>& rows, double epsilon, std::string path = {}) {
  FileSummary fs;
  fs.path = std::move(path);
  fs.summary = summarize_rows(rows, epsilon);
  const auto [f, h] = trf_trh_series(rows);
  fs.probe_pairs = f.size();
  fs.pearson_tr_f_tr_h = stats::pearson(f, h);
  return fs;
}

/// Per-file summaries in argument order.
inline std::vector<FileSummary> summarize(const std::vector<std::filesystem::path>& files, double epsilon) {
  require(!files.empty(), Errc::invalid_argument, "summarize needs at least one metrics file");
  std::vector<FileSummary> out;
  for (const auto& p : files) out.push_back(summarize_metrics(read_metrics(p), epsilon, p.string()));
  return out;
}

inline Report summarize_report(const std::vector<FileSummary>& files, double epsilon) {
  Report rep;
  rep.kv_int("files", files.size());
  rep.kv("epsilon", epsilon);
  for (std::size_t i = 0; i < files.size(); ++i) {
    const auto& f = files[i];
    const std::string p = "run" + std::to_string(i) + ".";
    rep.blank();
    rep.kv(p + "path", f.path);
    rep.kv(p + "trf_i", f.summary.trf_i.value);
    rep.kv(p + "trf_i_status", to_string(f.summary.trf_i.status));
    rep.kv(p + "max_tr_f", f.summary.max_tr_f);
    rep.kv_int(p + "best_val_epoch", f.summary.best_val_epoch);
    rep.kv(p + "test_acc_at_best_val", f.summary.test_acc_at_best_val);
    rep.kv(p + "final_train_acc", f.summary.final_train_acc);
    rep.kv(p + "tr_h_at_best_val", f.summary.tr_h_at_best_val);
    rep.kv_int(p + "probe_pairs", f.probe_pairs);
    rep.kv(p + "pearson_tr_f_tr_h", f.pearson_tr_f_tr_h ? Report::num(f.pearson_tr_f_tr_h) : "undefined");
  }
  return rep;
}

// ---------------------------------------------------------------- checkpoint probe

struct ProbeResult {
  CurvatureEstimate tr_f, tr_f_minibatch, tr_h, empirical_fisher;
};

/// One-shot curvature probe of a checkpoint on the configured train split.
inline ProbeResult probe_checkpoint(const ExperimentConfig& c, const Checkpoint& ck) {
  const Splits data = prepare_data(c);
  const ModelSpec spec = resolve_model(c, data.train);
  require(spec == ck.spec, Errc::config, "checkpoint model does not match the configured model");
  const Dataset train = for_model(spec, data.train);
  const ProbePlan& plan = c.probe;
  const std::size_t n = train.size();
  const std::uint64_t seed = c.run.seed;
  ProbeResult out;
  out.tr_f = tr_f_mc(spec, ck.theta, train, std::min(plan.tr_f_examples, n), plan.tr_f_labels,
                     detail::probe_seed(seed, 0, 0));
  Rng pick(detail::probe_seed(seed, 0, 1));
  const auto idx = pick.sample_without_replacement(n, std::min(plan.batch, n));
  out.tr_f_minibatch = tr_f_minibatch(spec, ck.theta, gather_rows(train.inputs, idx), detail::probe_seed(seed, 0, 2));
  const auto sub = detail::probe_subset(n, std::max(plan.tr_h_examples, plan.tr_f_examples), seed);
  out.tr_h = detail::trace_h(spec, ck.theta, train,
                             std::span<const std::size_t>(sub.data(), std::min(plan.tr_h_examples, n)), plan,
                             detail::probe_seed(seed, 0, 3));
  out.empirical_fisher = empirical_fisher_trace(
      spec, ck.theta, subset(train, std::span<const std::size_t>(sub.data(), std::min(plan.tr_f_examples, n))));
  return out;
}

inline Report probe_report(const ProbeResult& p) {
  Report rep;
  const std::pair<const char*, const CurvatureEstimate*> items[] = {
      {"tr_f", &p.tr_f}, {"tr_f_minibatch", &p.tr_f_minibatch}, {"tr_h", &p.tr_h}, {"empirical_fisher", &p.empirical_fisher}};
  for (const auto& [name, e] : items) {
    const std::string k(name);
    rep.kv(k, e->value);
    rep.kv(k + "_std_error", e->std_error);
    rep.kv_int(k + "_samples", e->n_samples);
  }
  return rep;
}

}  // namespace fisherlab
