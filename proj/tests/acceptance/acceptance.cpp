// Copyright (c) 2026 The fisherlab Authors
// SPDX-License-Identifier: Apache-2.0

// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits nonzero when any fails. Pass criterion ids (e.g. C6 C10) to run a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "../unit/support.hpp"
#include "fisherlab/fisherlab.hpp"

#ifndef FISHERLAB_CONFIGS
#error "FISHERLAB_CONFIGS must point at the configs directory"
#endif

using namespace fisherlab;
using namespace fltest;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string num(double v) {
  std::ostringstream s;
  s.precision(4);
  s << v;
  return s.str();
}

std::string num(std::optional<double> v) { return v ? num(*v) : "missing"; }

ExperimentConfig fixture(const std::string& name) { return load_config(fs::path(FISHERLAB_CONFIGS) / name); }

double max_val_acc(const std::vector<MetricsRow>& rows) {
  double best = -1.0;
  for (const auto& r : rows)
    if (r.val_acc) best = std::max(best, *r.val_acc);
  return best;
}

// Max tr_f over epoch rows only (per-step rows carry no train_loss).
std::optional<double> epoch_max_tr_f(const std::vector<MetricsRow>& rows) {
  std::optional<double> m;
  for (const auto& r : rows)
    if (r.train_loss && r.tr_f && (!m || *r.tr_f > *m)) m = r.tr_f;
  return m;
}

// ---------------------------------------------------------------------------

std::vector<ModelSpec> fixture_models() {
  return {linear_spec(3, 3),
          mlp_spec(3, {5}, 3, Activation::tanh),
          mlp_spec(4, {6, 5}, 4, Activation::relu),
          mlp_spec(2, {4, 4, 3}, 2, Activation::tanh),
          conv_spec(Activation::tanh),
          conv_spec(Activation::relu)};
}

Outcome c1_gradients() {
  double worst_param = 0.0, worst_input = 0.0;
  std::uint64_t seed = 11;
  for (const auto& spec : fixture_models()) {
    const ParamVector theta = init_params(spec, InitScheme::he_normal, seed);
    const Dataset d = random_dataset(spec, 5, seed + 100);
    const auto oracle = make_model_oracle(spec, d.inputs, d.labels);
    const ParamVector g = value_and_param_grad(oracle, theta).grad;
    worst_param = std::max(worst_param, max_relative_error(g, finite_diff_grad(oracle, theta, 1e-5)));
    const InputGrad ig = value_and_input_grad(spec, theta, d.inputs, d.labels);
    const Tensor fd = finite_diff_input_grad(spec, theta, d.inputs, d.labels, 1e-5);
    worst_input = std::max(worst_input, max_relative_error(ig.input_grads.data(), fd.data()));
    ++seed;
  }
  return {worst_param < 1e-6 && worst_input < 1e-6,
          std::to_string(fixture_models().size()) + " models, max rel err param " + num(worst_param) + " input " +
              num(worst_input)};
}

Outcome c2_tr_f() {
  const ModelSpec spec = mlp_spec(3, {8}, 4, Activation::tanh);
  const ParamVector theta = init_params(spec, InitScheme::he_normal, 30);
  const Dataset d = random_dataset(spec, 128, 31);
  const double exact = tr_f_exact(spec, theta, d).value;
  int pass = 0;
  std::size_t samples = 0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto est = tr_f_mc(spec, theta, d, 128, 32, 900 + s);
    samples = est.n_samples;
    pass += std::abs(est.value - exact) <= 2 * est.std_error;
  }
  const bool sized = spec.classes <= 4 && theta.size() <= 500 && d.size() <= 256 && samples == 4096;
  return {sized && pass >= 18, "P=" + std::to_string(theta.size()) + " exact " + num(exact) + ", " +
                                   std::to_string(pass) + "/20 seeds within 2 SE"};
}

Outcome c3_hutchinson() {
  const auto quad = diag_quadratic({1.0, 2.0, 3.0});
  const auto q = tr_h_hutchinson(quad, flat_like(quad, {0.5, 0.5, 0.5}), 2000, 17);
  const bool a = std::abs(q.value - 6.0) <= 3 * q.std_error;

  const ModelSpec spec = mlp_spec(3, {6}, 3, Activation::tanh);
  const ParamVector theta = init_params(spec, InitScheme::he_normal, 8);
  const Dataset d = random_dataset(spec, 12, 9);
  const auto oracle = make_model_oracle(spec, d.inputs, d.labels);
  const auto exact = tr_h_exact_small(oracle, theta);
  const auto est = tr_h_hutchinson(oracle, theta, 500, 10);
  const bool b = std::abs(est.value - exact.value) <= 3 * est.std_error;

  std::vector<double> xs;
  const ParamVector t2 = flat_like(quad, {0.2, 0.1, -0.3});
  for (std::uint64_t s = 0; s < 500; ++s) xs.push_back(tr_h_hutchinson(quad, t2, 1, 1000 + s).value);
  const auto [m, se] = detail::mean_and_se(xs);
  const bool c = std::abs(m - 6.0) <= 4 * se;
  return {a && b && c, "quadratic " + num(q.value) + "+-" + num(q.std_error) + ", mlp " + num(est.value) + "+-" +
                           num(est.std_error) + " vs exact " + num(exact.value) + ", 500x1-probe mean " + num(m)};
}

ParamVector fd_of_penalty(const ModelSpec& spec, const ParamVector& theta, const Tensor& x, std::span<const int> y,
                          PenaltyKind kind, double step) {
  ParamVector g = theta.zeros_like();
  ParamVector probe = theta;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    probe[i] = theta[i] + step;
    const double up = penalty_value_frozen(spec, probe, x, y, kind);
    probe[i] = theta[i] - step;
    const double down = penalty_value_frozen(spec, probe, x, y, kind);
    probe[i] = theta[i];
    g[i] = (up - down) / (2 * step);
  }
  return g;
}

RegularizerConfig reg_of(PenaltyKind kind, double alpha = 0.1) {
  RegularizerConfig c;
  c.kind = kind;
  c.alpha = alpha;
  return c;
}

Outcome c4_penalty_grads() {
  std::map<PenaltyKind, double> worst;
  std::uint64_t seed = 60;
  for (const auto& spec : fixture_models()) {
    for (auto kind : {PenaltyKind::fp, PenaltyKind::gp, PenaltyKind::gpr, PenaltyKind::gpx}) {
      const ParamVector theta = init_params(spec, InitScheme::he_normal, seed);
      const Dataset d = random_dataset(spec, 6, seed + 1);
      const PenaltyEval pe = penalty_eval(spec, theta, whole_batch(d), reg_of(kind), seed);
      const ParamVector fd = fd_of_penalty(spec, theta, d.inputs, pe.labels, kind, 1e-5);
      worst[kind] = std::max(worst[kind], max_relative_error(pe.grad, fd));
      ++seed;
    }
  }
  bool ok = true;
  std::string detail;
  for (const auto& [k, e] : worst) {
    ok = ok && e < 1e-3;
    detail += std::string(to_string(k)) + " " + num(e) + " ";
  }
  return {ok, "max rel err " + detail};
}

ExperimentConfig small_run() {
  return parse_config(R"(
data.per_class = 40
data.sigma = 0.1
data.seed = 2
model.hidden = 12,12
optim.lr = 0.05
optim.epochs = 6
optim.batch_size = 16
probe.tr_h = true
probe.hutchinson_m = 4
probe.tr_h_examples = 32
probe.tr_f_examples = 32
probe.batch = 16
run.seed = 11
)");
}

Outcome c5_identities() {
  const ExperimentConfig base = small_run();
  const std::string ref = format_metrics(train_model(base).rows);
  int zero_alpha = 0, beyond = 0;
  for (auto kind : {PenaltyKind::fp, PenaltyKind::gp, PenaltyKind::gpr, PenaltyKind::gpx}) {
    ExperimentConfig c = base;
    c.reg = reg_of(kind, 0.0);
    zero_alpha += format_metrics(train_model(c).rows) == ref;
    c.reg = reg_of(kind, 0.5);
    c.reg.start_epoch = base.optim.epochs;
    beyond += format_metrics(train_model(c).rows) == ref;
  }
  ExperimentConfig late = base;
  late.reg = reg_of(PenaltyKind::fp, 0.5);
  late.reg.start_epoch = 128;
  beyond += format_metrics(train_model(late).rows) == ref;

  int fp_trace = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const ModelSpec spec = mlp_spec(3, {6}, 4, Activation::relu);
    const ParamVector theta = init_params(spec, InitScheme::he_normal, seed);
    const Dataset d = random_dataset(spec, 16, seed + 50);
    fp_trace += penalty_value(spec, theta, whole_batch(d), reg_of(PenaltyKind::fp), seed) ==
                tr_f_minibatch(spec, theta, whole_batch(d), seed).value;
  }

  int zero_logits = 0;
  const ModelSpec spec = mlp_spec(3, {6}, 4, Activation::tanh);
  const ParamVector zeros = init_params(spec, InitScheme::zeros, 0);
  const Dataset d = random_dataset(spec, 12, 1);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const PenaltyEval fp = penalty_eval(spec, zeros, whole_batch(d), reg_of(PenaltyKind::fp), seed);
    const PenaltyEval gpr = penalty_eval(spec, zeros, whole_batch(d), reg_of(PenaltyKind::gpr), seed);
    zero_logits += fp.labels == gpr.labels && fp.value == gpr.value && fp.grad == gpr.grad;
  }
  return {zero_alpha == 4 && beyond == 5 && fp_trace == 10 && zero_logits == 5,
          "alpha=0 identical " + std::to_string(zero_alpha) + "/4, late start " + std::to_string(beyond) +
              "/5, FP==tr_f_minibatch " + std::to_string(fp_trace) + "/10, FP==GPr at zero logits " +
              std::to_string(zero_logits) + "/5"};
}

// Shared by the explosion and rescue checks.
struct ExplosionRuns {
  ExperimentConfig tuned_cfg, small_cfg;
  Splits data;
  TrainResult tuned;  // per-step probes on
  TrainResult small;
};

const ExplosionRuns& explosion_runs() {
  static std::optional<ExplosionRuns> cache;
  if (!cache) {
    ExplosionRuns r;
    r.tuned_cfg = fixture("explosion.cfg");
    r.small_cfg = r.tuned_cfg;
    r.small_cfg.optim.schedule.base_lr = 0.003;
    r.data = prepare_data(r.tuned_cfg);
    ExperimentConfig per_step = r.tuned_cfg;
    per_step.probe.every_steps = 1;
    r.tuned = train_model(per_step, r.data);
    r.small = train_model(r.small_cfg, r.data);
    cache = std::move(r);
  }
  return *cache;
}

Outcome c6_explosion() {
  const ExplosionRuns& e = explosion_runs();
  const auto tuned_max = epoch_max_tr_f(e.tuned.rows), small_max = epoch_max_tr_f(e.small.rows);
  const auto tuned_acc = e.tuned.summary.final_test_acc, small_acc = e.small.summary.final_test_acc;
  std::optional<double> step_max;
  std::size_t step_rows = 0;
  for (const auto& r : e.tuned.rows)
    if (!r.train_loss && r.tr_f) {
      ++step_rows;
      if (!step_max || *r.tr_f > *step_max) step_max = r.tr_f;
    }
  const bool ok = tuned_max && small_max && tuned_acc && small_acc && step_max && *small_max >= 2.0 * *tuned_max &&
                  *small_acc < *tuned_acc && *step_max < *small_max && step_rows == e.tuned.steps_done;
  return {ok, "max tr_f small " + num(small_max) + " vs tuned " + num(tuned_max) + ", test " + num(small_acc) +
                  " vs " + num(tuned_acc) + ", tuned per-step max " + num(step_max) + " over " +
                  std::to_string(step_rows) + " steps"};
}

Outcome c7_rescue() {
  const ExplosionRuns& e = explosion_runs();
  const auto small_max = epoch_max_tr_f(e.small.rows);
  const auto tuned_acc = e.tuned.summary.final_test_acc;
  std::optional<TrainResult> best;
  double best_val = -1.0, best_alpha = 0.0;
  for (double alpha : default_alpha_grid()) {
    ExperimentConfig c = e.small_cfg;
    c.reg = reg_of(PenaltyKind::fp, alpha);
    TrainResult r = train_model(c, e.data);
    if (r.summary.aborted_at_step) continue;
    const double v = max_val_acc(r.rows);
    if (v > best_val) {
      best_val = v;
      best_alpha = alpha;
      best = std::move(r);
    }
  }
  if (!best) return {false, "every FP run diverged"};
  const auto peak = epoch_max_tr_f(best->rows);
  const auto acc = best->summary.final_test_acc;
  const bool ok = peak && small_max && acc && tuned_acc && *peak * 2.0 <= *small_max && *acc >= *tuned_acc - 0.01;
  return {ok, "alpha " + num(best_alpha) + " (best val " + num(best_val) + "): peak tr_f " + num(peak) + " vs " +
                  num(small_max) + " unregularized, test " + num(acc) + " vs tuned " + num(tuned_acc)};
}

Outcome c8_delayed() {
  const ExperimentConfig c = fixture("noisy_gaussians.cfg");
  std::vector<std::uint64_t> starts;
  for (std::uint64_t e : {1, 2, 4, 8, 16, 32, 64, 128})
    if (e < c.optim.epochs) starts.push_back(e);
  const DelayedResult r = run_delayed_start(c, starts);
  const auto& last = r.runs.back();
  bool ok = last.final_test_acc.has_value() && starts.back() > 4;
  std::string detail = "E=" + std::to_string(last.start_epoch) + " test " + num(last.final_test_acc) + " vs E<=4:";
  for (const auto& run : r.runs)
    if (run.start_epoch <= 4) {
      detail += " " + num(run.final_test_acc);
      ok = ok && run.final_test_acc && *last.final_test_acc < *run.final_test_acc;
    }
  return {ok, detail};
}

Outcome c9_memorization() {
  const ExperimentConfig c = fixture("noisy_gaussians.cfg");
  const NoisyResult r = run_noisy(c, 0.25);
  const NoisyRun& base = r.runs.at(0);
  std::size_t bi = 1;
  for (std::size_t i = 2; i < r.runs.size(); ++i)
    if (r.runs[i].summary.test_acc_at_best_val > r.runs[bi].summary.test_acc_at_best_val) bi = i;
  const NoisyRun& fp = r.runs.at(bi);
  const bool a = fp.ratio_deviation && base.ratio_deviation && *fp.ratio_deviation < *base.ratio_deviation;
  const bool b = fp.noisy_acc_at_clean_target && base.noisy_acc_at_clean_target &&
                 *fp.noisy_acc_at_clean_target < *base.noisy_acc_at_clean_target;
  const bool cc = fp.summary.test_acc_at_best_val && base.summary.test_acc_at_best_val &&
                  *fp.summary.test_acc_at_best_val > *base.summary.test_acc_at_best_val;
  const bool d = base.early_cosine && *base.early_cosine < 0.0;
  return {a && b && cc && d,
          fp.label + " vs baseline: |log ratio| " + num(fp.ratio_deviation) + " vs " + num(base.ratio_deviation) +
              (a ? "" : " (a failed)") + ", noisy acc at 90% clean " + num(fp.noisy_acc_at_clean_target) + " vs " +
              num(base.noisy_acc_at_clean_target) + (b ? "" : " (b failed)") + ", test@best val " +
              num(fp.summary.test_acc_at_best_val) + " vs " + num(base.summary.test_acc_at_best_val) +
              (cc ? "" : " (c failed)") + ", early cosine " + num(base.early_cosine) + (d ? "" : " (not negative)")};
}

Outcome c10_trace() {
  const ExperimentConfig c = fixture("trace_h.cfg");
  const TrainResult r = train_model(c);
  const FileSummary s = summarize_metrics(r.rows, c.run.epsilon);
  const bool ok = s.probe_pairs >= 100 && s.pearson_tr_f_tr_h && *s.pearson_tr_f_tr_h > 0.8;
  return {ok, std::to_string(s.probe_pairs) + " probes, pearson " + num(s.pearson_tr_f_tr_h)};
}

Outcome c11_sweeps() {
  bool ok = true;
  std::string detail;
  for (const char* name : {"sweep_lr.cfg", "sweep_batch.cfg"}) {
    const ExperimentConfig c = fixture(name);
    const SweepResult r = run_sweep(c, parse_sweep_axis(c.run.sweep_axis), c.run.sweep_values, c.run.seeds);
    ok = ok && c.run.sweep_values.size() == 3 && c.run.seeds.size() == 4 && r.correlated_runs == 12 &&
         r.spearman_log_trfi_test && *r.spearman_log_trfi_test < 0.0;
    detail += c.run.sweep_axis + " spearman " + num(r.spearman_log_trfi_test) + " (" +
              std::to_string(r.correlated_runs) + " runs) ";
  }
  return {ok, detail};
}

Outcome c12_branch() {
  const ExperimentConfig base = fixture("branch.cfg");
  bool ok = base.run.branch_epoch == 20 && base.run.branches == 8;
  std::string detail;
  for (std::uint64_t master : {1, 2}) {
    ExperimentConfig c = base;
    c.run.seed = master;
    ExperimentConfig high = c, low = c;
    apply_overrides(high, c.run.high);
    apply_overrides(low, c.run.low);
    const BranchResult r = run_branch(c, c.run.branch_epoch, c.run.branches, high, low);
    if (!r.high.trf_i.value || !r.low.trf_i.value || !r.high.median_tr_h || !r.low.median_tr_h) {
      ok = false;
      detail += "seed " + std::to_string(master) + ": missing values ";
      continue;
    }
    const bool high_is_low_trfi = *r.high.trf_i.value < *r.low.trf_i.value;
    const BranchParent& lo = high_is_low_trfi ? r.high : r.low;
    const BranchParent& hi = high_is_low_trfi ? r.low : r.high;
    ok = ok && *lo.median_tr_h < *hi.median_tr_h;
    detail += "seed " + std::to_string(master) + ": low-TrF_i parent (" + lo.label + ", " + num(lo.trf_i.value) +
              ") median tr_h " + num(lo.median_tr_h) + " vs " + num(hi.median_tr_h) + "; ";
  }
  return {ok, detail};
}

Outcome c13_determinism() {
  const ExperimentConfig c = small_run();
  const bool csv = format_metrics(train_model(c).rows) == format_metrics(train_model(c).rows);

  Rng rng(5);
  io::Writer img, lab;
  img.u32_be(kIdxImagesMagic);
  img.u32_be(7);
  img.u32_be(5);
  img.u32_be(4);
  for (int i = 0; i < 7 * 5 * 4; ++i) img.u8(static_cast<std::uint8_t>(rng.below(256)));
  lab.u32_be(kIdxLabelsMagic);
  lab.u32_be(7);
  for (int i = 0; i < 7; ++i) lab.u8(static_cast<std::uint8_t>(rng.below(10)));
  const Dataset d = parse_idx(img.bytes(), lab.bytes());
  const IdxBytes back = encode_idx(d);
  const bool idx = back.images == img.bytes() && back.labels == lab.bytes() && parse_idx(back.images, back.labels) == d;

  bool ck = true;
  for (const ModelSpec& spec : {mlp_spec(2, {64, 64}, 2), conv_spec(), linear_spec(3, 4)}) {
    Checkpoint k{spec, init_params(spec, InitScheme::he_normal, 5), init_params(spec, InitScheme::he_normal, 6)};
    const auto bytes = encode_checkpoint(k);
    ck = ck && decode_checkpoint(bytes) == k && encode_checkpoint(decode_checkpoint(bytes)) == bytes;
  }
  return {csv && idx && ck, std::string("csv ") + (csv ? "identical" : "differs") + ", idx " +
                                (idx ? "bit-exact" : "differs") + ", checkpoint " + (ck ? "bit-exact" : "differs")};
}

struct Criterion {
  std::string id, name;
  double limit_s;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all{
      {"C1", "gradient correctness", 60, c1_gradients},
      {"C2", "Tr(F) estimator equivalence", 300, c2_tr_f},
      {"C3", "Hutchinson correctness", 300, c3_hutchinson},
      {"C4", "penalty-gradient correctness", 120, c4_penalty_grads},
      {"C5", "identity contracts", 120, c5_identities},
      {"C6", "Fisher explosion at small learning rate", 1800, c6_explosion},
      {"C7", "Fisher penalty rescue", 7200, c7_rescue},
      {"C8", "delayed start", 7200, c8_delayed},
      {"C9", "memorization under label noise", 7200, c9_memorization},
      {"C10", "Tr(H) tracks Tr(F)", 1800, c10_trace},
      {"C11", "TrF_i vs generalization sweeps", 10800, c11_sweeps},
      {"C12", "branching", 10800, c12_branch},
      {"C13", "determinism and format stability", 300, c13_determinism},
  };
  const std::set<std::string> only(argv + 1, argv + argc);
  int failures = 0;
  for (const auto& c : all) {
    if (!only.empty() && !only.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    // C7 reuses the C6 runs, so it only pays for them when run without C6.
    const bool in_time = secs <= c.limit_s;
    if (!in_time) o.detail += " (over the " + num(c.limit_s) + " s budget)";
    const bool pass = o.pass && in_time;
    failures += !pass;
    std::printf("%s %s %s: %s [%.1f s]\n", pass ? "PASS" : "FAIL", c.id.c_str(), c.name.c_str(), o.detail.c_str(),
                secs);
    std::fflush(stdout);
  }
  std::printf("%d failure(s)\n", failures);
  return failures == 0 ? 0 : 1;
}
