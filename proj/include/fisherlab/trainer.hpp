// Copyright (c) 2026 The fisherlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "fisherlab/checkpoint.hpp"
#include "fisherlab/config.hpp"
#include "fisherlab/curvature.hpp"
#include "fisherlab/dataset.hpp"
#include "fisherlab/gradients.hpp"
#include "fisherlab/idx.hpp"
#include "fisherlab/metrics.hpp"
#include "fisherlab/optim.hpp"
#include "fisherlab/regularizers.hpp"
#include "fisherlab/report.hpp"

namespace fisherlab {

inline std::uint64_t data_seed(const ExperimentConfig& c) { return c.data.seed.value_or(c.run.seed); }

/// Builds the dataset, splits it and corrupts the train split when
/// data.noise > 0. Streams: data, split, noise (from data.seed or run.seed).
inline Splits prepare_data(const ExperimentConfig& c) {
  validate(c);
  const auto& d = c.data;
  const std::uint64_t s = data_seed(c);
  Dataset full;
  switch (d.source) {
    case DataSource::spirals:
      full = gen_spirals(d.classes, d.per_class, d.sigma, derive_seed(s, streams::data), d.turns, d.phase);
      break;
    case DataSource::gaussians:
      full = gen_gaussians(d.classes, d.per_class, d.dim, d.separation, derive_seed(s, streams::data));
      break;
    case DataSource::idx: full = load_idx(d.images, d.labels, d.classes); break;
    case DataSource::flds: full = load_flds(d.path); break;
  }
  Splits out = split(full, d.split, derive_seed(s, streams::split));
  if (d.noise > 0.0) out.train = inject_label_noise(out.train, d.noise, derive_seed(s, streams::noise)).first;
  return out;
}

/// Fills inferred model fields from the training data and validates.
inline ModelSpec resolve_model(const ExperimentConfig& c, const Dataset& train) {
  ModelSpec m = c.model;
  if (c.infer_input_shape) {
    m.input_shape = train.example_shape();
    if (m.kind == ModelKind::small_conv && m.input_shape.size() == 2) m.input_shape.insert(m.input_shape.begin(), 1);
    if (m.kind != ModelKind::small_conv && m.input_shape.size() != 1) m.input_shape = {shape_size(m.input_shape)};
  }
  if (c.infer_classes) m.classes = train.classes;
  require(m.classes == train.classes, Errc::config,
          "model.classes = " + std::to_string(m.classes) + " but the data has " + std::to_string(train.classes));
  try {
    make_layout(m);
  } catch (const Error& e) {
    fail(Errc::config, std::string("model: ") + e.what());
  }
  return m;
}

/// Model inputs for a dataset, reshaped to the model's example shape.
inline Tensor model_inputs(const ModelSpec& spec, const Tensor& x) {
  Shape s{x.dim(0)};
  s.insert(s.end(), spec.input_shape.begin(), spec.input_shape.end());
  if (s == x.shape()) return x;
  require(shape_size(s) == x.size(), Errc::shape_mismatch, "inputs do not fit the model input shape");
  return Tensor::from_data(s, std::vector<double>(x.data().begin(), x.data().end()));
}

inline Dataset for_model(const ModelSpec& spec, Dataset d) {
  d.inputs = model_inputs(spec, d.inputs);
  return d;
}

struct GroupGradStats {
  double norm_clean = 0.0;
  double norm_noisy = 0.0;
  double ratio = 0.0;
  double cosine = 0.0;
};

/// Mean-gradient norms over clean and noisy examples (true labels as stored
/// in the dataset), each group capped at `cap` examples drawn with `seed`.
inline GroupGradStats group_gradient_stats(const ModelSpec& spec, const ParamVector& theta, const Dataset& data,
                                           const NoiseMask& mask, std::size_t cap, std::uint64_t seed) {
  require(mask.size() == data.size(), Errc::shape_mismatch, "noise mask length");
  require(cap >= 1, Errc::invalid_argument, "group cap must be >= 1");
  std::vector<std::size_t> clean, noisy;
  for (std::size_t i = 0; i < mask.size(); ++i) (mask.bits[i] ? noisy : clean).push_back(i);
  require(!clean.empty() && !noisy.empty(), Errc::invalid_argument,
          "group statistics need both clean and noisy examples");
  Rng rng(seed);
  auto pick = [&](std::vector<std::size_t>& g) {
    if (g.size() <= cap) return;
    const auto sel = rng.sample_without_replacement(g.size(), cap);
    std::vector<std::size_t> out;
    for (auto s : sel) out.push_back(g[s]);
    g = std::move(out);
  };
  pick(clean);
  pick(noisy);
  auto mean_grad = [&](const std::vector<std::size_t>& idx) {
    std::vector<int> y;
    for (auto i : idx) y.push_back(data.labels[i]);
    return model_loss_grad(spec, theta, gather_rows(data.inputs, idx), one_hot(y, data.classes)).grad;
  };
  const ParamVector gc = mean_grad(clean), gn = mean_grad(noisy);
  GroupGradStats s;
  s.norm_clean = norm(gc);
  s.norm_noisy = norm(gn);
  s.ratio = s.norm_clean > 0.0 ? s.norm_noisy / s.norm_clean : std::numeric_limits<double>::infinity();
  s.cosine = s.norm_clean > 0.0 && s.norm_noisy > 0.0 ? dot(gc, gn) / (s.norm_clean * s.norm_noisy) : 0.0;
  return s;
}

/// Where a run starts: a fresh init, or a saved state (branching, resume).
struct TrainStart {
  ParamVector theta;
  std::optional<ParamVector> velocity;  // none = zero momentum buffer
  std::uint64_t epoch = 0;
  std::uint64_t step = 0;
};

struct TrainResult {
  ModelSpec spec;
  std::vector<MetricsRow> rows;
  RunSummary summary;
  ParamVector theta;
  ParamVector velocity;
  std::uint64_t epochs_done = 0;
  std::uint64_t steps_done = 0;
  std::string abort_message;
  std::optional<std::uint64_t> best_test_epoch;
  std::optional<double> best_test_acc;
  std::optional<double> tr_h_at_best_test;
};

namespace detail {

inline std::uint64_t probe_seed(std::uint64_t master, std::uint64_t step, std::uint64_t k) {
  return derive_seed(master, streams::probe, step * 16 + k);
}

struct EvalResult {
  double loss = 0.0;
  Predictions pred;
};

inline EvalResult evaluate(const ModelSpec& spec, const ParamVector& theta, const Dataset& d) {
  const Tensor logits = forward_logits(spec, theta, d.inputs);
  return {softmax_cross_entropy(logits, d.labels), predict_and_accuracy(logits, d.labels)};
}

/// Training-set subset for Tr(H) and empirical-Fisher probes; fixed per run.
inline std::vector<std::size_t> probe_subset(std::size_t n, std::size_t k, std::uint64_t master) {
  Rng rng(derive_seed(master, streams::probe, std::numeric_limits<std::uint64_t>::max()));
  return rng.sample_without_replacement(n, std::min(k, n));
}

inline CurvatureEstimate trace_h(const ModelSpec& spec, const ParamVector& theta, const Dataset& train,
                                 std::span<const std::size_t> subset, const ProbePlan& plan, std::uint64_t seed) {
  std::vector<int> y;
  for (auto i : subset) y.push_back(train.labels[i]);
  const GradOracle oracle = make_model_oracle(spec, gather_rows(train.inputs, subset), y);
  return tr_h_hutchinson(oracle, theta, plan.hutchinson_m, seed, plan.hvp);
}

}  // namespace detail

/// SGD loop from start.epoch to `end_epoch` (exclusive) with the configured
/// penalty and probe plan. Writes one row at the start, one per epoch and,
/// in per-step mode, one per probed step. A non-finite loss or parameter
/// stops the run and records the step index.
inline TrainResult train_model(const ExperimentConfig& c, const Splits& raw, std::optional<TrainStart> start = {},
                               std::optional<std::uint64_t> end_epoch = {}) {
  validate(c);
  TrainResult res;
  res.spec = resolve_model(c, raw.train);
  const ModelSpec& spec = res.spec;
  const Dataset train = for_model(spec, raw.train), val = for_model(spec, raw.val), test = for_model(spec, raw.test);
  const std::uint64_t seed = c.run.seed;
  const std::uint64_t last_epoch = end_epoch.value_or(c.optim.epochs);
  const ProbePlan& plan = c.probe;
  const std::size_t n = train.size();
  require(c.optim.batch_size <= n, Errc::config, "optim.batch_size exceeds the training set");

  ParamVector theta = start ? start->theta : init_params(spec, c.init, derive_seed(seed, streams::init));
  check_theta(spec, theta);
  SgdState opt = SgdState::for_params(theta, c.optim.momentum, c.optim.weight_decay);
  if (start && start->velocity) {
    check_same_layout(theta, *start->velocity, "start velocity");
    opt.velocity = *start->velocity;
  }
  std::uint64_t step = start ? start->step : 0;
  const std::uint64_t first_epoch = start ? start->epoch : 0;
  const auto fixed_subset = detail::probe_subset(n, std::max(plan.tr_h_examples, plan.tr_f_examples), seed);
  const bool has_groups = train.noise && std::find(train.noise->bits.begin(), train.noise->bits.end(), 1) !=
                                             train.noise->bits.end() &&
                          std::find(train.noise->bits.begin(), train.noise->bits.end(), 0) != train.noise->bits.end();

  ParamVector best_val_theta = theta, best_test_theta = theta;
  std::optional<double> best_val;

  auto epoch_row = [&](std::uint64_t epoch, double lr, std::optional<double> penalty) {
    MetricsRow r;
    r.epoch = epoch;
    r.step = step;
    r.lr = lr;
    const auto tr = detail::evaluate(spec, theta, train);
    r.train_loss = tr.loss;
    r.train_acc = tr.pred.accuracy;
    const auto va = detail::evaluate(spec, theta, val);
    r.val_loss = va.loss;
    r.val_acc = va.pred.accuracy;
    if (epoch % c.run.eval_every == 0 || epoch == last_epoch || epoch == first_epoch)
      r.test_acc = detail::evaluate(spec, theta, test).pred.accuracy;
    r.penalty_value = penalty;
    if (plan.every_epochs > 0 && epoch % plan.every_epochs == 0) {
      if (plan.tr_f)
        r.tr_f = tr_f_mc(spec, theta, train, std::min(plan.tr_f_examples, n), plan.tr_f_labels,
                         detail::probe_seed(seed, step, 0))
                     .value;
      if (plan.tr_f_minibatch) {
        Rng pick(detail::probe_seed(seed, step, 1));
        const auto idx = pick.sample_without_replacement(n, std::min(plan.batch, n));
        r.tr_f_minibatch = tr_f_minibatch(spec, theta, gather_rows(train.inputs, idx), detail::probe_seed(seed, step, 2)).value;
      }
      if (plan.tr_h) {
        const std::span<const std::size_t> sub(fixed_subset.data(), std::min(plan.tr_h_examples, n));
        r.tr_h = detail::trace_h(spec, theta, train, sub, plan, detail::probe_seed(seed, step, 3)).value;
      }
      if (plan.empirical_fisher) {
        const std::span<const std::size_t> sub(fixed_subset.data(), std::min(plan.tr_f_examples, n));
        r.empirical_fisher = empirical_fisher_trace(spec, theta, subset(train, sub)).value;
      }
    }
    if (has_groups) {
      std::size_t nc = 0, nn = 0, hc = 0, hn = 0;
      for (std::size_t i = 0; i < n; ++i) {
        const bool hit = tr.pred.labels[i] == train.labels[i];
        if (train.noise->bits[i]) ++nn, hn += hit;
        else ++nc, hc += hit;
      }
      r.train_acc_clean = static_cast<double>(hc) / static_cast<double>(nc);
      r.train_acc_noisy = static_cast<double>(hn) / static_cast<double>(nn);
      if (plan.group_stats) {
        const auto g = group_gradient_stats(spec, theta, train, *train.noise, plan.group_cap,
                                            detail::probe_seed(seed, step, 4));
        r.grad_norm_clean = g.norm_clean;
        r.grad_norm_noisy = g.norm_noisy;
        r.grad_norm_ratio = g.ratio;
        r.cos_clean_noisy = g.cosine;
      }
    }
    if (!best_val || *r.val_acc > *best_val) {
      best_val = r.val_acc;
      best_val_theta = theta;
    }
    if (r.test_acc && (!res.best_test_acc || *r.test_acc > *res.best_test_acc)) {
      res.best_test_acc = r.test_acc;
      res.best_test_epoch = epoch;
      best_test_theta = theta;
    }
    res.rows.push_back(r);
  };

  epoch_row(first_epoch, lr_at(c.optim.schedule, first_epoch), std::nullopt);

  PenaltyCache cache;
  bool aborted = false;
  for (std::uint64_t e = first_epoch; e < last_epoch && !aborted; ++e) {
    const double lr = lr_at(c.optim.schedule, e);
    double pen_sum = 0.0;
    std::size_t pen_n = 0;
    for (const auto& idx : epoch_batch_indices(n, c.optim.batch_size, seed, e)) {
      const Batch batch = make_batch(train, idx);
      try {
        const StepGrad sg = regularized_step_grad(spec, theta, batch, c.reg, cache, e, step, seed, plan.hvp);
        sgd_step(opt, theta, sg.grad, lr);
        require(theta.all_finite(), Errc::non_finite, "non-finite parameters at step " + std::to_string(step));
        if (sg.penalty_value) pen_sum += *sg.penalty_value, ++pen_n;
        ++step;
        if (plan.every_steps > 0 && step % plan.every_steps == 0) {
          MetricsRow r;
          r.epoch = e + 1;
          r.step = step;
          r.lr = lr;
          r.penalty_value = sg.penalty_value;
          r.tr_f = tr_f_mc(spec, theta, train, std::min(plan.step_examples, n), 1, detail::probe_seed(seed, step, 7)).value;
          res.rows.push_back(r);
        }
      } catch (const Error& err) {
        if (err.code() != Errc::non_finite) throw;
        res.summary.aborted_at_step = step;
        res.abort_message = err.what();
        aborted = true;
        break;
      }
    }
    if (aborted) break;
    res.epochs_done = e + 1 - first_epoch;
    epoch_row(e + 1, lr, pen_n ? std::optional<double>(pen_sum / static_cast<double>(pen_n)) : std::nullopt);
  }

  res.steps_done = step;
  res.theta = theta;
  res.velocity = opt.velocity;
  const auto aborted_at = res.summary.aborted_at_step;
  res.summary = summarize_rows(res.rows, c.run.epsilon);
  res.summary.aborted_at_step = aborted_at;
  // Tr(H) at the selected snapshots, on the fixed probe subset.
  const std::span<const std::size_t> sub(fixed_subset.data(), std::min(plan.tr_h_examples, n));
  const std::uint64_t snap_seed = derive_seed(seed, streams::probe, std::numeric_limits<std::uint64_t>::max() - 1);
  if (!res.summary.tr_h_at_best_val && best_val && best_val_theta.all_finite())
    res.summary.tr_h_at_best_val = detail::trace_h(spec, best_val_theta, train, sub, plan, snap_seed).value;
  if (res.best_test_acc && best_test_theta.all_finite())
    res.tr_h_at_best_test = detail::trace_h(spec, best_test_theta, train, sub, plan, snap_seed).value;
  return res;
}

inline TrainResult train_model(const ExperimentConfig& c) { return train_model(c, prepare_data(c)); }

inline Report summary_report(const ExperimentConfig& c, const TrainResult& r) {
  Report rep;
  const auto& s = r.summary;
  rep.kv("run", c.run.name.empty() ? std::string("train") : c.run.name);
  rep.kv("status", s.aborted_at_step ? "aborted at step " + std::to_string(*s.aborted_at_step) : std::string("completed"));
  if (s.aborted_at_step) rep.kv("abort_reason", r.abort_message);
  rep.kv_int("epochs", r.epochs_done);
  rep.kv_int("steps", r.steps_done);
  rep.kv("epsilon", c.run.epsilon);
  rep.kv("trf_i", s.trf_i.value);
  rep.kv("trf_i_status", to_string(s.trf_i.status));
  rep.kv_int("trf_i_epoch", s.trf_i.epoch);
  rep.kv("max_tr_f", s.max_tr_f);
  rep.kv_int("best_val_epoch", s.best_val_epoch);
  rep.kv("test_acc_at_best_val", s.test_acc_at_best_val);
  rep.kv("final_train_acc", s.final_train_acc);
  rep.kv("final_test_acc", s.final_test_acc);
  rep.kv("tr_h_at_best_val", s.tr_h_at_best_val);
  rep.kv_int("best_test_epoch", r.best_test_epoch);
  rep.kv("best_test_acc", r.best_test_acc);
  rep.kv("tr_h_at_best_test", r.tr_h_at_best_test);
  return rep;
}

/// metrics.csv, summary.txt, config.txt and final.flck under `dir`.
inline void write_run(const std::filesystem::path& dir, const ExperimentConfig& c, const TrainResult& r) {
  std::filesystem::create_directories(dir);
  write_metrics(dir / "metrics.csv", r.rows);
  summary_report(c, r).write(dir / "summary.txt");
  const std::string text = to_text(c);
  io::write_file(dir / "config.txt", std::vector<std::uint8_t>(text.begin(), text.end()));
  if (r.theta.all_finite()) save_checkpoint(Checkpoint{r.spec, r.theta, r.velocity}, dir / "final.flck");
}

}  // namespace fisherlab
