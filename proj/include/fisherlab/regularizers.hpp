// Copyright (c) 2026 The fisherlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cctype>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fisherlab/curvature.hpp"
#include "fisherlab/dataset.hpp"
#include "fisherlab/error.hpp"
#include "fisherlab/gradients.hpp"
#include "fisherlab/labels.hpp"
#include "fisherlab/nets.hpp"
#include "fisherlab/params.hpp"
#include "fisherlab/rng.hpp"

namespace fisherlab {

enum class PenaltyKind { none, fp, gp, gpr, gpx, mixup };

inline std::string_view to_string(PenaltyKind k) {
  switch (k) {
    case PenaltyKind::none: return "none";
    case PenaltyKind::fp: return "fp";
    case PenaltyKind::gp: return "gp";
    case PenaltyKind::gpr: return "gpr";
    case PenaltyKind::gpx: return "gpx";
    case PenaltyKind::mixup: return "mixup";
  }
  return "?";
}

inline PenaltyKind parse_penalty_kind(std::string_view s) {
  std::string lower(s);
  for (auto& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  for (auto k : {PenaltyKind::none, PenaltyKind::fp, PenaltyKind::gp, PenaltyKind::gpr, PenaltyKind::gpx,
                 PenaltyKind::mixup})
    if (lower == to_string(k)) return k;
  fail(Errc::config, "unknown penalty kind '" + std::string(s) + "'");
}

inline bool is_gradient_penalty(PenaltyKind k) {
  return k == PenaltyKind::fp || k == PenaltyKind::gp || k == PenaltyKind::gpr || k == PenaltyKind::gpx;
}

struct RegularizerConfig {
  PenaltyKind kind = PenaltyKind::none;
  double alpha = 0.0;
  std::uint64_t start_epoch = 0;
  std::uint64_t refresh_every = 10;
  double mixup_beta = 1.0;
  bool exact_single_example = false;

  void validate() const {
    require(std::isfinite(alpha) && alpha >= 0.0, Errc::config, "reg.alpha must be >= 0");
    require(refresh_every >= 1, Errc::config, "reg.refresh_every must be >= 1");
    if (kind == PenaltyKind::mixup)
      require(std::isfinite(mixup_beta) && mixup_beta > 0.0, Errc::config, "reg.mixup_beta must be > 0");
  }

  /// Whether the additive penalty term is in effect at `epoch`. A zero
  /// coefficient counts as off so that it costs nothing and draws nothing.
  bool penalty_active(std::uint64_t epoch) const {
    return is_gradient_penalty(kind) && alpha > 0.0 && epoch >= start_epoch;
  }

  friend bool operator==(const RegularizerConfig&, const RegularizerConfig&) = default;
};

/// Most recent penalty gradient, unscaled by alpha.
struct PenaltyCache {
  ParamVector grad;
  std::uint64_t step = 0;
  double value = 0.0;
  bool valid = false;
};

namespace detail {
inline void require_penalty(PenaltyKind k) {
  require(is_gradient_penalty(k), Errc::invalid_argument,
          "penalty requested for kind '" + std::string(to_string(k)) + "'");
}

inline LabelSource label_source(PenaltyKind k) {
  switch (k) {
    case PenaltyKind::fp: return LabelSource::model;
    case PenaltyKind::gpr: return LabelSource::uniform;
    default: return LabelSource::truth;
  }
}

/// The single-example FP variant only looks at the first example.
inline Batch penalty_batch(const Batch& batch, const RegularizerConfig& cfg) {
  require(batch.size() >= 1, Errc::invalid_argument, "penalty on an empty batch");
  if (!(cfg.kind == PenaltyKind::fp && cfg.exact_single_example)) return batch;
  Batch one;
  one.inputs = gather_rows(batch.inputs, std::vector<std::size_t>{0});
  one.labels = {batch.labels[0]};
  one.classes = batch.classes;
  if (!batch.noise.empty()) one.noise = {batch.noise[0]};
  if (!batch.indices.empty()) one.indices = {batch.indices[0]};
  return one;
}
}  // namespace detail

/// Labels the penalty is evaluated under: model samples for FP, uniform
/// samples for GPr, the batch labels for GP and GPx.
inline std::vector<int> penalty_labels(const ModelSpec& spec, const ParamVector& theta, const Batch& batch,
                                       const RegularizerConfig& cfg, std::uint64_t seed) {
  detail::require_penalty(cfg.kind);
  const Batch b = detail::penalty_batch(batch, cfg);
  const LabelSource src = detail::label_source(cfg.kind);
  if (src == LabelSource::truth) {
    check_labels(b.labels, spec.classes, b.size());
    return b.labels;
  }
  return sample_labels(forward_logits(spec, theta, b.inputs), src, b.labels, seed);
}

/// Penalty value with the labels already fixed. `inputs` must be the batch
/// returned through penalty_batch (one row for the single-example variant).
inline double penalty_value_frozen(const ModelSpec& spec, const ParamVector& theta, const Tensor& inputs,
                                   std::span<const int> labels, PenaltyKind kind) {
  detail::require_penalty(kind);
  if (kind == PenaltyKind::gpx) {
    const InputGrad ig = value_and_input_grad(spec, theta, inputs, labels);
    const std::size_t b = inputs.dim(0);
    double total = 0.0;
    for (std::size_t i = 0; i < b; ++i) {
      double sq = 0.0;
      for (double v : ig.input_grads.row(i)) sq += v * v;
      total += sq;
    }
    return total / static_cast<double>(b);
  }
  return squared_norm(make_model_oracle(spec, inputs, labels)(theta).grad);
}

/// Gradient of |g(theta)|^2 for an oracle's mean gradient g: 2 H g, with the
/// Hessian-vector product taken by finite differences. Zero when g is zero.
inline ParamVector grad_norm_penalty_grad(const GradOracle& oracle, const ParamVector& theta,
                                          const HvpConfig& hvp = {}) {
  const ParamVector g = oracle(theta).grad;
  if (squared_norm(g) == 0.0) return theta.zeros_like();
  return scaled(hvp_fd(oracle, theta, g, hvp), 2.0);
}

/// Gradient over theta of penalty_value_frozen, by finite-difference
/// composition of first-order gradients.
inline ParamVector penalty_grad_frozen(const ModelSpec& spec, const ParamVector& theta, const Tensor& inputs,
                                       std::span<const int> labels, PenaltyKind kind, const HvpConfig& hvp = {}) {
  detail::require_penalty(kind);
  require(hvp.rel_step > 0.0, Errc::invalid_argument, "hvp step must be positive");
  if (kind != PenaltyKind::gpx) return grad_norm_penalty_grad(make_model_oracle(spec, inputs, labels), theta, hvp);

  // d/dtheta |g_x|^2 = 2 d/de g_theta(x + e c) at e = 0 with c = g_x frozen.
  // Each row gets its own step; weighting row i by 1/(2 eps_i) in the soft
  // targets folds all rows into two batched gradient evaluations.
  const InputGrad ig = value_and_input_grad(spec, theta, inputs, labels);
  const std::size_t b = inputs.dim(0), c = spec.classes;
  Tensor up = inputs, down = inputs;
  Tensor weights(Shape{b, c});
  bool any = false;
  for (std::size_t i = 0; i < b; ++i) {
    const auto ci = ig.input_grads.row(i);
    const auto xi = inputs.row(i);
    double cn = 0.0, xn = 0.0;
    for (double v : ci) cn += v * v;
    for (double v : xi) xn += v * v;
    cn = std::sqrt(cn);
    if (cn == 0.0) continue;
    any = true;
    const double eps = hvp.rel_step * (1.0 + std::sqrt(xn)) / cn;
    auto u = up.row(i), d = down.row(i);
    for (std::size_t k = 0; k < ci.size(); ++k) {
      u[k] = xi[k] + eps * ci[k];
      d[k] = xi[k] - eps * ci[k];
    }
    weights.at(i, static_cast<std::size_t>(labels[i])) = 1.0 / (2.0 * eps);
  }
  if (!any) return theta.zeros_like();
  const ParamVector gu = model_loss_grad(spec, theta, up, weights).grad;
  const ParamVector gd = model_loss_grad(spec, theta, down, weights).grad;
  ParamVector out = theta.zeros_like();
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = 2.0 * (gu[k] - gd[k]);
  require(out.all_finite(), Errc::non_finite, "GPx penalty gradient");
  return out;
}

struct PenaltyEval {
  double value = 0.0;
  ParamVector grad;
  std::vector<int> labels;
};

/// Value and gradient sharing one label draw.
inline PenaltyEval penalty_eval(const ModelSpec& spec, const ParamVector& theta, const Batch& batch,
                                const RegularizerConfig& cfg, std::uint64_t seed, const HvpConfig& hvp = {}) {
  const Batch b = detail::penalty_batch(batch, cfg);
  PenaltyEval out;
  out.labels = penalty_labels(spec, theta, b, cfg, seed);
  out.value = penalty_value_frozen(spec, theta, b.inputs, out.labels, cfg.kind);
  out.grad = penalty_grad_frozen(spec, theta, b.inputs, out.labels, cfg.kind, hvp);
  return out;
}

/// Unscaled penalty: |mean gradient|^2 for FP/GP/GPr under their label
/// source, mean |input gradient|^2 for GPx.
inline double penalty_value(const ModelSpec& spec, const ParamVector& theta, const Batch& batch,
                            const RegularizerConfig& cfg, std::uint64_t seed) {
  const Batch b = detail::penalty_batch(batch, cfg);
  return penalty_value_frozen(spec, theta, b.inputs, penalty_labels(spec, theta, b, cfg, seed), cfg.kind);
}

inline ParamVector penalty_grad(const ModelSpec& spec, const ParamVector& theta, const Batch& batch,
                                const RegularizerConfig& cfg, std::uint64_t seed, const HvpConfig& hvp = {}) {
  const Batch b = detail::penalty_batch(batch, cfg);
  return penalty_grad_frozen(spec, theta, b.inputs, penalty_labels(spec, theta, b, cfg, seed), cfg.kind, hvp);
}

/// Mixes example i with example perm[i]: x = lambda x_i + (1 - lambda) x_j,
/// targets the same combination of the (one-hot or soft) targets.
inline Batch mixup_batch_with(const Batch& batch, double lambda, std::span<const std::size_t> perm) {
  const std::size_t b = batch.size();
  require(b >= 2, Errc::invalid_argument, "mixup needs a batch of at least 2");
  require(lambda >= 0.0 && lambda <= 1.0, Errc::invalid_argument, "mixup lambda outside [0,1]");
  require(perm.size() == b, Errc::shape_mismatch, "mixup partner list length");
  const Tensor targets = batch.soft_targets ? *batch.soft_targets : one_hot(batch.labels, batch.classes);
  Batch out = batch;
  const double mu = 1.0 - lambda;
  for (std::size_t i = 0; i < b; ++i) {
    const std::size_t j = perm[i];
    require(j < b, Errc::invalid_argument, "mixup partner out of range");
    auto x = out.inputs.row(i);
    const auto xi = batch.inputs.row(i), xj = batch.inputs.row(j);
    for (std::size_t k = 0; k < x.size(); ++k) x[k] = lambda * xi[k] + mu * xj[k];
  }
  Tensor soft(targets.shape());
  for (std::size_t i = 0; i < b; ++i) {
    auto t = soft.row(i);
    const auto ti = targets.row(i), tj = targets.row(perm[i]);
    for (std::size_t k = 0; k < t.size(); ++k) t[k] = lambda * ti[k] + mu * tj[k];
  }
  out.soft_targets = std::move(soft);
  return out;
}

/// lambda ~ Beta(beta, beta), one per batch; partners from a seeded permutation.
inline Batch mixup_batch(const Batch& batch, double beta, std::uint64_t seed) {
  require(std::isfinite(beta) && beta > 0.0, Errc::invalid_argument, "mixup beta must be > 0");
  require(batch.size() >= 2, Errc::invalid_argument, "mixup needs a batch of at least 2");
  Rng rng(seed);
  const double lambda = rng.beta(beta, beta);
  const auto perm = rng.permutation(batch.size());
  return mixup_batch_with(batch, lambda, perm);
}

struct StepGrad {
  double loss = 0.0;  // base loss on the (possibly mixed) batch
  ParamVector grad;
  std::optional<double> penalty_value;  // cached value when a penalty term was added
  bool refreshed = false;
};

/// Training gradient for one step: base gradient plus alpha times the cached
/// penalty gradient when the penalty is active. The cache is refreshed when
/// it is empty, when step is a multiple of refresh_every, or when it has
/// aged refresh_every steps. Inactive penalties draw no random numbers.
inline StepGrad regularized_step_grad(const ModelSpec& spec, const ParamVector& theta, const Batch& batch,
                                      const RegularizerConfig& cfg, PenaltyCache& cache, std::uint64_t epoch,
                                      std::uint64_t step, std::uint64_t master_seed, const HvpConfig& hvp = {}) {
  cfg.validate();
  StepGrad out;
  const Batch* base = &batch;
  Batch mixed;
  // a trailing batch of one example has no partner to mix with
  if (cfg.kind == PenaltyKind::mixup && batch.size() >= 2) {
    mixed = mixup_batch(batch, cfg.mixup_beta, derive_seed(master_seed, streams::mixup, step));
    base = &mixed;
  }
  const Tensor targets = base->soft_targets ? *base->soft_targets : one_hot(base->labels, base->classes);
  LossGrad lg = model_loss_grad(spec, theta, base->inputs, targets);
  require(std::isfinite(lg.loss) && lg.grad.all_finite(), Errc::non_finite,
          "non-finite loss or gradient at step " + std::to_string(step));
  out.loss = lg.loss;
  out.grad = std::move(lg.grad);

  if (!cfg.penalty_active(epoch)) return out;
  const bool stale = !cache.valid || step % cfg.refresh_every == 0 || step - cache.step >= cfg.refresh_every ||
                     step < cache.step;
  if (stale) {
    PenaltyEval pe = penalty_eval(spec, theta, batch, cfg, derive_seed(master_seed, streams::penalty_labels, step), hvp);
    cache = PenaltyCache{std::move(pe.grad), step, pe.value, true};
    out.refreshed = true;
  }
  axpy(cfg.alpha, cache.grad, out.grad);
  out.penalty_value = cache.value;
  return out;
}

}  // namespace fisherlab
