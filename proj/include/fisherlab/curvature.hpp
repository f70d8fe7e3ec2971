// Copyright (c) 2026 The fisherlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string_view>
#include <vector>

#include "fisherlab/dataset.hpp"
#include "fisherlab/error.hpp"
#include "fisherlab/gradients.hpp"
#include "fisherlab/labels.hpp"
#include "fisherlab/nets.hpp"
#include "fisherlab/params.hpp"
#include "fisherlab/rng.hpp"

namespace fisherlab {

enum class CurvatureKind { tr_f, tr_f_minibatch, tr_h_hutchinson, tr_h_exact, tr_f_exact, empirical_fisher };

inline std::string_view to_string(CurvatureKind k) {
  switch (k) {
    case CurvatureKind::tr_f: return "TrF";
    case CurvatureKind::tr_f_minibatch: return "TrF_minibatch";
    case CurvatureKind::tr_h_hutchinson: return "TrH_hutchinson";
    case CurvatureKind::tr_h_exact: return "TrH_exact";
    case CurvatureKind::tr_f_exact: return "TrF_exact";
    case CurvatureKind::empirical_fisher: return "EmpiricalFisher";
  }
  return "?";
}

struct CurvatureEstimate {
  CurvatureKind kind = CurvatureKind::tr_f;
  double value = 0.0;
  std::size_t n_samples = 0;
  double std_error = 0.0;  // 0 for exact kinds
};

/// Relative finite-difference step for Hessian-vector products.
struct HvpConfig {
  double rel_step = 1e-4;
};

namespace detail {
/// Mean and standard error (sample sd / sqrt(n); 0 when n < 2), summed in index order.
inline std::pair<double, double> mean_and_se(std::span<const double> terms) {
  const double n = static_cast<double>(terms.size());
  double mean = 0.0;
  for (double t : terms) mean += t;
  mean /= n;
  if (terms.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double t : terms) ss += (t - mean) * (t - mean);
  return {mean, std::sqrt(ss / (n - 1.0)) / std::sqrt(n)};
}

inline CurvatureEstimate mc_estimate(CurvatureKind kind, std::span<const double> terms) {
  auto [m, se] = mean_and_se(terms);
  return {kind, m, terms.size(), se};
}
}  // namespace detail

/// H v ~ (g(theta + eps v) - g(theta - eps v)) / (2 eps), eps = c (1 + |theta|) / |v|.
inline ParamVector hvp_fd(const GradOracle& oracle, const ParamVector& theta, const ParamVector& v,
                          const HvpConfig& cfg = {}) {
  require(cfg.rel_step > 0.0, Errc::invalid_argument, "hvp step must be positive");
  check_same_layout(theta, v, "hvp_fd");
  const double vn = norm(v);
  require(vn > 0.0, Errc::invalid_argument, "hvp direction has zero norm");
  const double eps = cfg.rel_step * (1.0 + norm(theta)) / vn;
  const ParamVector up = oracle(add_scaled(theta, eps, v)).grad;
  const ParamVector down = oracle(add_scaled(theta, -eps, v)).grad;
  ParamVector out = up;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (up[i] - down[i]) / (2.0 * eps);
  require(out.all_finite(), Errc::non_finite, "hvp_fd");
  return out;
}

/// Hutchinson estimate of Tr(H): mean of z^T H z over M standard Gaussian z.
inline CurvatureEstimate tr_h_hutchinson(const GradOracle& oracle, const ParamVector& theta, std::size_t probes,
                                         std::uint64_t seed, const HvpConfig& cfg = {}) {
  require(probes >= 1, Errc::invalid_argument, "Hutchinson needs M >= 1");
  Rng rng(seed);
  std::vector<double> terms;
  terms.reserve(probes);
  ParamVector z = theta.zeros_like();
  for (std::size_t m = 0; m < probes; ++m) {
    for (double& v : z.data()) v = rng.normal();
    terms.push_back(dot(z, hvp_fd(oracle, theta, z, cfg)));
  }
  return detail::mc_estimate(CurvatureKind::tr_h_hutchinson, terms);
}

/// Exact trace from the P diagonal entries e_i^T H e_i. `order` permutes the
/// evaluation order only; the sum is always taken in index order.
inline CurvatureEstimate tr_h_exact_small(const GradOracle& oracle, const ParamVector& theta, const HvpConfig& cfg = {},
                                          std::size_t cap = 2000, std::span<const std::size_t> order = {}) {
  const std::size_t p = theta.size();
  require(p <= cap, Errc::cap_exceeded, "exact Hessian trace over " + std::to_string(p) + " > cap " + std::to_string(cap));
  std::vector<std::size_t> seq(p);
  if (order.empty()) {
    std::iota(seq.begin(), seq.end(), std::size_t{0});
  } else {
    require(order.size() == p, Errc::invalid_argument, "order must list every coordinate");
    seq.assign(order.begin(), order.end());
  }
  std::vector<double> diag(p, 0.0);
  ParamVector e = theta.zeros_like();
  for (std::size_t i : seq) {
    e[i] = 1.0;
    diag.at(i) = hvp_fd(oracle, theta, e, cfg)[i];
    e[i] = 0.0;
  }
  double sum = 0.0;
  for (double d : diag) sum += d;
  return {CurvatureKind::tr_h_exact, sum, p, 0.0};
}

/// Monte-Carlo Tr(F): n_examples drawn without replacement, then
/// labels_per_example labels from the model's softmax for each; the mean of
/// squared sampled-label gradient norms.
inline CurvatureEstimate tr_f_mc(const ModelSpec& spec, const ParamVector& theta, const Dataset& data,
                                 std::size_t n_examples, std::size_t labels_per_example, std::uint64_t seed) {
  require(data.size() >= 1, Errc::invalid_argument, "tr_f_mc: empty dataset");
  require(n_examples >= 1 && n_examples <= data.size(), Errc::invalid_argument, "tr_f_mc: n_examples out of range");
  require(labels_per_example >= 1, Errc::invalid_argument, "tr_f_mc: labels_per_example must be >= 1");
  check_theta(spec, theta);
  Rng rng(seed);
  const auto idx = rng.sample_without_replacement(data.size(), n_examples);
  std::vector<double> terms;
  terms.reserve(n_examples * labels_per_example);
  std::vector<int> labels(labels_per_example);
  for (std::size_t i : idx) {
    SingleExampleGrads ex(spec, theta, data.inputs.row(i));
    for (auto& y : labels) y = detail::draw_categorical(ex.probs().row(0), rng.uniform());
    for (int y : labels) terms.push_back(squared_norm(ex.grad(y)));
  }
  return detail::mc_estimate(CurvatureKind::tr_f, terms);
}

/// Exact Tr(F) over the given data: mean over x of sum_y p(y|x) |g(x,y)|^2.
inline CurvatureEstimate tr_f_exact(const ModelSpec& spec, const ParamVector& theta, const Dataset& data,
                                    std::size_t cap = 1000000) {
  require(data.size() >= 1, Errc::invalid_argument, "tr_f_exact: empty dataset");
  require(data.size() * spec.classes <= cap, Errc::cap_exceeded, "tr_f_exact: C*N exceeds cap");
  check_theta(spec, theta);
  std::vector<int> all(spec.classes);
  std::iota(all.begin(), all.end(), 0);
  double total = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    Tensor probs;
    const auto grads = per_label_param_grads(spec, theta, data.inputs.row(i), all, &probs);
    double term = 0.0;
    for (std::size_t c = 0; c < spec.classes; ++c) term += probs[c] * squared_norm(grads[c]);
    total += term;
  }
  return {CurvatureKind::tr_f_exact, total / static_cast<double>(data.size()), data.size(), 0.0};
}

/// Tr(F_B): squared norm of the mean gradient with one label per example
/// drawn from the model (labels drawn by sample_labels with `seed`).
inline CurvatureEstimate tr_f_minibatch(const ModelSpec& spec, const ParamVector& theta, const Tensor& inputs,
                                        std::uint64_t seed) {
  require(inputs.rank() >= 1 && inputs.dim(0) >= 1, Errc::invalid_argument, "tr_f_minibatch: empty batch");
  const auto labels = sample_labels(forward_logits(spec, theta, inputs), LabelSource::model, {}, seed);
  const GradOracle oracle = make_model_oracle(spec, inputs, labels);
  return {CurvatureKind::tr_f_minibatch, squared_norm(oracle(theta).grad), inputs.dim(0), 0.0};
}

inline CurvatureEstimate tr_f_minibatch(const ModelSpec& spec, const ParamVector& theta, const Batch& batch,
                                        std::uint64_t seed) {
  return tr_f_minibatch(spec, theta, batch.inputs, seed);
}

/// Mean squared gradient norm under the true labels.
inline CurvatureEstimate empirical_fisher_trace(const ModelSpec& spec, const ParamVector& theta, const Dataset& data) {
  require(data.size() >= 1, Errc::invalid_argument, "empirical_fisher_trace: empty dataset");
  check_theta(spec, theta);
  std::vector<double> terms;
  terms.reserve(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const int y = data.labels[i];
    terms.push_back(squared_norm(per_label_param_grads(spec, theta, data.inputs.row(i), std::span(&y, 1))[0]));
  }
  return detail::mc_estimate(CurvatureKind::empirical_fisher, terms);
}

}  // namespace fisherlab
