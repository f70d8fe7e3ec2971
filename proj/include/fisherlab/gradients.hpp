// Copyright (c) 2026 The fisherlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <memory>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

#include "fisherlab/autodiff.hpp"
#include "fisherlab/error.hpp"
#include "fisherlab/nets.hpp"
#include "fisherlab/params.hpp"
#include "fisherlab/tensor.hpp"

namespace fisherlab {

struct LossGrad {
  double loss = 0.0;
  ParamVector grad;
};

/// Mean loss and mean parameter gradient of a model on a batch with target
/// distributions `targets` [B,C].
inline LossGrad model_loss_grad(const ModelSpec& spec, const ParamVector& theta, const Tensor& inputs,
                                const Tensor& targets) {
  ad::Tape tape;
  auto p = param_vars(tape, theta, true);
  ad::Var x = tape.constant(inputs);
  ad::Var loss = tape.softmax_cross_entropy(build_logits(tape, spec, p, x), targets);
  tape.backward(loss);
  LossGrad out{tape.value(loss)[0], theta.zeros_like()};
  for (std::size_t i = 0; i < p.size(); ++i) {
    Tensor g = tape.grad(p[i]);
    auto dst = out.grad.block(i);
    std::copy(g.data().begin(), g.data().end(), dst.begin());
  }
  return out;
}

/// One forward pass on a single example, then any number of label-specific
/// backward passes. grad(y) is the gradient of -log p(y | x).
class SingleExampleGrads {
 public:
  SingleExampleGrads(const ModelSpec& spec, const ParamVector& theta, std::span<const double> x)
      : theta_(&theta) {
    params_ = param_vars(tape_, theta, true);
    Shape s{1};
    s.insert(s.end(), spec.input_shape.begin(), spec.input_shape.end());
    require(x.size() == spec.input_size(), Errc::shape_mismatch, "example size does not match the model");
    Tensor xt(s);
    std::copy(x.begin(), x.end(), xt.data().begin());
    logits_ = build_logits(tape_, spec, params_, tape_.constant(std::move(xt)));
    probs_ = softmax(tape_.value(logits_));
  }

  const Tensor& probs() const noexcept { return probs_; }
  const Tensor& logits() const { return tape_.value(logits_); }

  ParamVector grad(int label) {
    require(label >= 0 && static_cast<std::size_t>(label) < probs_.size(), Errc::label_out_of_range, "label");
    Tensor seed = probs_;  // d(-log p_y)/dz = p - e_y
    seed[static_cast<std::size_t>(label)] -= 1.0;
    tape_.zero_grad();
    tape_.backward(logits_, seed);
    ParamVector g = theta_->zeros_like();
    for (std::size_t i = 0; i < params_.size(); ++i) {
      Tensor gi = tape_.grad(params_[i]);
      auto dst = g.block(i);
      std::copy(gi.data().begin(), gi.data().end(), dst.begin());
    }
    return g;
  }

 private:
  const ParamVector* theta_;
  ad::Tape tape_;
  std::vector<ad::Var> params_;
  ad::Var logits_;
  Tensor probs_;
};

/// Parameter gradients of a single example for several labels, sharing one
/// forward pass. Entry k is the gradient of -log p(labels[k] | x).
inline std::vector<ParamVector> per_label_param_grads(const ModelSpec& spec, const ParamVector& theta,
                                                      std::span<const double> x, std::span<const int> labels,
                                                      Tensor* probs_out = nullptr) {
  SingleExampleGrads ex(spec, theta, x);
  if (probs_out) *probs_out = ex.probs();
  std::vector<ParamVector> out;
  out.reserve(labels.size());
  for (int y : labels) out.push_back(ex.grad(y));
  return out;
}

/// Binds data and labels to a function theta -> (mean loss, mean gradient).
/// Evaluation over any subset of the bound examples is supported so that
/// per-example quantities can be formed from the same binding.
class GradOracle {
 public:
  using Eval = std::function<LossGrad(const ParamVector&, std::span<const std::size_t>)>;

  GradOracle(LayoutPtr layout, std::size_t num_examples, Eval eval)
      : layout_(std::move(layout)), all_(num_examples), eval_(std::move(eval)) {
    std::iota(all_.begin(), all_.end(), std::size_t{0});
  }

  const LayoutPtr& layout() const noexcept { return layout_; }
  std::size_t num_examples() const noexcept { return all_.size(); }

  LossGrad operator()(const ParamVector& theta) const { return subset(theta, all_); }

  LossGrad subset(const ParamVector& theta, std::span<const std::size_t> idx) const {
    require(theta.layout() && same_layout(theta.layout(), layout_), Errc::layout_mismatch,
            "theta layout does not match the oracle");
    LossGrad out = eval_(theta, idx);
    require(std::isfinite(out.loss) && out.grad.all_finite(), Errc::non_finite,
            "non-finite loss or gradient");
    return out;
  }

 private:
  LayoutPtr layout_;
  std::vector<std::size_t> all_;
  Eval eval_;
};

/// Oracle for a network on fixed inputs and soft targets [N,C].
inline GradOracle make_model_oracle(const ModelSpec& spec, Tensor inputs, Tensor targets) {
  require(inputs.rank() >= 1 && targets.rank() == 2 && inputs.dim(0) == targets.dim(0) &&
              targets.dim(1) == spec.classes,
          Errc::shape_mismatch, "oracle inputs/targets mismatch");
  require(inputs.dim(0) >= 1, Errc::invalid_argument, "oracle needs at least one example");
  auto data = std::make_shared<const std::pair<Tensor, Tensor>>(std::move(inputs), std::move(targets));
  const std::size_t n = data->first.dim(0);
  return GradOracle(make_layout(spec), n,
                    [spec, data](const ParamVector& theta, std::span<const std::size_t> idx) {
                      if (idx.size() == data->first.dim(0)) {
                        bool identity = true;
                        for (std::size_t i = 0; i < idx.size() && identity; ++i) identity = idx[i] == i;
                        if (identity) return model_loss_grad(spec, theta, data->first, data->second);
                      }
                      return model_loss_grad(spec, theta, gather_rows(data->first, idx),
                                             gather_rows(data->second, idx));
                    });
}

inline GradOracle make_model_oracle(const ModelSpec& spec, Tensor inputs, std::span<const int> labels) {
  check_labels(labels, spec.classes, inputs.rank() ? inputs.dim(0) : 0);
  Tensor targets = one_hot(labels, spec.classes);
  return make_model_oracle(spec, std::move(inputs), std::move(targets));
}

inline LossGrad value_and_param_grad(const GradOracle& oracle, const ParamVector& theta) { return oracle(theta); }

/// Row i is the gradient on example i alone, shape [B,P].
inline Tensor per_example_param_grads(const GradOracle& oracle, const ParamVector& theta) {
  const std::size_t n = oracle.num_examples();
  require(n >= 1, Errc::invalid_argument, "per_example_param_grads needs B >= 1");
  Tensor rows(Shape{n, theta.size()});
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t idx[1] = {i};
    LossGrad lg = oracle.subset(theta, idx);
    std::copy(lg.grad.data().begin(), lg.grad.data().end(), rows.row(i).begin());
  }
  return rows;
}

struct InputGrad {
  double loss = 0.0;
  Tensor input_grads;  // same shape as the inputs; row i is d loss(x_i, y_i) / d x_i
};

inline InputGrad value_and_input_grad(const ModelSpec& spec, const ParamVector& theta, const Tensor& inputs,
                                      const Tensor& targets) {
  check_theta(spec, theta);
  require(inputs.rank() >= 1 && inputs.dim(0) >= 1, Errc::invalid_argument, "empty batch");
  ad::Tape tape;
  auto p = param_vars(tape, theta, false);
  ad::Var x = tape.variable(inputs);
  ad::Var loss = tape.softmax_cross_entropy(build_logits(tape, spec, p, x), targets, ad::Reduction::sum);
  tape.backward(loss);
  InputGrad out{tape.value(loss)[0] / static_cast<double>(inputs.dim(0)), tape.grad(x)};
  require(std::isfinite(out.loss) && out.input_grads.all_finite(), Errc::non_finite, "input gradient");
  return out;
}

inline InputGrad value_and_input_grad(const ModelSpec& spec, const ParamVector& theta, const Tensor& inputs,
                                      std::span<const int> labels) {
  check_labels(labels, spec.classes, inputs.dim(0));
  return value_and_input_grad(spec, theta, inputs, one_hot(labels, spec.classes));
}

/// Central differences, one coordinate at a time (2P oracle calls).
inline ParamVector finite_diff_grad(const GradOracle& oracle, const ParamVector& theta, double step) {
  require(step > 0.0, Errc::invalid_argument, "finite difference step must be positive");
  ParamVector g = theta.zeros_like();
  ParamVector probe = theta;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    probe[i] = theta[i] + step;
    const double up = oracle(probe).loss;
    probe[i] = theta[i] - step;
    const double down = oracle(probe).loss;
    probe[i] = theta[i];
    g[i] = (up - down) / (2.0 * step);
  }
  return g;
}

/// Central differences of the summed per-example loss over each input entry.
inline Tensor finite_diff_input_grad(const ModelSpec& spec, const ParamVector& theta, const Tensor& inputs,
                                     std::span<const int> labels, double step) {
  require(step > 0.0, Errc::invalid_argument, "finite difference step must be positive");
  Tensor out(inputs.shape());
  Tensor probe = inputs;
  const double n = static_cast<double>(inputs.dim(0));
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    probe[i] = inputs[i] + step;
    const double up = softmax_cross_entropy(forward_logits(spec, theta, probe), labels);
    probe[i] = inputs[i] - step;
    const double down = softmax_cross_entropy(forward_logits(spec, theta, probe), labels);
    probe[i] = inputs[i];
    out[i] = n * (up - down) / (2.0 * step);
  }
  return out;
}

}  // namespace fisherlab
