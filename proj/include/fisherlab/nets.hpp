// Copyright (c) 2026 The fisherlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fisherlab/autodiff.hpp"
#include "fisherlab/error.hpp"
#include "fisherlab/params.hpp"
#include "fisherlab/rng.hpp"
#include "fisherlab/tensor.hpp"

namespace fisherlab {

enum class ModelKind { linear, mlp, small_conv };
enum class Activation { relu, tanh };
enum class InitScheme { he_normal, zeros };

inline std::string_view to_string(ModelKind k) {
  switch (k) {
    case ModelKind::linear: return "linear";
    case ModelKind::mlp: return "mlp";
    case ModelKind::small_conv: return "small_conv";
  }
  return "?";
}
inline std::string_view to_string(Activation a) { return a == Activation::relu ? "relu" : "tanh"; }

/// Network description. `hidden` holds MLP layer widths, or the two channel
/// counts of a SmallConv (conv-act-pool-conv-act-pool-dense). A `linear` model
/// is multinomial logistic regression (no hidden layer).
struct ModelSpec {
  ModelKind kind = ModelKind::mlp;
  Shape input_shape{2};
  std::vector<std::size_t> hidden{64, 64};
  Activation activation = Activation::relu;
  std::size_t classes = 2;
  std::size_t kernel = 3;

  std::size_t input_size() const { return shape_size(input_shape); }

  void validate() const {
    require(classes >= 2, Errc::invalid_argument, "model needs at least 2 classes");
    require(!input_shape.empty() && input_size() > 0, Errc::invalid_argument, "empty input shape");
    switch (kind) {
      case ModelKind::linear:
        require(hidden.empty(), Errc::invalid_argument, "linear model takes no hidden widths");
        break;
      case ModelKind::mlp:
        require(!hidden.empty(), Errc::invalid_argument, "MLP needs at least one hidden layer");
        for (auto w : hidden) require(w > 0, Errc::invalid_argument, "zero-width hidden layer");
        break;
      case ModelKind::small_conv:
        require(input_shape.size() == 3, Errc::invalid_argument, "SmallConv input must be (C,H,W)");
        require(hidden.size() == 2 && hidden[0] > 0 && hidden[1] > 0, Errc::invalid_argument,
                "SmallConv needs exactly two channel counts");
        require(kernel % 2 == 1, Errc::invalid_argument, "SmallConv kernel must be odd");
        require(input_shape[1] >= 4 && input_shape[2] >= 4, Errc::invalid_argument,
                "SmallConv input must be at least 4x4");
        break;
    }
  }

  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

/// Parameter layout in canonical order: layer order, weight before bias.
inline LayoutPtr make_layout(const ModelSpec& spec) {
  spec.validate();
  auto layout = std::make_shared<ParamLayout>();
  if (spec.kind == ModelKind::small_conv) {
    const std::size_t c = spec.input_shape[0], h = spec.input_shape[1], w = spec.input_shape[2];
    const std::size_t k = spec.kernel;
    layout->add("conv0.weight", Shape{spec.hidden[0], c, k, k});
    layout->add("conv0.bias", Shape{spec.hidden[0]});
    layout->add("conv1.weight", Shape{spec.hidden[1], spec.hidden[0], k, k});
    layout->add("conv1.bias", Shape{spec.hidden[1]});
    const std::size_t flat = spec.hidden[1] * ((h / 2) / 2) * ((w / 2) / 2);
    layout->add("dense.weight", Shape{spec.classes, flat});
    layout->add("dense.bias", Shape{spec.classes});
    return layout;
  }
  std::size_t fan_in = spec.input_size();
  std::size_t layer = 0;
  for (std::size_t width : spec.hidden) {
    layout->add("layer" + std::to_string(layer) + ".weight", Shape{width, fan_in});
    layout->add("layer" + std::to_string(layer) + ".bias", Shape{width});
    fan_in = width;
    ++layer;
  }
  layout->add("layer" + std::to_string(layer) + ".weight", Shape{spec.classes, fan_in});
  layout->add("layer" + std::to_string(layer) + ".bias", Shape{spec.classes});
  return layout;
}

inline std::size_t param_count(const ModelSpec& spec) { return make_layout(spec)->total(); }

inline void check_theta(const ModelSpec& spec, const ParamVector& theta) {
  require(theta.layout() && *theta.layout() == *make_layout(spec), Errc::layout_mismatch,
          "parameter vector does not match the model spec");
}

/// Weights ~ N(0, 2/fan_in) (he_normal) or zero; biases zero. Deterministic in seed.
inline ParamVector init_params(const ModelSpec& spec, InitScheme scheme, std::uint64_t seed) {
  ParamVector theta(make_layout(spec));
  if (scheme == InitScheme::zeros) return theta;
  Rng rng(seed);
  const auto& blocks = theta.layout()->blocks();
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const auto& b = blocks[i];
    if (b.shape.size() < 2) continue;  // bias
    const std::size_t fan_in = b.size / b.shape[0];
    const double sd = std::sqrt(2.0 / static_cast<double>(fan_in));
    for (double& v : theta.block(i)) v = sd * rng.normal();
  }
  return theta;
}

/// Tape variables for each parameter block.
inline std::vector<ad::Var> param_vars(ad::Tape& tape, const ParamVector& theta, bool differentiable) {
  std::vector<ad::Var> vars;
  const auto& blocks = theta.layout()->blocks();
  vars.reserve(blocks.size());
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    auto src = theta.block(i);
    Tensor t(blocks[i].shape);
    std::copy(src.begin(), src.end(), t.data().begin());
    vars.push_back(differentiable ? tape.variable(std::move(t)) : tape.constant(std::move(t)));
  }
  return vars;
}

/// Records the forward pass on `tape`; `x` is batch-major with per-example
/// shape spec.input_shape. Returns the logits variable [B,C].
inline ad::Var build_logits(ad::Tape& tape, const ModelSpec& spec, const std::vector<ad::Var>& p, ad::Var x) {
  const Tensor& X = tape.value(x);
  require(X.rank() >= 1 && X.size() == X.dim(0) * spec.input_size(), Errc::shape_mismatch,
          "inputs " + shape_str(X.shape()) + " do not match model input " + shape_str(spec.input_shape));
  const std::size_t batch = X.dim(0);
  auto act = [&](ad::Var v) { return spec.activation == Activation::relu ? tape.relu(v) : tape.tanh(v); };
  if (spec.kind == ModelKind::small_conv) {
    Shape s{batch};
    s.insert(s.end(), spec.input_shape.begin(), spec.input_shape.end());
    ad::Var h = X.shape() == s ? x : tape.reshape(x, s);
    h = tape.max_pool2(act(tape.conv2d(h, p[0], p[1])));
    h = tape.max_pool2(act(tape.conv2d(h, p[2], p[3])));
    const std::size_t flat = tape.value(h).size() / batch;
    h = tape.reshape(h, Shape{batch, flat});
    return tape.linear(h, p[4], p[5]);
  }
  ad::Var h = X.rank() == 2 ? x : tape.reshape(x, Shape{batch, spec.input_size()});
  const std::size_t layers = spec.hidden.size();
  for (std::size_t l = 0; l < layers; ++l) h = act(tape.linear(h, p[2 * l], p[2 * l + 1]));
  return tape.linear(h, p[2 * layers], p[2 * layers + 1]);
}

using LogitBatch = Tensor;

inline LogitBatch forward_logits(const ModelSpec& spec, const ParamVector& theta, const Tensor& inputs) {
  check_theta(spec, theta);
  ad::Tape tape;
  auto p = param_vars(tape, theta, false);
  ad::Var x = tape.constant(inputs);
  return tape.value(build_logits(tape, spec, p, x));
}

/// Row-wise softmax with max subtraction.
inline Tensor softmax(const LogitBatch& logits) {
  Tensor probs(logits.shape());
  const std::size_t classes = logits.dim(1);
  for (std::size_t i = 0; i < logits.dim(0); ++i) {
    auto z = logits.row(i);
    auto p = probs.row(i);
    const double m = *std::max_element(z.begin(), z.end());
    double s = 0.0;
    for (std::size_t c = 0; c < classes; ++c) s += (p[c] = std::exp(z[c] - m));
    for (std::size_t c = 0; c < classes; ++c) p[c] /= s;
  }
  return probs;
}

inline void check_labels(std::span<const int> labels, std::size_t classes, std::size_t rows) {
  require(labels.size() == rows, Errc::shape_mismatch,
          std::to_string(labels.size()) + " labels for " + std::to_string(rows) + " rows");
  for (int y : labels)
    require(y >= 0 && static_cast<std::size_t>(y) < classes, Errc::label_out_of_range,
            "label " + std::to_string(y) + " not in [0," + std::to_string(classes) + ")");
}

inline Tensor one_hot(std::span<const int> labels, std::size_t classes) {
  Tensor t(Shape{labels.size(), classes});
  for (std::size_t i = 0; i < labels.size(); ++i) t.at(i, static_cast<std::size_t>(labels[i])) = 1.0;
  return t;
}

/// Mean of -log softmax(row)[label].
inline double softmax_cross_entropy(const LogitBatch& logits, std::span<const int> labels) {
  require(logits.rank() == 2, Errc::shape_mismatch, "logits must be [B,C]");
  check_labels(labels, logits.dim(1), logits.dim(0));
  double total = 0.0;
  for (std::size_t i = 0; i < logits.dim(0); ++i) {
    auto z = logits.row(i);
    const double m = *std::max_element(z.begin(), z.end());
    double s = 0.0;
    for (double v : z) s += std::exp(v - m);
    total += m + std::log(s) - z[static_cast<std::size_t>(labels[i])];
  }
  return total / static_cast<double>(logits.dim(0));
}

struct Predictions {
  std::vector<int> labels;
  double accuracy = 0.0;
};

/// Argmax per row, ties to the lowest class index.
inline std::vector<int> predict(const LogitBatch& logits) {
  std::vector<int> out(logits.dim(0));
  for (std::size_t i = 0; i < logits.dim(0); ++i) {
    auto z = logits.row(i);
    out[i] = static_cast<int>(std::max_element(z.begin(), z.end()) - z.begin());
  }
  return out;
}

inline Predictions predict_and_accuracy(const LogitBatch& logits, std::span<const int> labels) {
  check_labels(labels, logits.dim(1), logits.dim(0));
  Predictions p{predict(logits), 0.0};
  std::size_t hits = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) hits += p.labels[i] == labels[i];
  p.accuracy = labels.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(labels.size());
  return p;
}

}  // namespace fisherlab
