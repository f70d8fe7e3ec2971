// Copyright (c) 2026 The fisherlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "fisherlab/dataset.hpp"
#include "fisherlab/gradients.hpp"
#include "fisherlab/nets.hpp"
#include "fisherlab/rng.hpp"

namespace fltest {

using namespace fisherlab;

inline Tensor random_tensor(Shape shape, std::uint64_t seed, double scale = 1.0) {
  Rng rng(seed);
  Tensor t(std::move(shape));
  for (double& v : t.data()) v = scale * rng.normal();
  return t;
}

inline std::vector<int> random_labels(std::size_t n, std::size_t classes, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<int> y(n);
  for (int& v : y) v = static_cast<int>(rng.below(classes));
  return y;
}

inline Dataset random_dataset(const ModelSpec& spec, std::size_t n, std::uint64_t seed) {
  Dataset d;
  Shape s{n};
  s.insert(s.end(), spec.input_shape.begin(), spec.input_shape.end());
  d.inputs = random_tensor(s, seed);
  d.labels = random_labels(n, spec.classes, seed + 1);
  d.classes = spec.classes;
  return d;
}

inline ModelSpec mlp_spec(std::size_t in, std::vector<std::size_t> hidden, std::size_t classes,
                          Activation act = Activation::tanh) {
  ModelSpec s;
  s.kind = ModelKind::mlp;
  s.input_shape = {in};
  s.hidden = std::move(hidden);
  s.classes = classes;
  s.activation = act;
  return s;
}

inline ModelSpec linear_spec(std::size_t in, std::size_t classes) {
  ModelSpec s;
  s.kind = ModelKind::linear;
  s.input_shape = {in};
  s.hidden = {};
  s.classes = classes;
  return s;
}

inline ModelSpec conv_spec(Activation act = Activation::tanh) {
  ModelSpec s;
  s.kind = ModelKind::small_conv;
  s.input_shape = {1, 6, 6};
  s.hidden = {2, 3};
  s.classes = 3;
  s.kernel = 3;
  s.activation = act;
  return s;
}

/// Oracle for l(theta) = 0.5 theta^T diag(a) theta, one "example".
inline GradOracle diag_quadratic(std::vector<double> a) {
  auto layout = ParamVector::flat(std::vector<double>(a.size(), 0.0)).layout();
  return GradOracle(layout, 1, [a, layout](const ParamVector& theta, std::span<const std::size_t>) {
    LossGrad out{0.0, ParamVector(layout)};
    for (std::size_t i = 0; i < a.size(); ++i) {
      out.loss += 0.5 * a[i] * theta[i] * theta[i];
      out.grad[i] = a[i] * theta[i];
    }
    return out;
  });
}

inline ParamVector flat_like(const GradOracle& oracle, std::vector<double> v) {
  return ParamVector(oracle.layout(), std::move(v));
}

}  // namespace fltest
