// Copyright (c) 2026 The fisherlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "fisherlab/error.hpp"
#include "fisherlab/params.hpp"

namespace fisherlab {

struct SgdState {
  ParamVector velocity;
  double momentum = 0.0;
  double weight_decay = 0.0;

  static SgdState for_params(const ParamVector& theta, double momentum, double weight_decay) {
    SgdState s{theta.zeros_like(), momentum, weight_decay};
    s.validate();
    return s;
  }

  void validate() const {
    require(momentum >= 0.0 && momentum < 1.0, Errc::invalid_argument, "momentum must be in [0,1)");
    require(weight_decay >= 0.0 && std::isfinite(weight_decay), Errc::invalid_argument,
            "weight decay must be >= 0");
  }
};

/// v <- mu v + (g + wd theta); theta <- theta - lr v.
inline void sgd_step(SgdState& state, ParamVector& theta, const ParamVector& grad, double lr) {
  require(lr > 0.0 && std::isfinite(lr), Errc::invalid_argument, "learning rate must be > 0");
  state.validate();
  check_same_layout(theta, grad, "sgd_step grad");
  check_same_layout(theta, state.velocity, "sgd_step velocity");
  const double mu = state.momentum, wd = state.weight_decay;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double v = mu * state.velocity[i] + (grad[i] + wd * theta[i]);
    state.velocity[i] = v;
    theta[i] -= lr * v;
  }
}

/// Step schedule: base_lr * gamma^(number of milestones <= epoch).
struct LrSchedule {
  double base_lr = 0.1;
  std::vector<std::uint64_t> milestones;
  double gamma = 1.0;

  void validate() const {
    require(base_lr > 0.0 && std::isfinite(base_lr), Errc::config, "optim.lr must be > 0");
    require(gamma > 0.0 && gamma <= 1.0, Errc::config, "optim.gamma must be in (0,1]");
    for (std::size_t i = 1; i < milestones.size(); ++i)
      require(milestones[i] > milestones[i - 1], Errc::config, "optim.milestones must be strictly increasing");
  }

  friend bool operator==(const LrSchedule&, const LrSchedule&) = default;
};

inline double lr_at(const LrSchedule& s, std::uint64_t epoch) {
  s.validate();
  double lr = s.base_lr;
  for (auto m : s.milestones)
    if (m <= epoch) lr *= s.gamma;
  return lr;
}

}  // namespace fisherlab
