// Copyright (c) 2026 The fisherlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "fisherlab/error.hpp"
#include "fisherlab/nets.hpp"
#include "fisherlab/rng.hpp"

namespace fisherlab {

/// Where penalty labels come from: the model's own predictive distribution
/// (Fisher penalty), the uniform distribution (random-label penalty), or the
/// dataset (plain gradient penalty).
enum class LabelSource { model, uniform, truth };

inline std::string_view to_string(LabelSource s) {
  switch (s) {
    case LabelSource::model: return "model";
    case LabelSource::uniform: return "uniform";
    case LabelSource::truth: return "true";
  }
  return "?";
}

namespace detail {
/// Inverse-CDF draw from a categorical distribution with one uniform variate.
inline int draw_categorical(std::span<const double> probs, double u) {
  std::size_t c = 0;
  double acc = probs[0];
  while (u >= acc && c + 1 < probs.size()) acc += probs[++c];
  return static_cast<int>(c);
}
}  // namespace detail

/// One label per logit row. Model and uniform sources use the same
/// one-uniform-per-row inverse-CDF scheme, so at exactly uniform logits both
/// sources return identical labels for the same seed.
inline std::vector<int> sample_labels(const LogitBatch& logits, LabelSource source, std::span<const int> true_labels,
                                      std::uint64_t seed) {
  require(logits.rank() == 2, Errc::shape_mismatch, "logits must be [B,C]");
  require(logits.all_finite(), Errc::non_finite, "sample_labels: logits");
  const std::size_t rows = logits.dim(0), classes = logits.dim(1);
  if (source == LabelSource::truth) {
    check_labels(true_labels, classes, rows);
    return {true_labels.begin(), true_labels.end()};
  }
  Rng rng(seed);
  std::vector<int> out(rows);
  if (source == LabelSource::uniform) {
    const std::vector<double> flat(classes, 1.0 / static_cast<double>(classes));
    for (std::size_t i = 0; i < rows; ++i) out[i] = detail::draw_categorical(flat, rng.uniform());
    return out;
  }
  const Tensor probs = softmax(logits);
  for (std::size_t i = 0; i < rows; ++i) out[i] = detail::draw_categorical(probs.row(i), rng.uniform());
  return out;
}

}  // namespace fisherlab
