// Copyright (c) 2026 The fisherlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fisherlab/error.hpp"
#include "fisherlab/rng.hpp"
#include "fisherlab/tensor.hpp"

namespace fisherlab {

/// Per-example flag: true marks a corrupted label.
struct NoiseMask {
  std::vector<std::uint8_t> bits;

  std::size_t size() const noexcept { return bits.size(); }
  std::size_t count() const {
    std::size_t c = 0;
    for (auto b : bits) c += b != 0;
    return c;
  }
  bool operator[](std::size_t i) const { return bits[i] != 0; }

  friend bool operator==(const NoiseMask&, const NoiseMask&) = default;
};

struct Normalization {
  std::vector<double> mean;
  std::vector<double> std;

  friend bool operator==(const Normalization&, const Normalization&) = default;
};

/// Examples (batch-major inputs), integer labels and optional bookkeeping
/// that travels with each example through splitting and batching.
struct Dataset {
  Tensor inputs;
  std::vector<int> labels;
  std::size_t classes = 0;
  std::optional<Normalization> normalization;
  std::optional<NoiseMask> noise;

  std::size_t size() const noexcept { return labels.size(); }

  Shape example_shape() const { return Shape(inputs.shape().begin() + 1, inputs.shape().end()); }

  void validate() const {
    require(size() >= 1, Errc::invalid_argument, "dataset must not be empty");
    require(inputs.rank() >= 2 && inputs.dim(0) == size(), Errc::shape_mismatch,
            "dataset inputs/labels length mismatch");
    for (int y : labels)
      require(y >= 0 && static_cast<std::size_t>(y) < classes, Errc::label_out_of_range,
              "dataset label out of range");
    if (noise) require(noise->size() == size(), Errc::shape_mismatch, "noise mask length");
  }

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

/// Rows `idx` of a dataset, with aligned labels and mask bits.
inline Dataset subset(const Dataset& data, std::span<const std::size_t> idx) {
  Dataset out;
  out.inputs = gather_rows(data.inputs, idx);
  out.classes = data.classes;
  out.normalization = data.normalization;
  out.labels.reserve(idx.size());
  for (auto i : idx) out.labels.push_back(data.labels[i]);
  if (data.noise) {
    NoiseMask m;
    for (auto i : idx) m.bits.push_back(data.noise->bits[i]);
    out.noise = std::move(m);
  }
  return out;
}

struct Batch {
  Tensor inputs;
  std::vector<int> labels;
  std::size_t classes = 0;
  std::optional<Tensor> soft_targets;  // [B,C]; set by mixup
  std::vector<std::uint8_t> noise;     // aligned mask slice; empty when the source has none
  std::vector<std::size_t> indices;    // positions in the source dataset

  std::size_t size() const noexcept { return labels.size(); }
};

inline Batch make_batch(const Dataset& data, std::span<const std::size_t> idx) {
  Batch b;
  b.inputs = gather_rows(data.inputs, idx);
  b.classes = data.classes;
  b.indices.assign(idx.begin(), idx.end());
  for (auto i : idx) b.labels.push_back(data.labels[i]);
  if (data.noise)
    for (auto i : idx) b.noise.push_back(data.noise->bits[i]);
  return b;
}

inline Batch whole_batch(const Dataset& data) {
  std::vector<std::size_t> idx(data.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  return make_batch(data, idx);
}

/// Isotropic unit-variance Gaussian blobs centred at s*u_k. The u_k are
/// +-e_j basis directions while 2d suffice, otherwise points on the unit
/// circle of the first two coordinates; d = 1 spreads centres over [-1, 1].
inline Dataset gen_gaussians(std::size_t classes, std::size_t per_class, std::size_t dim, double separation,
                             std::uint64_t seed) {
  require(classes >= 2 && per_class >= 1 && dim >= 1 && separation >= 0.0, Errc::invalid_argument,
          "gen_gaussians needs C>=2, n>=1, d>=1, s>=0");
  std::vector<std::vector<double>> centres(classes, std::vector<double>(dim, 0.0));
  for (std::size_t k = 0; k < classes; ++k) {
    if (dim == 1) {
      centres[k][0] = 1.0 - 2.0 * static_cast<double>(k) / static_cast<double>(classes - 1);
    } else if (classes <= 2 * dim) {
      centres[k][k / 2] = (k % 2 == 0) ? 1.0 : -1.0;
    } else {
      const double a = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(classes);
      centres[k][0] = std::cos(a);
      centres[k][1] = std::sin(a);
    }
  }
  Rng rng(seed);
  Dataset d;
  d.classes = classes;
  d.inputs = Tensor(Shape{classes * per_class, dim});
  for (std::size_t k = 0; k < classes; ++k)
    for (std::size_t j = 0; j < per_class; ++j) {
      const std::size_t i = k * per_class + j;
      for (std::size_t f = 0; f < dim; ++f) d.inputs.at(i, f) = separation * centres[k][f] + rng.normal();
      d.labels.push_back(static_cast<int>(k));
    }
  return d;
}

/// Interleaved 2-D spiral arms. Arm k, point j sits at radius
/// r = (j+1)/n and angle 2*pi*k/C + phase + turns*2*pi*r + sigma*N(0,1).
inline Dataset gen_spirals(std::size_t classes, std::size_t per_class, double sigma, std::uint64_t seed,
                           double turns = 1.0, double phase = 0.0) {
  require(classes >= 2 && per_class >= 1 && sigma >= 0.0, Errc::invalid_argument,
          "gen_spirals needs C>=2, n>=1, sigma>=0");
  Rng rng(seed);
  Dataset d;
  d.classes = classes;
  d.inputs = Tensor(Shape{classes * per_class, 2});
  for (std::size_t k = 0; k < classes; ++k)
    for (std::size_t j = 0; j < per_class; ++j) {
      const std::size_t i = k * per_class + j;
      const double r = static_cast<double>(j + 1) / static_cast<double>(per_class);
      const double a = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(classes) + phase +
                       turns * 2.0 * std::numbers::pi * r + sigma * rng.normal();
      d.inputs.at(i, 0) = r * std::cos(a);
      d.inputs.at(i, 1) = r * std::sin(a);
      d.labels.push_back(static_cast<int>(k));
    }
  return d;
}

/// Replaces round(fraction*N) labels, chosen uniformly without replacement,
/// with labels drawn uniformly over all C classes (the redraw may equal the
/// original). Inputs are untouched.
inline std::pair<Dataset, NoiseMask> inject_label_noise(const Dataset& data, double fraction, std::uint64_t seed) {
  require(fraction >= 0.0 && fraction <= 1.0, Errc::invalid_argument, "noise fraction must be in [0,1]");
  data.validate();
  const std::size_t n = data.size();
  const auto k = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  Rng rng(seed);
  const auto chosen = rng.sample_without_replacement(n, k);
  Dataset out = data;
  NoiseMask mask{std::vector<std::uint8_t>(n, 0)};
  for (auto i : chosen) {
    out.labels[i] = static_cast<int>(rng.below(data.classes));
    mask.bits[i] = 1;
  }
  out.noise = mask;
  return {std::move(out), std::move(mask)};
}

inline Normalization fit_normalization(const Tensor& inputs) {
  const std::size_t n = inputs.dim(0), f = inputs.row_size();
  Normalization norm{std::vector<double>(f, 0.0), std::vector<double>(f, 0.0)};
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < f; ++j) norm.mean[j] += inputs.at(i, j);
  for (auto& m : norm.mean) m /= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < f; ++j) {
      const double c = inputs.at(i, j) - norm.mean[j];
      norm.std[j] += c * c;
    }
  for (auto& s : norm.std) {
    s = std::sqrt(s / static_cast<double>(n));
    if (s < 1e-12) s = 1.0;  // constant feature
  }
  return norm;
}

inline void apply_normalization(Dataset& data, const Normalization& norm) {
  const std::size_t f = data.inputs.row_size();
  require(norm.mean.size() == f, Errc::shape_mismatch, "normalization feature count");
  for (std::size_t i = 0; i < data.size(); ++i)
    for (std::size_t j = 0; j < f; ++j) data.inputs.at(i, j) = (data.inputs.at(i, j) - norm.mean[j]) / norm.std[j];
  data.normalization = norm;
}

struct Splits {
  Dataset train, val, test;
};

/// Seeded permutation, then contiguous train/val/test parts of sizes
/// round(f_train*N), round(f_val*N) and the remainder. Features are
/// standardized with statistics of the train part.
inline Splits split(const Dataset& data, std::array<double, 3> fractions, std::uint64_t seed) {
  data.validate();
  for (double f : fractions) require(f > 0.0, Errc::invalid_argument, "split fractions must be positive");
  require(std::abs(fractions[0] + fractions[1] + fractions[2] - 1.0) <= 1e-9, Errc::invalid_argument,
          "split fractions must sum to 1");
  const std::size_t n = data.size();
  const auto n_train = static_cast<std::size_t>(std::llround(fractions[0] * static_cast<double>(n)));
  const auto n_val = static_cast<std::size_t>(std::llround(fractions[1] * static_cast<double>(n)));
  require(n_train >= 1 && n_val >= 1 && n_train + n_val < n, Errc::invalid_argument,
          "split leaves an empty part");
  Rng rng(seed);
  const auto perm = rng.permutation(n);
  std::span<const std::size_t> p(perm);
  Splits s{subset(data, p.subspan(0, n_train)), subset(data, p.subspan(n_train, n_val)),
           subset(data, p.subspan(n_train + n_val))};
  const Normalization norm = fit_normalization(s.train.inputs);
  apply_normalization(s.train, norm);
  apply_normalization(s.val, norm);
  apply_normalization(s.test, norm);
  return s;
}

/// Mini-batches of one epoch: a permutation seeded by (seed, epoch), cut into
/// consecutive chunks of B; the short final chunk is kept.
inline std::vector<std::vector<std::size_t>> epoch_batch_indices(std::size_t n, std::size_t batch_size,
                                                                 std::uint64_t seed, std::uint64_t epoch) {
  require(batch_size >= 1 && batch_size <= n, Errc::invalid_argument, "batch size must be in [1, N]");
  Rng rng(derive_seed(seed, streams::shuffle, epoch));
  const auto perm = rng.permutation(n);
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t start = 0; start < n; start += batch_size)
    out.emplace_back(perm.begin() + static_cast<std::ptrdiff_t>(start),
                     perm.begin() + static_cast<std::ptrdiff_t>(std::min(n, start + batch_size)));
  return out;
}

inline std::vector<Batch> batch_iter(const Dataset& data, std::size_t batch_size, std::uint64_t seed,
                                     std::uint64_t epoch) {
  std::vector<Batch> out;
  for (const auto& idx : epoch_batch_indices(data.size(), batch_size, seed, epoch)) out.push_back(make_batch(data, idx));
  return out;
}

}  // namespace fisherlab
