// Copyright (c) 2026 The fisherlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "fisherlab/error.hpp"

namespace fisherlab::stats {

inline double mean(std::span<const double> xs) {
  require(!xs.empty(), Errc::invalid_argument, "mean of an empty series");
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

/// Sample standard deviation (n - 1); 0 for a single value.
inline double stddev(std::span<const double> xs) {
  const double m = mean(xs);
  if (xs.size() < 2) return 0.0;
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

inline double median(std::span<const double> xs) {
  require(!xs.empty(), Errc::invalid_argument, "median of an empty series");
  std::vector<double> v(xs.begin(), xs.end());
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

/// Undefined (nullopt) when either series has zero variance or n < 2.
inline std::optional<double> pearson(std::span<const double> x, std::span<const double> y) {
  require(x.size() == y.size(), Errc::shape_mismatch, "correlation of series with different lengths");
  if (x.size() < 2) return std::nullopt;
  const double mx = mean(x), my = mean(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return sxy / std::sqrt(sxx * syy);
}

/// Ranks starting at 1; ties share their average rank.
inline std::vector<double> ranks(std::span<const double> x) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> r(x.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[order[k]] = avg;
    i = j + 1;
  }
  return r;
}

inline std::optional<double> spearman(std::span<const double> x, std::span<const double> y) {
  require(x.size() == y.size(), Errc::shape_mismatch, "correlation of series with different lengths");
  const auto rx = ranks(x), ry = ranks(y);
  return pearson(rx, ry);
}

}  // namespace fisherlab::stats
