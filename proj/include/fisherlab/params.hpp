// Copyright (c) 2026 The fisherlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fisherlab/error.hpp"
#include "fisherlab/tensor.hpp"

namespace fisherlab {

struct ParamBlock {
  std::string name;
  Shape shape;
  std::size_t offset = 0;
  std::size_t size = 0;

  friend bool operator==(const ParamBlock&, const ParamBlock&) = default;
};

/// Ordered list of named parameter blocks packed back to back.
class ParamLayout {
 public:
  ParamLayout() = default;

  void add(std::string name, Shape shape) {
    const std::size_t n = shape_size(shape);
    blocks_.push_back(ParamBlock{std::move(name), std::move(shape), total_, n});
    total_ += n;
  }

  const std::vector<ParamBlock>& blocks() const noexcept { return blocks_; }
  const ParamBlock& block(std::size_t i) const { return blocks_.at(i); }
  std::size_t total() const noexcept { return total_; }

  friend bool operator==(const ParamLayout&, const ParamLayout&) = default;

 private:
  std::vector<ParamBlock> blocks_;
  std::size_t total_ = 0;
};

using LayoutPtr = std::shared_ptr<const ParamLayout>;

inline bool same_layout(const LayoutPtr& a, const LayoutPtr& b) {
  return a == b || (a && b && *a == *b);
}

/// A flat parameter (or gradient) vector with its layout.
class ParamVector {
 public:
  ParamVector() = default;
  explicit ParamVector(LayoutPtr layout) : layout_(std::move(layout)), data_(layout_->total(), 0.0) {}
  ParamVector(LayoutPtr layout, std::vector<double> data) : layout_(std::move(layout)), data_(std::move(data)) {
    require(data_.size() == layout_->total(), Errc::layout_mismatch,
            "parameter data length " + std::to_string(data_.size()) + " != layout size " +
                std::to_string(layout_->total()));
  }

  /// Vector without named blocks, for oracles that are not neural networks.
  static ParamVector flat(std::vector<double> data) {
    auto layout = std::make_shared<ParamLayout>();
    layout->add("theta", Shape{data.size()});
    return ParamVector(std::move(layout), std::move(data));
  }

  const LayoutPtr& layout() const noexcept { return layout_; }
  std::size_t size() const noexcept { return data_.size(); }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  std::vector<double>& values() noexcept { return data_; }
  const std::vector<double>& values() const noexcept { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::span<double> block(std::size_t i) {
    const auto& b = layout_->block(i);
    return std::span<double>(data_).subspan(b.offset, b.size);
  }
  std::span<const double> block(std::size_t i) const {
    const auto& b = layout_->block(i);
    return std::span<const double>(data_).subspan(b.offset, b.size);
  }

  ParamVector zeros_like() const { return ParamVector(layout_); }

  bool all_finite() const {
    for (double v : data_)
      if (!std::isfinite(v)) return false;
    return true;
  }

  /// Bitwise equality of values plus layout equality.
  friend bool operator==(const ParamVector& a, const ParamVector& b) {
    return same_layout(a.layout_, b.layout_) && a.data_ == b.data_;
  }

 private:
  LayoutPtr layout_;
  std::vector<double> data_;
};

inline void check_same_layout(const ParamVector& a, const ParamVector& b, const char* where) {
  require(a.layout() && b.layout() && same_layout(a.layout(), b.layout()), Errc::layout_mismatch,
          where);
}

inline double dot(const ParamVector& a, const ParamVector& b) {
  check_same_layout(a, b, "dot");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double squared_norm(const ParamVector& a) {
  double s = 0.0;
  for (double v : a.data()) s += v * v;
  return s;
}

inline double norm(const ParamVector& a) { return std::sqrt(squared_norm(a)); }

/// y += alpha * x
inline void axpy(double alpha, const ParamVector& x, ParamVector& y) {
  check_same_layout(x, y, "axpy");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

inline ParamVector scaled(const ParamVector& x, double alpha) {
  ParamVector out = x;
  for (double& v : out.data()) v *= alpha;
  return out;
}

/// a + alpha * b
inline ParamVector add_scaled(const ParamVector& a, double alpha, const ParamVector& b) {
  ParamVector out = a;
  axpy(alpha, b, out);
  return out;
}

/// max_i |a_i - b_i| / max(max_i |a_i|, max_i |b_i|); 0 when both vectors vanish.
inline double max_relative_error(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size(), Errc::shape_mismatch, "max_relative_error size mismatch");
  double diff = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff = std::max(diff, std::abs(a[i] - b[i]));
    scale = std::max({scale, std::abs(a[i]), std::abs(b[i])});
  }
  return scale == 0.0 ? 0.0 : diff / scale;
}

inline double max_relative_error(const ParamVector& a, const ParamVector& b) {
  return max_relative_error(a.data(), b.data());
}

}  // namespace fisherlab
