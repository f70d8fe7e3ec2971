// Copyright (c) 2026 The fisherlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fisherlab/error.hpp"

namespace fisherlab {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

inline std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ')';
  return os.str();
}

/// Dense row-major array of doubles.
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(Shape shape) : shape_(std::move(shape)), data_(shape_size(shape_), 0.0) {}

  Tensor(Shape shape, double fill) : shape_(std::move(shape)), data_(shape_size(shape_), fill) {}

  /// Wraps existing values. Rejects NaN/Inf, so use this for external inputs.
  static Tensor from_data(Shape shape, std::vector<double> data) {
    require(shape_size(shape) == data.size(), Errc::shape_mismatch,
            "shape " + shape_str(shape) + " does not match " + std::to_string(data.size()) +
                " values");
    Tensor t;
    t.shape_ = std::move(shape);
    t.data_ = std::move(data);
    t.check_finite("Tensor::from_data");
    return t;
  }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t i) const { return shape_.at(i); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  std::vector<double>& values() noexcept { return data_; }
  const std::vector<double>& values() const noexcept { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  double& at(std::size_t r, std::size_t c) { return data_[r * row_size() + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * row_size() + c]; }

  /// Elements per leading-axis slice.
  std::size_t row_size() const { return shape_.empty() || shape_[0] == 0 ? 0 : data_.size() / shape_[0]; }

  std::span<double> row(std::size_t r) {
    const std::size_t n = row_size();
    return std::span<double>(data_).subspan(r * n, n);
  }
  std::span<const double> row(std::size_t r) const {
    const std::size_t n = row_size();
    return std::span<const double>(data_).subspan(r * n, n);
  }

  Tensor reshaped(Shape shape) const {
    require(shape_size(shape) == data_.size(), Errc::shape_mismatch,
            "cannot reshape " + shape_str(shape_) + " to " + shape_str(shape));
    Tensor t = *this;
    t.shape_ = std::move(shape);
    return t;
  }

  bool all_finite() const {
    for (double v : data_)
      if (!std::isfinite(v)) return false;
    return true;
  }

  void check_finite(std::string_view where) const {
    if (!all_finite()) fail(Errc::non_finite, std::string(where));
  }

  void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  Shape shape_;
  std::vector<double> data_;
};

/// Rows `idx` of a batch-major tensor, in the given order.
inline Tensor gather_rows(const Tensor& t, std::span<const std::size_t> idx) {
  Shape shape = t.shape();
  shape.at(0) = idx.size();
  Tensor out(shape);
  const std::size_t n = t.row_size();
  for (std::size_t i = 0; i < idx.size(); ++i) {
    auto src = t.row(idx[i]);
    std::copy(src.begin(), src.end(), out.data().begin() + static_cast<std::ptrdiff_t>(i * n));
  }
  return out;
}

}  // namespace fisherlab
