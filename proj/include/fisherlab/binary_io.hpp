// Copyright (c) 2026 The fisherlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "fisherlab/error.hpp"

namespace fisherlab::io {

inline std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::io, "cannot open " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

inline void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(Errc::io, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(Errc::io, "short write to " + path.string());
}

/// Appends fixed-width integers and doubles in a chosen byte order.
class Writer {
 public:
  std::vector<std::uint8_t>& bytes() noexcept { return buf_; }

  void raw(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    buf_.insert(buf_.end(), b, b + n);
  }
  void u8(std::uint8_t v) { buf_.push_back(v); }
  void u32_be(std::uint32_t v) {
    for (int s = 24; s >= 0; s -= 8) buf_.push_back(static_cast<std::uint8_t>(v >> s));
  }
  void u32_le(std::uint32_t v) {
    for (int s = 0; s < 32; s += 8) buf_.push_back(static_cast<std::uint8_t>(v >> s));
  }
  void u64_le(std::uint64_t v) {
    for (int s = 0; s < 64; s += 8) buf_.push_back(static_cast<std::uint8_t>(v >> s));
  }
  void i32_le(std::int32_t v) { u32_le(static_cast<std::uint32_t>(v)); }
  void f64_le(double v) { u64_le(std::bit_cast<std::uint64_t>(v)); }

 private:
  std::vector<std::uint8_t> buf_;
};

/// Bounds-checked cursor; running off the end raises truncated_payload.
class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& bytes, std::string what = "payload")
      : buf_(bytes), what_(std::move(what)) {}

  std::size_t remaining() const noexcept { return buf_.size() - pos_; }
  bool at_end() const noexcept { return pos_ == buf_.size(); }

  void need(std::size_t n) const {
    if (remaining() < n)
      fail(Errc::truncated_payload, what_ + ": need " + std::to_string(n) + " bytes, have " +
                                        std::to_string(remaining()));
  }
  const std::uint8_t* take(std::size_t n) {
    need(n);
    const std::uint8_t* p = buf_.data() + pos_;
    pos_ += n;
    return p;
  }
  std::uint8_t u8() { return *take(1); }
  std::uint32_t u32_be() {
    const auto* p = take(4);
    return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) | (std::uint32_t{p[2]} << 8) | p[3];
  }
  std::uint32_t u32_le() {
    const auto* p = take(4);
    return (std::uint32_t{p[3]} << 24) | (std::uint32_t{p[2]} << 16) | (std::uint32_t{p[1]} << 8) | p[0];
  }
  std::uint64_t u64_le() {
    const auto* p = take(8);
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
    return v;
  }
  std::int32_t i32_le() { return static_cast<std::int32_t>(u32_le()); }
  double f64_le() { return std::bit_cast<double>(u64_le()); }

 private:
  const std::vector<std::uint8_t>& buf_;
  std::size_t pos_ = 0;
  std::string what_;
};

}  // namespace fisherlab::io
