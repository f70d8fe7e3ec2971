// Copyright (c) 2026 The fisherlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fisherlab/binary_io.hpp"
#include "fisherlab/dataset.hpp"
#include "fisherlab/error.hpp"

namespace fisherlab {

inline constexpr std::uint32_t kIdxImagesMagic = 0x00000803;  // unsigned byte, 3 dims
inline constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;  // unsigned byte, 1 dim

/// Parses an IDX image file and an IDX label file. Pixels are scaled to
/// [0,1]; inputs have shape [N,1,rows,cols]. `classes` = 0 infers
/// max(label)+1 (at least 2).
inline Dataset parse_idx(const std::vector<std::uint8_t>& image_bytes, const std::vector<std::uint8_t>& label_bytes,
                         std::size_t classes = 0) {
  io::Reader img(image_bytes, "IDX images");
  const std::uint32_t img_magic = img.u32_be();
  if (img_magic != kIdxImagesMagic) fail(Errc::bad_magic, "IDX images magic " + std::to_string(img_magic));
  const std::size_t count = img.u32_be();
  const std::size_t rows = img.u32_be();
  const std::size_t cols = img.u32_be();
  img.need(count * rows * cols);

  io::Reader lab(label_bytes, "IDX labels");
  const std::uint32_t lab_magic = lab.u32_be();
  if (lab_magic != kIdxLabelsMagic) fail(Errc::bad_magic, "IDX labels magic " + std::to_string(lab_magic));
  const std::size_t n_labels = lab.u32_be();
  lab.need(n_labels);
  if (n_labels != count)
    fail(Errc::count_mismatch, std::to_string(count) + " images vs " + std::to_string(n_labels) + " labels");
  require(count >= 1, Errc::invalid_argument, "IDX file holds no examples");

  Dataset d;
  d.inputs = Tensor(Shape{count, 1, rows, cols});
  const std::uint8_t* px = img.take(count * rows * cols);
  for (std::size_t i = 0; i < d.inputs.size(); ++i) d.inputs[i] = static_cast<double>(px[i]) / 255.0;
  const std::uint8_t* lb = lab.take(count);
  int max_label = 0;
  for (std::size_t i = 0; i < count; ++i) {
    d.labels.push_back(lb[i]);
    max_label = std::max(max_label, static_cast<int>(lb[i]));
  }
  d.classes = classes ? classes : std::max<std::size_t>(2, static_cast<std::size_t>(max_label) + 1);
  d.validate();
  return d;
}

inline Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels,
                        std::size_t classes = 0) {
  return parse_idx(io::read_file(images), io::read_file(labels), classes);
}

struct IdxBytes {
  std::vector<std::uint8_t> images;
  std::vector<std::uint8_t> labels;
};

/// Inverse of parse_idx. Pixel values must be multiples of 1/255 in [0,1]
/// for the round trip to be exact; each is rounded to the nearest byte.
inline IdxBytes encode_idx(const Dataset& data) {
  data.validate();
  const Shape ex = data.example_shape();
  require((ex.size() == 3 && ex[0] == 1) || ex.size() == 2, Errc::shape_mismatch,
          "IDX export needs single-channel 2-D images");
  const std::size_t rows = ex[ex.size() - 2], cols = ex[ex.size() - 1];
  require(data.classes <= 256, Errc::invalid_argument, "IDX labels are single bytes");
  io::Writer img, lab;
  img.u32_be(kIdxImagesMagic);
  img.u32_be(static_cast<std::uint32_t>(data.size()));
  img.u32_be(static_cast<std::uint32_t>(rows));
  img.u32_be(static_cast<std::uint32_t>(cols));
  for (double v : data.inputs.data()) {
    require(v >= 0.0 && v <= 1.0, Errc::invalid_argument, "pixel outside [0,1]");
    img.u8(static_cast<std::uint8_t>(std::lround(v * 255.0)));
  }
  lab.u32_be(kIdxLabelsMagic);
  lab.u32_be(static_cast<std::uint32_t>(data.size()));
  for (int y : data.labels) lab.u8(static_cast<std::uint8_t>(y));
  return {std::move(img.bytes()), std::move(lab.bytes())};
}

inline void write_idx(const Dataset& data, const std::filesystem::path& images, const std::filesystem::path& labels) {
  IdxBytes b = encode_idx(data);
  io::write_file(images, b.images);
  io::write_file(labels, b.labels);
}

// FLDS container, all integers little-endian:
//   "FLDS" | u8 version (1) | u64 N | u64 d | u64 C | f64 x[N*d] | i32 y[N]
//   | u8 has_mask | (u8 mask[N] when has_mask = 1)
inline constexpr std::uint8_t kFldsVersion = 1;

inline std::vector<std::uint8_t> encode_flds(const Dataset& data) {
  data.validate();
  io::Writer w;
  w.raw("FLDS", 4);
  w.u8(kFldsVersion);
  w.u64_le(data.size());
  w.u64_le(data.inputs.row_size());
  w.u64_le(data.classes);
  for (double v : data.inputs.data()) w.f64_le(v);
  for (int y : data.labels) w.i32_le(y);
  w.u8(data.noise ? 1 : 0);
  if (data.noise) w.raw(data.noise->bits.data(), data.noise->bits.size());
  return std::move(w.bytes());
}

inline Dataset decode_flds(const std::vector<std::uint8_t>& bytes) {
  io::Reader r(bytes, "FLDS");
  const std::uint8_t* magic = r.take(4);
  if (std::string(reinterpret_cast<const char*>(magic), 4) != "FLDS") fail(Errc::bad_magic, "not an FLDS file");
  const std::uint8_t version = r.u8();
  require(version == kFldsVersion, Errc::parse, "unsupported FLDS version " + std::to_string(version));
  const std::size_t n = r.u64_le(), d = r.u64_le(), c = r.u64_le();
  r.need(n * d * 8);
  Dataset out;
  out.classes = c;
  out.inputs = Tensor(Shape{n, d});
  for (auto& v : out.inputs.data()) v = r.f64_le();
  r.need(n * 4);
  for (std::size_t i = 0; i < n; ++i) out.labels.push_back(r.i32_le());
  if (r.u8() == 1) {
    const std::uint8_t* m = r.take(n);
    out.noise = NoiseMask{std::vector<std::uint8_t>(m, m + n)};
  }
  out.validate();
  return out;
}

inline void save_flds(const Dataset& data, const std::filesystem::path& path) { io::write_file(path, encode_flds(data)); }
inline Dataset load_flds(const std::filesystem::path& path) { return decode_flds(io::read_file(path)); }

}  // namespace fisherlab
