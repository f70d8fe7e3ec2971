// Copyright (c) 2026 The fisherlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fisherlab/binary_io.hpp"
#include "fisherlab/nets.hpp"
#include "fisherlab/params.hpp"

namespace fisherlab {

// Layout, little-endian throughout:
//   "FLCK" | u8 version (1)
//   | u8 kind | u8 activation | u64 rank | u64 input_shape[rank]
//   | u64 n_hidden | u64 hidden[n_hidden] | u64 classes | u64 kernel
//   | u64 P | f64 theta[P]
//   | u8 has_velocity | (f64 velocity[P] when has_velocity = 1)
inline constexpr std::uint8_t kCheckpointVersion = 1;

struct Checkpoint {
  ModelSpec spec;
  ParamVector theta;
  std::optional<ParamVector> velocity;

  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

inline std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ck) {
  check_theta(ck.spec, ck.theta);
  if (ck.velocity) check_same_layout(ck.theta, *ck.velocity, "checkpoint velocity");
  io::Writer w;
  w.raw("FLCK", 4);
  w.u8(kCheckpointVersion);
  w.u8(static_cast<std::uint8_t>(ck.spec.kind));
  w.u8(static_cast<std::uint8_t>(ck.spec.activation));
  w.u64_le(ck.spec.input_shape.size());
  for (auto d : ck.spec.input_shape) w.u64_le(d);
  w.u64_le(ck.spec.hidden.size());
  for (auto h : ck.spec.hidden) w.u64_le(h);
  w.u64_le(ck.spec.classes);
  w.u64_le(ck.spec.kernel);
  w.u64_le(ck.theta.size());
  for (double v : ck.theta.data()) w.f64_le(v);
  w.u8(ck.velocity ? 1 : 0);
  if (ck.velocity)
    for (double v : ck.velocity->data()) w.f64_le(v);
  return std::move(w.bytes());
}

inline Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
  io::Reader r(bytes, "FLCK");
  const std::uint8_t* magic = r.take(4);
  if (std::string(reinterpret_cast<const char*>(magic), 4) != "FLCK") fail(Errc::bad_magic, "not an FLCK checkpoint");
  const std::uint8_t version = r.u8();
  require(version == kCheckpointVersion, Errc::parse, "unsupported FLCK version " + std::to_string(version));
  Checkpoint ck;
  const std::uint8_t kind = r.u8(), act = r.u8();
  require(kind <= static_cast<std::uint8_t>(ModelKind::small_conv), Errc::parse, "bad model kind in checkpoint");
  require(act <= static_cast<std::uint8_t>(Activation::tanh), Errc::parse, "bad activation in checkpoint");
  ck.spec.kind = static_cast<ModelKind>(kind);
  ck.spec.activation = static_cast<Activation>(act);
  const std::uint64_t rank = r.u64_le();
  require(rank <= 8, Errc::parse, "implausible input rank in checkpoint");
  ck.spec.input_shape.clear();
  for (std::uint64_t i = 0; i < rank; ++i) ck.spec.input_shape.push_back(r.u64_le());
  const std::uint64_t nh = r.u64_le();
  require(nh <= 64, Errc::parse, "implausible hidden layer count in checkpoint");
  ck.spec.hidden.clear();
  for (std::uint64_t i = 0; i < nh; ++i) ck.spec.hidden.push_back(r.u64_le());
  ck.spec.classes = r.u64_le();
  ck.spec.kernel = r.u64_le();
  LayoutPtr layout;
  try {
    layout = make_layout(ck.spec);
  } catch (const Error& e) {
    fail(Errc::parse, std::string("checkpoint model spec: ") + e.what());
  }
  const std::uint64_t p = r.u64_le();
  require(p == layout->total(), Errc::count_mismatch,
          "checkpoint holds " + std::to_string(p) + " parameters, spec needs " + std::to_string(layout->total()));
  r.need(p * 8);
  std::vector<double> theta(p);
  for (auto& v : theta) v = r.f64_le();
  ck.theta = ParamVector(layout, std::move(theta));
  if (r.u8() == 1) {
    r.need(p * 8);
    std::vector<double> vel(p);
    for (auto& v : vel) v = r.f64_le();
    ck.velocity = ParamVector(layout, std::move(vel));
  }
  require(r.at_end(), Errc::parse, "trailing bytes after checkpoint");
  return ck;
}

inline void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path) {
  io::write_file(path, encode_checkpoint(ck));
}
inline Checkpoint load_checkpoint(const std::filesystem::path& path) { return decode_checkpoint(io::read_file(path)); }

}  // namespace fisherlab
