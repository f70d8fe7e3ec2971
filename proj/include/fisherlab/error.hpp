// Copyright (c) 2026 The fisherlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fisherlab {

enum class Errc {
  invalid_argument,
  shape_mismatch,
  layout_mismatch,
  non_finite,
  label_out_of_range,
  cap_exceeded,
  bad_magic,
  truncated_payload,
  count_mismatch,
  io,
  config,
  parse,
};

inline std::string_view errc_name(Errc code) {
  switch (code) {
    case Errc::invalid_argument: return "invalid argument";
    case Errc::shape_mismatch: return "shape mismatch";
    case Errc::layout_mismatch: return "layout mismatch";
    case Errc::non_finite: return "non-finite value";
    case Errc::label_out_of_range: return "label out of range";
    case Errc::cap_exceeded: return "cap exceeded";
    case Errc::bad_magic: return "bad magic";
    case Errc::truncated_payload: return "truncated payload";
    case Errc::count_mismatch: return "count mismatch";
    case Errc::io: return "i/o failure";
    case Errc::config: return "config error";
    case Errc::parse: return "parse error";
  }
  return "unknown";
}

/// Library-wide exception. The code lets callers tell failure modes apart
/// without matching on message text.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, Errc code, const std::string& what) {
  if (!cond) fail(code, what);
}

}  // namespace fisherlab
