// Copyright (c) 2026 The fisherlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fisherlab/binary_io.hpp"
#include "fisherlab/config.hpp"
#include "fisherlab/error.hpp"

namespace fisherlab {

/// Plain-text report: `key: value` lines, blank-line separated sections and
/// space-aligned tables. Missing values print as "missing".
class Report {
 public:
  static std::string num(std::optional<double> v) { return v ? cfgparse::fmt_double(*v) : "missing"; }
  static std::string num(std::optional<std::uint64_t> v) { return v ? std::to_string(*v) : "missing"; }

  Report& kv(std::string_view key, std::string_view value) {
    text_ += std::string(key) + ": " + std::string(value) + "\n";
    return *this;
  }
  Report& kv(std::string_view key, std::optional<double> v) { return kv(key, num(v)); }
  Report& kv(std::string_view key, double v) { return kv(key, num(std::optional<double>(v))); }
  Report& kv_int(std::string_view key, std::optional<std::uint64_t> v) { return kv(key, num(v)); }

  Report& blank() {
    text_ += "\n";
    return *this;
  }

  /// Header row then data rows, each column padded to its widest cell.
  Report& table(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows) {
    std::vector<std::size_t> w(header.size());
    for (std::size_t j = 0; j < header.size(); ++j) w[j] = header[j].size();
    for (const auto& r : rows) {
      require(r.size() == header.size(), Errc::invalid_argument, "report table row width");
      for (std::size_t j = 0; j < r.size(); ++j) w[j] = std::max(w[j], r[j].size());
    }
    auto line = [&](const std::vector<std::string>& cells) {
      std::string s;
      for (std::size_t j = 0; j < cells.size(); ++j) {
        if (j) s += "  ";
        s += cells[j];
        if (j + 1 < cells.size()) s.append(w[j] - cells[j].size(), ' ');
      }
      text_ += s + "\n";
    };
    line(header);
    for (const auto& r : rows) line(r);
    return *this;
  }

  const std::string& str() const noexcept { return text_; }

  void write(const std::filesystem::path& path) const {
    io::write_file(path, std::vector<std::uint8_t>(text_.begin(), text_.end()));
  }

 private:
  std::string text_;
};

/// `key: value` pairs in file order; table lines and blanks are skipped.
inline std::vector<std::pair<std::string, std::string>> parse_report(std::string_view text) {
  std::vector<std::pair<std::string, std::string>> out;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = text.substr(start, end - start);
    start = end + 1;
    const auto colon = line.find(": ");
    if (colon == std::string_view::npos || colon == 0) continue;
    const std::string_view key = line.substr(0, colon);
    if (key.find(' ') != std::string_view::npos) continue;
    out.emplace_back(std::string(key), std::string(line.substr(colon + 2)));
  }
  return out;
}

inline std::optional<std::string> report_value(const std::vector<std::pair<std::string, std::string>>& kvs,
                                               std::string_view key) {
  for (const auto& [k, v] : kvs)
    if (k == key) return v;
  return std::nullopt;
}

}  // namespace fisherlab
