// Copyright (c) 2026 The fisherlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fisherlab/binary_io.hpp"
#include "fisherlab/config.hpp"
#include "fisherlab/error.hpp"

namespace fisherlab {

/// One logging point. Unset optionals are written as empty CSV fields.
struct MetricsRow {
  std::uint64_t epoch = 0;
  std::uint64_t step = 0;
  std::optional<double> lr, train_loss, train_acc, val_loss, val_acc, test_acc, tr_f, tr_f_minibatch, tr_h,
      empirical_fisher, penalty_value, grad_norm_clean, grad_norm_noisy, grad_norm_ratio, cos_clean_noisy,
      train_acc_clean, train_acc_noisy;

  friend bool operator==(const MetricsRow&, const MetricsRow&) = default;
};

inline constexpr std::array<std::string_view, 19> kMetricsColumns = {
    "epoch",           "step",          "lr",
    "train_loss",      "train_acc",     "val_loss",
    "val_acc",         "test_acc",      "tr_f",
    "tr_f_minibatch",  "tr_h",          "empirical_fisher",
    "penalty_value",   "grad_norm_clean", "grad_norm_noisy",
    "grad_norm_ratio", "cos_clean_noisy", "train_acc_clean",
    "train_acc_noisy"};

namespace detail {

// Pointers to the optional columns, in header order after epoch/step.
inline std::array<std::optional<double> MetricsRow::*, 17> metric_fields() {
  return {&MetricsRow::lr,           &MetricsRow::train_loss,      &MetricsRow::train_acc,
          &MetricsRow::val_loss,     &MetricsRow::val_acc,         &MetricsRow::test_acc,
          &MetricsRow::tr_f,         &MetricsRow::tr_f_minibatch,  &MetricsRow::tr_h,
          &MetricsRow::empirical_fisher, &MetricsRow::penalty_value, &MetricsRow::grad_norm_clean,
          &MetricsRow::grad_norm_noisy, &MetricsRow::grad_norm_ratio, &MetricsRow::cos_clean_noisy,
          &MetricsRow::train_acc_clean, &MetricsRow::train_acc_noisy};
}

inline std::string fmt_metric(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

inline std::string metrics_header() {
  std::string s;
  for (std::size_t i = 0; i < kMetricsColumns.size(); ++i) {
    if (i) s += ',';
    s += kMetricsColumns[i];
  }
  return s;
}

inline std::string format_row(const MetricsRow& r) {
  std::string s = std::to_string(r.epoch) + "," + std::to_string(r.step);
  for (auto f : detail::metric_fields()) {
    s += ',';
    if (r.*f) s += detail::fmt_metric(*(r.*f));
  }
  return s;
}

inline std::string format_metrics(const std::vector<MetricsRow>& rows) {
  std::string s = metrics_header() + "\n";
  for (const auto& r : rows) s += format_row(r) + "\n";
  return s;
}

inline void write_metrics(const std::filesystem::path& path, const std::vector<MetricsRow>& rows) {
  const std::string text = format_metrics(rows);
  io::write_file(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

/// Parses the CSV produced by format_metrics. The header must match exactly.
inline std::vector<MetricsRow> parse_metrics(std::string_view text) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string line(text.substr(start, end - start));
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
    start = end + 1;
  }
  require(!lines.empty() && lines[0] == metrics_header(), Errc::parse, "metrics CSV header mismatch");
  std::vector<MetricsRow> rows;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    const std::string& line = lines[li];
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::size_t s0 = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
      if (i == line.size() || line[i] == ',') {
        cells.push_back(line.substr(s0, i - s0));
        s0 = i + 1;
      }
    }
    const std::string where = "metrics CSV line " + std::to_string(li + 1);
    require(cells.size() == kMetricsColumns.size(), Errc::parse, where + ": expected 19 fields");
    MetricsRow r;
    try {
      r.epoch = cfgparse::to_u64("epoch", cells[0]);
      r.step = cfgparse::to_u64("step", cells[1]);
    } catch (const Error&) {
      fail(Errc::parse, where + ": bad epoch/step");
    }
    const auto fields = detail::metric_fields();
    for (std::size_t k = 0; k < fields.size(); ++k) {
      const std::string& cell = cells[k + 2];
      if (cell.empty()) continue;
      char* endp = nullptr;
      const double v = std::strtod(cell.c_str(), &endp);
      require(endp == cell.c_str() + cell.size(), Errc::parse,
              where + ": bad value '" + cell + "' in column " + std::string(kMetricsColumns[k + 2]));
      r.*fields[k] = v;
    }
    rows.push_back(r);
  }
  return rows;
}

inline std::vector<MetricsRow> read_metrics(const std::filesystem::path& path) {
  const auto bytes = io::read_file(path);
  return parse_metrics(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

enum class TrfiStatus { ok, never_crossed, no_probe_before_crossing };

inline std::string_view to_string(TrfiStatus s) {
  switch (s) {
    case TrfiStatus::ok: return "ok";
    case TrfiStatus::never_crossed: return "never crossed";
    case TrfiStatus::no_probe_before_crossing: return "no probe before crossing";
  }
  return "?";
}

struct TrfiResult {
  TrfiStatus status = TrfiStatus::never_crossed;
  std::optional<double> value;
  std::optional<std::uint64_t> epoch, step;  // crossing row
};

/// tr_f at the first row whose train_loss <= epsilon. When that row carries
/// no probe, the most recent earlier tr_f probe is used; if there is none the
/// status says so.
inline TrfiResult trfi_from_log(const std::vector<MetricsRow>& rows, double epsilon) {
  TrfiResult out;
  std::optional<double> last_tr_f;
  for (const auto& r : rows) {
    if (r.tr_f) last_tr_f = r.tr_f;
    if (r.train_loss && *r.train_loss <= epsilon) {
      out.epoch = r.epoch;
      out.step = r.step;
      if (last_tr_f) {
        out.status = TrfiStatus::ok;
        out.value = last_tr_f;
      } else {
        out.status = TrfiStatus::no_probe_before_crossing;
      }
      return out;
    }
  }
  return out;
}

struct RunSummary {
  TrfiResult trf_i;
  std::optional<double> max_tr_f;
  std::optional<std::uint64_t> best_val_epoch;
  std::optional<double> test_acc_at_best_val;
  std::optional<double> final_train_acc;
  std::optional<double> tr_h_at_best_val;
  std::optional<double> final_test_acc;
  std::optional<std::uint64_t> aborted_at_step;
};

/// Everything recoverable from a metrics log. The best-validation row is the
/// epoch row with the highest val_acc (earliest on ties).
inline RunSummary summarize_rows(const std::vector<MetricsRow>& rows, double epsilon) {
  RunSummary s;
  s.trf_i = trfi_from_log(rows, epsilon);
  const MetricsRow* best = nullptr;
  for (const auto& r : rows) {
    if (r.tr_f && (!s.max_tr_f || *r.tr_f > *s.max_tr_f)) s.max_tr_f = r.tr_f;
    if (r.val_acc && (!best || *r.val_acc > *best->val_acc)) best = &r;
    if (r.train_acc) s.final_train_acc = r.train_acc;
    if (r.test_acc) s.final_test_acc = r.test_acc;
  }
  if (best) {
    s.best_val_epoch = best->epoch;
    s.test_acc_at_best_val = best->test_acc;
    s.tr_h_at_best_val = best->tr_h;
  }
  return s;
}

/// Tr(F)/Tr(H) pairs from rows carrying both probes.
inline std::pair<std::vector<double>, std::vector<double>> trf_trh_series(const std::vector<MetricsRow>& rows) {
  std::pair<std::vector<double>, std::vector<double>> out;
  for (const auto& r : rows)
    if (r.tr_f && r.tr_h) {
      out.first.push_back(*r.tr_f);
      out.second.push_back(*r.tr_h);
    }
  return out;
}

}  // namespace fisherlab
