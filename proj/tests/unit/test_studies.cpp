// Copyright (c) 2026 The fisherlab Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <filesystem>

#include "fisherlab/studies.hpp"

using namespace fisherlab;
namespace fs = std::filesystem;

namespace {

ExperimentConfig tiny() {
  return parse_config(R"(
data.per_class = 40
data.sigma = 0.1
data.seed = 2
model.hidden = 8,8
optim.lr = 0.05
optim.epochs = 4
optim.batch_size = 16
probe.tr_f_examples = 16
probe.batch = 16
probe.hutchinson_m = 2
probe.tr_h_examples = 16
run.epsilon = 0.69
run.seed = 5
)");
}

Errc code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return Errc::invalid_argument;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("fisherlab_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST(Sweep, RejectsDegenerateGrids) {
  const auto c = tiny();
  EXPECT_EQ(code_of([&] { run_sweep(c, SweepAxis::learning_rate, {0.1}, {1, 2}); }), Errc::config);
  EXPECT_EQ(code_of([&] { run_sweep(c, SweepAxis::learning_rate, {0.1, 0.2}, {1}); }), Errc::config);
  EXPECT_EQ(code_of([&] { run_sweep(c, SweepAxis::batch_size, {8, 8.5}, {1, 2}); }), Errc::config);
}

TEST(Sweep, GridOrderAndReport) {
  const auto dir = scratch("sweep");
  const SweepResult r = run_sweep(tiny(), SweepAxis::batch_size, {8, 16}, {1, 2}, dir);
  ASSERT_EQ(r.runs.size(), 4u);
  EXPECT_EQ(r.runs[0].value, 8.0);
  EXPECT_EQ(r.runs[1].seed, 2u);
  EXPECT_EQ(r.runs[2].value, 16.0);
  EXPECT_TRUE(fs::exists(dir / "runs" / "v8_s1" / "metrics.csv"));
  const std::string text = sweep_report(r).str();
  const auto kvs = parse_report(text);
  EXPECT_EQ(*report_value(kvs, "axis"), "batch_size");
  EXPECT_EQ(*report_value(kvs, "runs"), "4");
  EXPECT_TRUE(report_value(kvs, "spearman_log_trfi_test_acc"));
  fs::remove_all(dir);
}

TEST(Sweep, FailedRunsAreListed) {
  const SweepResult r = run_sweep(tiny(), SweepAxis::learning_rate, {0.05, 1e200}, {1, 2});
  EXPECT_TRUE(r.runs[0].failure.empty());
  EXPECT_FALSE(r.runs[2].failure.empty());
  const auto kvs = parse_report(sweep_report(r).str());
  EXPECT_EQ(*report_value(kvs, "failures"), "2");
}

TEST(Noisy, FractionMustBeOpenUnitInterval) {
  EXPECT_EQ(code_of([&] { run_noisy(tiny(), 0.0); }), Errc::config);
  EXPECT_EQ(code_of([&] { run_noisy(tiny(), 1.0); }), Errc::config);
}

TEST(Noisy, AlphaGridRunsBaselinePlusOnePerAlpha) {
  ExperimentConfig c = tiny();
  c.reg.kind = PenaltyKind::fp;
  c.alpha_grid = {0.01, 0.1};
  const NoisyResult r = run_noisy(c, 0.25);
  ASSERT_EQ(r.runs.size(), 3u);
  EXPECT_EQ(r.runs[0].label, "baseline");
  EXPECT_EQ(r.runs[0].reg.kind, PenaltyKind::none);
  EXPECT_EQ(r.runs[2].reg.alpha, 0.1);
  ASSERT_TRUE(r.best);
  for (const auto& run : r.runs) {
    EXPECT_TRUE(run.early_cosine);
    EXPECT_TRUE(run.final_ratio);
    EXPECT_LE(*run.summary.test_acc_at_best_val, *r.runs[*r.best].summary.test_acc_at_best_val);
  }
  const auto kvs = parse_report(noisy_report(r).str());
  EXPECT_EQ(*report_value(kvs, "noise_fraction"), "0.25");
}

TEST(Noisy, NoisyAccuracyAtCleanTarget) {
  std::vector<MetricsRow> rows(3);
  const double clean[] = {0.5, 0.92, 0.99}, noisy[] = {0.1, 0.3, 0.8};
  for (std::size_t i = 0; i < 3; ++i) {
    rows[i].epoch = i;
    rows[i].train_acc_clean = clean[i];
    rows[i].train_acc_noisy = noisy[i];
  }
  const auto [acc, epoch] = noisy_acc_at_clean(rows, 0.9);
  EXPECT_EQ(*acc, 0.3);
  EXPECT_EQ(*epoch, 1u);
  EXPECT_FALSE(noisy_acc_at_clean(rows, 0.999).first);
}

TEST(Branch, RejectsSingleChild) {
  const auto c = tiny();
  EXPECT_EQ(code_of([&] { run_branch(c, 2, 1, c, c); }), Errc::config);
  EXPECT_EQ(code_of([&] { run_branch(c, 4, 2, c, c); }), Errc::config);
}

TEST(Branch, ChildrenPerParentAndReport) {
  ExperimentConfig c = tiny();
  ExperimentConfig high = c, low = c;
  high.optim.schedule.base_lr = 0.1;
  low.optim.schedule.base_lr = 0.01;
  const BranchResult r = run_branch(c, 2, 2, high, low);
  ASSERT_EQ(r.high.children.size(), 2u);
  ASSERT_EQ(r.low.children.size(), 2u);
  EXPECT_NE(r.high.children[0].seed, r.high.children[1].seed);
  EXPECT_NE(r.high.children[0].seed, r.low.children[0].seed);
  for (const auto* p : {&r.high, &r.low}) {
    EXPECT_TRUE(p->tr_f_at_branch);
    EXPECT_TRUE(p->median_tr_h);
    for (const auto& ch : p->children) {
      EXPECT_GE(*ch.best_test_epoch, 2u);
      EXPECT_TRUE(ch.tr_h_at_best_test);
    }
  }
  const auto kvs = parse_report(branch_report(r).str());
  EXPECT_TRUE(report_value(kvs, "high_median_tr_h_at_best_test"));
  EXPECT_TRUE(report_value(kvs, "low_trf_i"));
}

TEST(DelayedStart, RejectsEmptyList) {
  EXPECT_EQ(code_of([&] { run_delayed_start(tiny(), {}); }), Errc::config);
}

TEST(DelayedStart, BeyondHorizonEqualsBaseline) {
  ExperimentConfig c = tiny();
  c.reg.kind = PenaltyKind::fp;
  c.reg.alpha = 0.5;
  const DelayedResult r = run_delayed_start(c, {1, 2, 4, 8, 16, 32, 64, 128});
  ASSERT_EQ(r.runs.size(), 8u);
  ExperimentConfig base = c;
  base.reg.kind = PenaltyKind::none;
  const TrainResult b = train_model(base);
  for (const auto& run : r.runs)
    if (run.beyond_horizon) {
      EXPECT_EQ(run.final_test_acc, b.summary.final_test_acc);
      EXPECT_EQ(run.max_tr_f, b.summary.max_tr_f);
    }
  EXPECT_FALSE(r.runs[1].beyond_horizon);
  EXPECT_TRUE(r.runs[3].beyond_horizon);
}

TEST(Summarize, ConstantSeriesIsUndefined) {
  std::vector<MetricsRow> rows(5);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    rows[i].epoch = i;
    rows[i].tr_f = 2.0;
    rows[i].tr_h = static_cast<double>(i);
  }
  const FileSummary s = summarize_metrics(rows, 1.0);
  EXPECT_EQ(s.probe_pairs, 5u);
  EXPECT_FALSE(s.pearson_tr_f_tr_h);
  const auto kvs = parse_report(summarize_report({s}, 1.0).str());
  EXPECT_EQ(*report_value(kvs, "run0.pearson_tr_f_tr_h"), "undefined");
}

TEST(Summarize, TwoFilesInArgumentOrder) {
  const auto dir = scratch("summ");
  fs::create_directories(dir);
  std::vector<MetricsRow> a(3), b(3);
  for (std::size_t i = 0; i < 3; ++i) {
    a[i].epoch = b[i].epoch = i;
    a[i].tr_f = b[i].tr_f = static_cast<double>(i);
    a[i].tr_h = 2.0 * static_cast<double>(i);
    b[i].tr_h = -static_cast<double>(i);
  }
  write_metrics(dir / "b.csv", b);
  write_metrics(dir / "a.csv", a);
  const auto s = summarize({dir / "b.csv", dir / "a.csv"}, 1.0);
  ASSERT_EQ(s.size(), 2u);
  EXPECT_NEAR(*s[0].pearson_tr_f_tr_h, -1.0, 1e-12);
  EXPECT_NEAR(*s[1].pearson_tr_f_tr_h, 1.0, 1e-12);
  EXPECT_EQ(summarize_report(s, 1.0).str(), summarize_report(summarize({dir / "b.csv", dir / "a.csv"}, 1.0), 1.0).str());
  io::write_file(dir / "bad.csv", {'x', '\n'});
  EXPECT_EQ(code_of([&] { summarize({dir / "bad.csv"}, 1.0); }), Errc::parse);
  EXPECT_THROW(summarize({}, 1.0), Error);
  fs::remove_all(dir);
}

TEST(ProbeCheckpoint, MatchesConfiguredModel) {
  const ExperimentConfig c = tiny();
  const TrainResult r = train_model(c);
  const ProbeResult p = probe_checkpoint(c, Checkpoint{r.spec, r.theta, std::nullopt});
  EXPECT_GT(p.tr_f.value, 0.0);
  EXPECT_GT(p.empirical_fisher.value, 0.0);
  EXPECT_EQ(p.tr_h.n_samples, 2u);
  ExperimentConfig other = c;
  other.model.hidden = {4};
  EXPECT_EQ(code_of([&] { probe_checkpoint(other, Checkpoint{r.spec, r.theta, std::nullopt}); }), Errc::config);
}
