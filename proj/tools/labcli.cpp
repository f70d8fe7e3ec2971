// Copyright (c) 2026 The fisherlab Authors
// SPDX-License-Identifier: Apache-2.0

// labcli: command-line front end for the fisherlab experiment harness.
// Exit codes: 0 success, 1 configuration/I-O/format error, 2 usage error,
// 3 a run stopped on a non-finite loss.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "fisherlab/fisherlab.hpp"

namespace fs = std::filesystem;
using namespace fisherlab;

namespace {

struct Common {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> sets;
};

void add_common(CLI::App* app, Common& c, bool config_required) {
  auto* opt = app->add_option("--config", c.config, "experiment config file (key = value lines)");
  if (config_required) opt->required();
  app->add_option("--out", c.out, "output directory (overrides run.out)");
  app->add_option("--seed", c.seed, "master seed (overrides run.seed)");
  app->add_option("--set", c.sets, "override a config key, key=value (repeatable)");
}

ExperimentConfig load(const Common& c) {
  ExperimentConfig cfg = c.config.empty() ? ExperimentConfig{} : load_config(c.config);
  for (const auto& s : c.sets) apply_assignment(cfg, s);
  if (c.seed) cfg.run.seed = *c.seed;
  if (!c.out.empty()) cfg.run.out = c.out;
  validate(cfg);
  return cfg;
}

void emit(const Report& rep, const fs::path& path) {
  rep.write(path);
  std::cout << rep.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fisherlab experiment harness"};
  app.require_subcommand(1);

  Common train_o, sweep_o, noisy_o, branch_o, delayed_o, probe_o, sum_o;
  std::string checkpoint;
  std::vector<std::string> metric_files;

  auto* train = app.add_subcommand("train", "train one configured run");
  add_common(train, train_o, true);
  auto* sweep = app.add_subcommand("sweep", "grid over learning rate or batch size and seeds");
  add_common(sweep, sweep_o, true);
  auto* noisy = app.add_subcommand("noisy", "label-noise memorization study (data.noise in (0,1))");
  add_common(noisy, noisy_o, true);
  auto* branch = app.add_subcommand("branch", "branch children from high/low regularization parents");
  add_common(branch, branch_o, true);
  auto* delayed = app.add_subcommand("delayed-start", "one penalized run per start epoch");
  add_common(delayed, delayed_o, true);
  auto* probe = app.add_subcommand("probe", "one-shot curvature probe of a checkpoint");
  add_common(probe, probe_o, true);
  probe->add_option("--checkpoint", checkpoint, "FLCK checkpoint")->required();
  auto* summ = app.add_subcommand("summarize", "summaries and tr_f/tr_h correlation of metrics files");
  add_common(summ, sum_o, false);
  summ->add_option("files", metric_files, "metrics CSV files")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*train) {
      const ExperimentConfig c = load(train_o);
      const TrainResult r = train_model(c);
      write_run(c.run.out, c, r);
      std::cout << summary_report(c, r).str();
      return r.summary.aborted_at_step ? 3 : 0;
    }
    if (*sweep) {
      const ExperimentConfig c = load(sweep_o);
      const SweepResult r =
          run_sweep(c, parse_sweep_axis(c.run.sweep_axis), c.run.sweep_values, c.run.seeds, fs::path(c.run.out));
      emit(sweep_report(r), fs::path(c.run.out) / "sweep_report.txt");
      return 0;
    }
    if (*noisy) {
      const ExperimentConfig c = load(noisy_o);
      const NoisyResult r = run_noisy(c, c.data.noise, fs::path(c.run.out));
      emit(noisy_report(r), fs::path(c.run.out) / "noisy_report.txt");
      return 0;
    }
    if (*branch) {
      const ExperimentConfig c = load(branch_o);
      ExperimentConfig high = c, low = c;
      apply_overrides(high, c.run.high);
      apply_overrides(low, c.run.low);
      const BranchResult r = run_branch(c, c.run.branch_epoch, c.run.branches, high, low, fs::path(c.run.out));
      emit(branch_report(r), fs::path(c.run.out) / "branch_report.txt");
      return 0;
    }
    if (*delayed) {
      const ExperimentConfig c = load(delayed_o);
      const DelayedResult r = run_delayed_start(c, c.run.start_epochs, fs::path(c.run.out));
      emit(delayed_report(r), fs::path(c.run.out) / "delayed_report.txt");
      return 0;
    }
    if (*probe) {
      const ExperimentConfig c = load(probe_o);
      const ProbeResult r = probe_checkpoint(c, load_checkpoint(checkpoint));
      emit(probe_report(r), fs::path(c.run.out) / "probe_report.txt");
      return 0;
    }
    if (*summ) {
      const ExperimentConfig c = load(sum_o);
      std::vector<fs::path> files(metric_files.begin(), metric_files.end());
      const Report rep = summarize_report(summarize(files, c.run.epsilon), c.run.epsilon);
      if (!sum_o.out.empty()) rep.write(fs::path(sum_o.out) / "summary_report.txt");
      std::cout << rep.str();
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "labcli: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "labcli: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
