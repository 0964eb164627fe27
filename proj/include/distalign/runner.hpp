// Copyright 2026 The dist-align Authors
// SPDX-License-Identifier: Apache-2.0
//
// Orchestrates the full experiment grid (datasets x providers x methods x
// prompt kinds): elicit, calibrate, evaluate on test questions, run the
// paired significance tests, and emit machine-readable reports. Also the
// entry points behind each CLI subcommand.

#ifndef DISTALIGN_RUNNER_HPP
#define DISTALIGN_RUNNER_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "distalign/calibrate.hpp"
#include "distalign/core.hpp"
#include "distalign/elicit.hpp"
#include "distalign/ingest.hpp"
#include "distalign/metrics.hpp"
#include "distalign/providers.hpp"
#include "distalign/synth.hpp"

namespace distalign {

struct DatasetConfig {
  std::string questions_path;
  std::string respondents_path;
  int min_group_count = 20;
};

struct ExperimentConfig {
  std::vector<DatasetConfig> datasets;
  std::vector<std::string> provider_paths;
  std::vector<Method> methods;
  std::vector<PromptKind> prompt_kinds;
  uint64_t seed = 42;
  std::string out_dir = "out";
  std::string prompts_dir;  // empty = compiled-in templates
  std::vector<int> min_supervision_sizes;
  int min_supervision_seeds = 10;
  std::string holdout;  // non-empty switches on leave-one-dataset-out
  int workers = 4;
  // Research flag (off for reproduction runs): additionally calibrate each
  // demographic group on its own training pairs.
  bool per_group_calibration = false;
  double alpha = 0.05;

  void validate() const;
  static ExperimentConfig fromTomlFile(const std::string& path);
};

struct GroupRow {
  GroupKey group;
  int n_questions = 0;
  double uncalibrated = 0.0;
  double calibrated = 0.0;
  bool has_test = false;
  PairedTestResult test;
  // Filled only under --per-group-calibration.
  bool has_per_group_model = false;
  double per_group_calibrated = 0.0;
};

struct SupervisionRow {
  int size = 0;
  double mean_test_mse = 0.0;
  double mean_test_alignment = 0.0;
};

/// One grid cell: everything measured for a single setting.
struct CellResult {
  SettingId setting;
  std::string error;  // non-empty = the cell failed and carries no data
  int n_rows = 0;     // test-split (question, group) rows
  int n_questions = 0;
  double uncalibrated = 0.0;  // mean alignment over rows
  double calibrated = 0.0;
  double uncalibrated_std = 0.0;  // std-dev of per-row alignment
  double calibrated_std = 0.0;
  bool has_test = false;
  PairedTestResult test;  // calibrated vs uncalibrated, per-row pairs
  std::string chosen_spec;
  double chosen_dev_mse = 0.0;
  std::vector<GroupRow> groups;
  std::vector<SupervisionRow> supervision;
};

struct CrossDatasetRow {
  SettingId setting;  // dataset = the holdout
  double uncalibrated = 0.0;
  double calibrated = 0.0;
  int n_rows = 0;
};

struct AlignmentReport {
  std::vector<CellResult> cells;
  std::vector<CrossDatasetRow> cross_dataset;
  double alpha = 0.05;
  int n_comparisons_cells = 0;
  int n_comparisons_groups = 0;
  // Aggregates over non-failed cells.
  double mean_uncalibrated = 0.0;
  double mean_calibrated = 0.0;
  double mean_improvement = 0.0;
  double frac_improved = 0.0;
  double frac_std_reduced = 0.0;
  double across_settings_std_uncalibrated = 0.0;
  double across_settings_std_calibrated = 0.0;
};

/// Recomputes every Bonferroni correction with the table-wide comparison
/// counts (cells for alignment.csv, group rows for per_group.csv) and
/// refreshes the aggregate block.
void annotateSignificance(AlignmentReport& report);

/// Ingest, split, elicit, calibrate, and evaluate the whole grid. Cell
/// failures are captured per cell and do not abort the run. Models land in
/// <out_dir>/models, gold/splits snapshots in <out_dir>.
AlignmentReport runGrid(const ExperimentConfig& config);

/// Writes alignment.csv, per_group.csv, std_vs_alignment.csv,
/// min_supervision.csv, summary.json, report.json (and cross_dataset.csv
/// when leave-one-out rows exist) under out_dir.
void emitReports(const AlignmentReport& report, const std::string& out_dir);

std::string reportToJson(const AlignmentReport& report);
AlignmentReport reportFromJson(const std::string& text);

// --- CLI subcommand entry points ---

void cmdIngest(const std::string& questions_path,
               const std::string& respondents_path, int min_group_count,
               const std::string& out_gold);

void cmdSynth(const std::string& spec_path, const std::string& out_dir);

void cmdElicit(const std::string& gold_path, const std::string& provider_path,
               const std::string& method, const std::string& prompt_kind,
               const std::string& prompts_dir, int workers,
               const std::string& out_path);

/// Trains one calibration model per setting found in the elicited file.
/// splits_path may be empty: splits are then derived from `seed` and saved
/// next to the models. sizes_csv (e.g. "1,5,10,50") switches on the
/// supervision curve; holdout switches on leave-one-dataset-out.
void cmdCalibrate(const std::string& elicited_path,
                  const std::string& gold_path, const std::string& splits_path,
                  uint64_t seed, const std::string& sizes_csv,
                  const std::string& holdout, const std::string& out_dir);

void cmdEvaluate(const std::string& elicited_path, const std::string& gold_path,
                 const std::string& splits_path, const std::string& models_dir,
                 const std::string& out_dir);

void cmdReport(const std::string& report_json_path, const std::string& out_dir);

void cmdRun(const std::string& config_path, const std::string& out_dir_override,
            bool has_seed, uint64_t seed, int workers);

}  // namespace distalign

#endif  // DISTALIGN_RUNNER_HPP
