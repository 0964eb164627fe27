// Copyright 2026 The dist-align Authors
// SPDX-License-Identifier: Apache-2.0
//
// Supervised calibration of elicited distributions: per (dataset, model,
// method, prompt-kind) setting, learn a scalar regression from elicited
// per-choice values to gold per-choice values, select the regressor family
// on held-out dev error, and apply it with clip-and-renormalize. Also the
// few-shot supervision study and leave-one-dataset-out transfer.

#ifndef DISTALIGN_CALIBRATE_HPP
#define DISTALIGN_CALIBRATE_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "distalign/core.hpp"
#include "distalign/elicit.hpp"
#include "distalign/ingest.hpp"
#include "distalign/regress.hpp"

namespace distalign {

struct SettingId {
  std::string dataset;
  std::string model_id;
  Method method = Method::Verbalized;
  PromptKind kind = PromptKind::Base;

  /// Registry file stem, "<dataset>__<model_id>__<method>__<prompt_kind>".
  std::string registryName() const;

  auto operator<=>(const SettingId&) const = default;
};

/// Back-reference from a scalar training pair to its origin.
struct PairRef {
  std::string question_id;
  GroupKey group;
  int choice_index = 0;  // 0-based
};

/// Flat (elicited value, gold value) pairs pooled across questions, groups,
/// and choice positions.
struct TrainingPairs {
  std::vector<double> xs;
  std::vector<double> ys;
  std::vector<PairRef> refs;

  size_t size() const { return xs.size(); }
  std::vector<std::string> questionIds() const;
};

/// Pools the per-choice scalar pairs for records whose question falls in
/// the requested split. Records lacking a gold entry raise MissingGold;
/// an empty result raises EmptySelection.
TrainingPairs buildPairs(std::span<const ElicitationRecord> records,
                         const GoldTable& gold, const SplitAssignment& splits,
                         Split which);

/// As above but keyed on an explicit question-id filter (empty = all).
TrainingPairs buildPairsFiltered(std::span<const ElicitationRecord> records,
                                 const GoldTable& gold,
                                 const std::vector<std::string>& question_ids);

struct CandidateReport {
  RegressorSpec spec;
  double dev_mse = 0.0;  // +inf when the candidate could not be fitted
};

struct CalibrationModel {
  SettingId setting;
  FittedRegressor fitted;
  std::vector<CandidateReport> candidates;
  size_t chosen_index = 0;
  int n_train_questions = 0;
  std::vector<std::string> train_question_ids;
  bool out_of_domain = false;

  double chosenDevMse() const { return candidates[chosen_index].dev_mse; }
};

/// The regressor families tried for every setting. Forest candidates get
/// seeds derived from `seed`.
std::vector<RegressorSpec> candidateGrid(uint64_t seed);

/// Fits every grid candidate on the train pairs, scores each on the dev
/// pairs, and keeps the dev-MSE minimizer (ties broken toward the simpler
/// spec). Candidates that cannot be fitted (e.g. constant inputs for the
/// linear family) stay in the report with infinite dev error.
/// Errors: TooFewPairs.
CalibrationModel trainCalibrator(const TrainingPairs& train,
                                 const TrainingPairs& dev, uint64_t seed,
                                 const SettingId& setting);

/// Maps each entry through the regressor, clips negatives, renormalizes.
/// A (nearly) all-zero result falls back to the uniform distribution and
/// sets *degenerate_fallback.
OpinionDistribution applyCalibration(const CalibrationModel& model,
                                     const OpinionDistribution& elicited,
                                     bool* degenerate_fallback = nullptr);

struct SupervisionPoint {
  int requested_size = 0;
  int effective_size = 0;  // clamped to the train-question count
  double mean_test_mse = 0.0;
  double mean_test_alignment = 0.0;
};

/// Test error and alignment as a function of the number of gold-labeled
/// training questions: for each size and seed, draw that many train-split
/// questions uniformly without replacement, retrain the full grid (with
/// per-draw dev-set selection), and evaluate on the fixed test split.
/// Oversized requests are clamped to the full train set with a warning.
std::vector<SupervisionPoint> minimalSupervisionCurve(
    std::span<const ElicitationRecord> records, const GoldTable& gold,
    const SplitAssignment& splits, const std::vector<int>& sizes, int n_seeds,
    uint64_t seed, const SettingId& setting);

struct CrossDatasetReport {
  CalibrationModel model;
  double uncalibrated_alignment = 0.0;
  double calibrated_alignment = 0.0;
  size_t n_rows = 0;
};

/// Trains on every dataset except `holdout` (their dev questions drive
/// model selection) and evaluates on the holdout's test split. The model
/// is flagged out-of-domain. Errors: TooFewDatasets (single source or
/// unknown holdout).
CrossDatasetReport crossDatasetCalibrate(
    std::span<const ElicitationRecord> records, const Dataset& world,
    const SplitAssignment& splits, const std::string& holdout, uint64_t seed);

// --- model registry ---

void saveCalibrationModel(const CalibrationModel& model,
                          const std::string& dir);
CalibrationModel loadCalibrationModel(const std::string& path);

}  // namespace distalign

#endif  // DISTALIGN_CALIBRATE_HPP
