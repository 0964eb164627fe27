// Copyright 2026 The dist-align Authors
// SPDX-License-Identifier: Apache-2.0

#include "distalign/calibrate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "distalign/metrics.hpp"
#include "distalign/rng.hpp"
#include "ioutil.hpp"

namespace distalign {

using nlohmann::json;

namespace {

std::string sanitize(const std::string& s) {
  std::string out;
  for (char c : s) {
    out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' ||
            c == '_' || c == '.')
               ? c
               : '_';
  }
  return out.empty() ? "_" : out;
}

}  // namespace

std::string SettingId::registryName() const {
  return sanitize(dataset) + "__" + sanitize(model_id) + "__" +
         methodName(method) + "__" + promptKindName(kind);
}

std::vector<std::string> TrainingPairs::questionIds() const {
  std::set<std::string> ids;
  for (const auto& ref : refs) ids.insert(ref.question_id);
  return {ids.begin(), ids.end()};
}

namespace {

void appendRecordPairs(const ElicitationRecord& record, const GoldEntry& gold,
                       TrainingPairs* pairs) {
  const size_t k = record.distribution.size();
  if (gold.distribution.size() != k) {
    raise(Errc::LengthMismatch,
          "elicited/gold length mismatch for question '" +
              record.key.question_id + "'");
  }
  for (size_t i = 0; i < k; ++i) {
    pairs->xs.push_back(record.distribution[i]);
    pairs->ys.push_back(gold.distribution[i]);
    pairs->refs.push_back(
        {record.key.question_id, record.key.group, static_cast<int>(i)});
  }
}

}  // namespace

TrainingPairs buildPairs(std::span<const ElicitationRecord> records,
                         const GoldTable& gold, const SplitAssignment& splits,
                         Split which) {
  TrainingPairs pairs;
  for (const auto& record : records) {
    if (splits.of(record.key.question_id) != which) continue;
    const GoldEntry* entry = gold.find(record.key.question_id, record.key.group);
    if (!entry) {
      raise(Errc::MissingGold, "no gold entry for question '" +
                                   record.key.question_id + "', group (" +
                                   record.key.group.attribute + "=" +
                                   record.key.group.value + ")");
    }
    appendRecordPairs(record, *entry, &pairs);
  }
  if (pairs.xs.empty()) {
    raise(Errc::EmptySelection, std::string("no records in the ") +
                                    splitName(which) + " split");
  }
  return pairs;
}

TrainingPairs buildPairsFiltered(
    std::span<const ElicitationRecord> records, const GoldTable& gold,
    const std::vector<std::string>& question_ids) {
  std::unordered_set<std::string> keep(question_ids.begin(),
                                       question_ids.end());
  TrainingPairs pairs;
  for (const auto& record : records) {
    if (!keep.empty() && !keep.count(record.key.question_id)) continue;
    const GoldEntry* entry = gold.find(record.key.question_id, record.key.group);
    if (!entry) {
      raise(Errc::MissingGold,
            "no gold entry for question '" + record.key.question_id + "'");
    }
    appendRecordPairs(record, *entry, &pairs);
  }
  if (pairs.xs.empty()) raise(Errc::EmptySelection, "no matching records");
  return pairs;
}

std::vector<RegressorSpec> candidateGrid(uint64_t seed) {
  std::vector<RegressorSpec> grid;
  grid.push_back(RegressorSpec::ols());
  for (double alpha : {0.01, 0.1, 1.0, 10.0}) {
    grid.push_back(RegressorSpec::ridge(alpha));
  }
  for (double alpha : {0.0001, 0.001, 0.01, 0.1}) {
    grid.push_back(RegressorSpec::lasso(alpha));
  }
  for (int depth : {4, 8, 0}) {
    for (int min_leaf : {1, 2, 5}) {
      grid.push_back(RegressorSpec::randomForest(100, depth, min_leaf, 0));
    }
  }
  for (size_t i = 0; i < grid.size(); ++i) {
    grid[i].seed = Rng::mix(seed, static_cast<uint64_t>(i));
  }
  return grid;
}

CalibrationModel trainCalibrator(const TrainingPairs& train,
                                 const TrainingPairs& dev, uint64_t seed,
                                 const SettingId& setting) {
  if (train.size() < 2) raise(Errc::TooFewPairs, "need at least 2 train pairs");
  if (dev.size() < 1) raise(Errc::TooFewPairs, "need at least 1 dev pair");

  CalibrationModel model;
  model.setting = setting;
  model.train_question_ids = train.questionIds();
  model.n_train_questions = static_cast<int>(model.train_question_ids.size());

  std::vector<FittedRegressor> fits;
  const std::vector<RegressorSpec> grid = candidateGrid(seed);
  fits.reserve(grid.size());
  for (const auto& spec : grid) {
    CandidateReport report;
    report.spec = spec;
    try {
      FittedRegressor fitted = fit(spec, train.xs, train.ys);
      report.dev_mse = fitted.mse(dev.xs, dev.ys);
      if (std::isnan(report.dev_mse)) {
        report.dev_mse = std::numeric_limits<double>::infinity();
      }
      fits.push_back(std::move(fitted));
    } catch (const Error&) {
      report.dev_mse = std::numeric_limits<double>::infinity();
      fits.emplace_back();
    }
    model.candidates.push_back(std::move(report));
  }

  size_t best = model.candidates.size();
  for (size_t i = 0; i < model.candidates.size(); ++i) {
    if (std::isinf(model.candidates[i].dev_mse)) continue;
    if (best == model.candidates.size()) {
      best = i;
      continue;
    }
    double delta = model.candidates[i].dev_mse - model.candidates[best].dev_mse;
    if (delta < 0.0 ||
        (delta == 0.0 &&
         model.candidates[i].spec.simplerThan(model.candidates[best].spec))) {
      best = i;
    }
  }
  if (best == model.candidates.size()) {
    raise(Errc::DegenerateDesign, "no regressor candidate could be fitted");
  }
  model.chosen_index = best;
  model.fitted = std::move(fits[best]);
  return model;
}

OpinionDistribution applyCalibration(const CalibrationModel& model,
                                     const OpinionDistribution& elicited,
                                     bool* degenerate_fallback) {
  if (degenerate_fallback) *degenerate_fallback = false;
  std::vector<double> mapped(elicited.size());
  double positive_sum = 0.0;
  for (size_t i = 0; i < elicited.size(); ++i) {
    double v = model.fitted.predict(elicited[i]);
    mapped[i] = v > 0.0 ? v : 0.0;
    positive_sum += mapped[i];
  }
  if (!(positive_sum > kDegenerateSumTol)) {
    if (degenerate_fallback) *degenerate_fallback = true;
    std::vector<double> uniform(elicited.size(),
                                1.0 / static_cast<double>(elicited.size()));
    return OpinionDistribution::fromProbs(std::move(uniform));
  }
  return OpinionDistribution::renormalized(mapped, NegativePolicy::ClipToZero);
}

namespace {

/// Mean alignment between calibrated elicited records and gold over the
/// given question filter (empty = all records).
double meanCalibratedAlignment(std::span<const ElicitationRecord> records,
                               const GoldTable& gold,
                               const std::unordered_set<std::string>& keep,
                               const CalibrationModel* model) {
  double total = 0.0;
  size_t n = 0;
  for (const auto& record : records) {
    if (!keep.empty() && !keep.count(record.key.question_id)) continue;
    const GoldEntry* entry = gold.find(record.key.question_id, record.key.group);
    if (!entry) continue;
    OpinionDistribution d = model ? applyCalibration(*model, record.distribution)
                                  : record.distribution;
    total += opinionAlignment(d, entry->distribution);
    ++n;
  }
  return n == 0 ? 0.0 : total / static_cast<double>(n);
}

}  // namespace

std::vector<SupervisionPoint> minimalSupervisionCurve(
    std::span<const ElicitationRecord> records, const GoldTable& gold,
    const SplitAssignment& splits, const std::vector<int>& sizes, int n_seeds,
    uint64_t seed, const SettingId& setting) {
  if (n_seeds < 1) raise(Errc::InvalidArgument, "n_seeds must be >= 1");
  for (int s : sizes) {
    if (s < 1) raise(Errc::InvalidArgument, "sizes must be positive");
  }

  // Train-split questions that actually have records, in sorted order.
  std::set<std::string> train_set;
  for (const auto& record : records) {
    if (splits.of(record.key.question_id) == Split::Train) {
      train_set.insert(record.key.question_id);
    }
  }
  std::vector<std::string> train_questions(train_set.begin(), train_set.end());
  if (train_questions.empty()) {
    raise(Errc::EmptySelection, "no train-split records");
  }

  TrainingPairs dev = buildPairs(records, gold, splits, Split::Dev);
  TrainingPairs test = buildPairs(records, gold, splits, Split::Test);
  std::unordered_set<std::string> test_keep;
  for (const auto& ref : test.refs) test_keep.insert(ref.question_id);

  std::vector<SupervisionPoint> curve;
  for (int requested : sizes) {
    int size = requested;
    if (static_cast<size_t>(size) > train_questions.size()) {
      size = static_cast<int>(train_questions.size());
      logWarn("supervision size " + std::to_string(requested) +
              " exceeds the " + std::to_string(train_questions.size()) +
              " train questions; clamped");
    }
    SupervisionPoint point;
    point.requested_size = requested;
    point.effective_size = size;
    for (int s = 0; s < n_seeds; ++s) {
      std::vector<std::string> pool = train_questions;
      Rng rng(Rng::mix(seed, Rng::mix(static_cast<uint64_t>(requested),
                                      static_cast<uint64_t>(s))));
      rng.shuffle(pool);
      pool.resize(static_cast<size_t>(size));
      TrainingPairs train = buildPairsFiltered(records, gold, pool);
      CalibrationModel model = trainCalibrator(
          train, dev, Rng::mix(seed, static_cast<uint64_t>(s)), setting);
      point.mean_test_mse += model.fitted.mse(test.xs, test.ys);
      point.mean_test_alignment +=
          meanCalibratedAlignment(records, gold, test_keep, &model);
    }
    point.mean_test_mse /= static_cast<double>(n_seeds);
    point.mean_test_alignment /= static_cast<double>(n_seeds);
    curve.push_back(point);
  }
  return curve;
}

CrossDatasetReport crossDatasetCalibrate(
    std::span<const ElicitationRecord> records, const Dataset& world,
    const SplitAssignment& splits, const std::string& holdout, uint64_t seed) {
  std::set<std::string> datasets;
  for (const auto& q : world.questions) datasets.insert(q.dataset);
  if (!datasets.count(holdout)) {
    raise(Errc::TooFewDatasets,
          "holdout dataset '" + holdout + "' is not present");
  }
  if (datasets.size() < 2) {
    raise(Errc::TooFewDatasets, "need at least 2 source datasets");
  }

  std::unordered_set<std::string> holdout_questions;
  std::unordered_set<std::string> holdout_test;
  for (const auto& q : world.questions) {
    if (q.dataset != holdout) continue;
    holdout_questions.insert(q.id);
    if (splits.of(q.id) == Split::Test) holdout_test.insert(q.id);
  }

  // Sources contribute their full question sets; their dev-split questions
  // drive model selection and the rest train the regressor.
  TrainingPairs train;
  TrainingPairs dev;
  for (const auto& record : records) {
    if (holdout_questions.count(record.key.question_id)) continue;
    const GoldEntry* entry =
        world.gold.find(record.key.question_id, record.key.group);
    if (!entry) {
      raise(Errc::MissingGold,
            "no gold entry for question '" + record.key.question_id + "'");
    }
    TrainingPairs* sink =
        splits.of(record.key.question_id) == Split::Dev ? &dev : &train;
    appendRecordPairs(record, *entry, sink);
  }
  if (train.xs.empty() || dev.xs.empty()) {
    raise(Errc::EmptySelection, "no source-dataset records");
  }

  SettingId setting;
  if (!records.empty() && records.front().key.setting) {
    setting.model_id = records.front().key.setting->model_id;
    setting.method = records.front().key.setting->method;
    setting.kind = records.front().key.setting->kind;
  }
  setting.dataset = holdout;

  CrossDatasetReport report;
  report.model = trainCalibrator(train, dev, seed, setting);
  report.model.out_of_domain = true;

  size_t n = 0;
  double pre = 0.0;
  double post = 0.0;
  for (const auto& record : records) {
    if (!holdout_test.count(record.key.question_id)) continue;
    const GoldEntry* entry =
        world.gold.find(record.key.question_id, record.key.group);
    if (!entry) continue;
    pre += opinionAlignment(record.distribution, entry->distribution);
    post += opinionAlignment(applyCalibration(report.model, record.distribution),
                             entry->distribution);
    ++n;
  }
  if (n == 0) raise(Errc::EmptySelection, "no holdout test records");
  report.uncalibrated_alignment = pre / static_cast<double>(n);
  report.calibrated_alignment = post / static_cast<double>(n);
  report.n_rows = n;
  return report;
}

void saveCalibrationModel(const CalibrationModel& model,
                          const std::string& dir) {
  json j;
  j["schema"] = 1;
  j["dataset"] = model.setting.dataset;
  j["model_id"] = model.setting.model_id;
  j["method"] = methodName(model.setting.method);
  j["prompt_kind"] = promptKindName(model.setting.kind);
  j["n_train_questions"] = model.n_train_questions;
  j["train_question_ids"] = model.train_question_ids;
  j["out_of_domain"] = model.out_of_domain;
  json candidates = json::array();
  for (const auto& c : model.candidates) {
    json entry;
    entry["spec"] = c.spec.name();
    if (std::isinf(c.dev_mse)) {
      entry["dev_mse"] = nullptr;  // infeasible candidate
    } else {
      entry["dev_mse"] = c.dev_mse;
    }
    candidates.push_back(std::move(entry));
  }
  j["candidates"] = std::move(candidates);
  j["chosen_index"] = model.chosen_index;
  j["chosen_spec"] = model.candidates[model.chosen_index].spec.name();
  j["regressor"] = json::parse(model.fitted.toJson());
  writeFile(dir + "/" + model.setting.registryName() + ".json",
            j.dump(1) + "\n");
}

CalibrationModel loadCalibrationModel(const std::string& path) {
  json j = json::parse(readFile(path), nullptr, false);
  if (j.is_discarded()) raise(Errc::SchemaError, "'" + path + "' is not JSON");
  CalibrationModel model;
  try {
    model.setting.dataset = j.at("dataset").get<std::string>();
    model.setting.model_id = j.at("model_id").get<std::string>();
    auto method = methodFromName(j.at("method").get<std::string>());
    auto kind = promptKindFromName(j.at("prompt_kind").get<std::string>());
    if (!method || !kind) raise(Errc::SchemaError, "bad setting in " + path);
    model.setting.method = *method;
    model.setting.kind = *kind;
    model.n_train_questions = j.at("n_train_questions").get<int>();
    model.train_question_ids =
        j.at("train_question_ids").get<std::vector<std::string>>();
    model.out_of_domain = j.value("out_of_domain", false);
    model.chosen_index = j.at("chosen_index").get<size_t>();
    for (const auto& c : j.at("candidates")) {
      CandidateReport report;
      // Spec parameters ride along only as display names; the fitted
      // regressor below carries the authoritative chosen spec.
      report.dev_mse = c.at("dev_mse").is_null()
                           ? std::numeric_limits<double>::infinity()
                           : c.at("dev_mse").get<double>();
      model.candidates.push_back(std::move(report));
    }
    model.fitted = FittedRegressor::fromJson(j.at("regressor").dump());
    if (model.chosen_index >= model.candidates.size()) {
      raise(Errc::SchemaError, "chosen_index out of range in " + path);
    }
    model.candidates[model.chosen_index].spec = model.fitted.spec();
  } catch (const json::exception& e) {
    raise(Errc::SchemaError, "'" + path + "': " + e.what());
  }
  return model;
}

}  // namespace distalign
