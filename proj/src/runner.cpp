// Copyright 2026 The dist-align Authors
// SPDX-License-Identifier: Apache-2.0

#include "distalign/runner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "distalign/pool.hpp"
#include "distalign/rng.hpp"
#include "distalign/tomlite.hpp"
#include "ioutil.hpp"

namespace distalign {

using nlohmann::json;

void ExperimentConfig::validate() const {
  if (datasets.empty()) raise(Errc::InvalidArgument, "no datasets configured");
  if (provider_paths.empty()) {
    raise(Errc::InvalidArgument, "no providers configured");
  }
  if (methods.empty()) raise(Errc::InvalidArgument, "no methods configured");
  if (prompt_kinds.empty()) {
    raise(Errc::InvalidArgument, "no prompt kinds configured");
  }
  if (workers < 1) raise(Errc::InvalidArgument, "workers must be >= 1");
  if (!(alpha > 0.0 && alpha < 1.0)) {
    raise(Errc::InvalidArgument, "alpha must lie in (0,1)");
  }
  if (min_supervision_seeds < 1) {
    raise(Errc::InvalidArgument, "min_supervision_seeds must be >= 1");
  }
}

ExperimentConfig ExperimentConfig::fromTomlFile(const std::string& path) {
  TomlTable t = TomlTable::parseFile(path);
  ExperimentConfig config;
  std::vector<std::string> questions = t.getStringArrayOr("experiment.questions");
  std::vector<std::string> respondents =
      t.getStringArrayOr("experiment.respondents");
  if (questions.size() != respondents.size()) {
    raise(Errc::SchemaError,
          path + ": questions and respondents arrays must pair up");
  }
  int min_group =
      static_cast<int>(t.getIntOr("experiment.min_group_count", 20));
  for (size_t i = 0; i < questions.size(); ++i) {
    config.datasets.push_back({questions[i], respondents[i], min_group});
  }
  config.provider_paths = t.getStringArrayOr("experiment.providers");
  for (const auto& name : t.getStringArrayOr("experiment.methods")) {
    auto method = methodFromName(name);
    if (!method) raise(Errc::SchemaError, path + ": unknown method '" + name + "'");
    config.methods.push_back(*method);
  }
  for (const auto& name : t.getStringArrayOr("experiment.prompt_kinds")) {
    auto kind = promptKindFromName(name);
    if (!kind) {
      raise(Errc::SchemaError, path + ": unknown prompt kind '" + name + "'");
    }
    config.prompt_kinds.push_back(*kind);
  }
  config.seed = static_cast<uint64_t>(t.getIntOr("experiment.seed", 42));
  config.out_dir = t.getStringOr("experiment.out", "out");
  config.prompts_dir = t.getStringOr("experiment.prompts_dir", "");
  for (int64_t s : t.getIntArrayOr("experiment.min_supervision")) {
    config.min_supervision_sizes.push_back(static_cast<int>(s));
  }
  config.min_supervision_seeds =
      static_cast<int>(t.getIntOr("experiment.min_supervision_seeds", 10));
  config.holdout = t.getStringOr("experiment.holdout", "");
  config.workers = static_cast<int>(t.getIntOr("experiment.workers", 4));
  config.per_group_calibration =
      t.getBoolOr("experiment.per_group_calibration", false);
  config.alpha = t.getFloatOr("experiment.alpha", 0.05);
  config.validate();
  return config;
}

namespace {

struct RowScore {
  std::string question_id;
  GroupKey group;
  double uncalibrated = 0.0;
  double calibrated = 0.0;
};

/// Evaluates one cell's records on the test split with the given model.
void evaluateCell(CellResult& cell, std::span<const ElicitationRecord> records,
                  const GoldTable& gold, const SplitAssignment& splits,
                  const CalibrationModel& model) {
  std::unordered_set<std::string> train_ids(model.train_question_ids.begin(),
                                            model.train_question_ids.end());
  std::vector<RowScore> rows;
  std::set<std::string> questions;
  for (const auto& record : records) {
    if (splits.of(record.key.question_id) != Split::Test) continue;
    if (train_ids.count(record.key.question_id)) {
      raise(Errc::Internal, "test question '" + record.key.question_id +
                                "' leaked into calibration training");
    }
    const GoldEntry* entry = gold.find(record.key.question_id, record.key.group);
    if (!entry) continue;
    RowScore row;
    row.question_id = record.key.question_id;
    row.group = record.key.group;
    row.uncalibrated =
        opinionAlignment(record.distribution, entry->distribution);
    row.calibrated = opinionAlignment(
        applyCalibration(model, record.distribution), entry->distribution);
    questions.insert(row.question_id);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) {
    cell.error = "no test rows";
    return;
  }

  std::vector<double> uncal;
  std::vector<double> cal;
  uncal.reserve(rows.size());
  cal.reserve(rows.size());
  for (const auto& row : rows) {
    uncal.push_back(row.uncalibrated);
    cal.push_back(row.calibrated);
  }
  cell.n_rows = static_cast<int>(rows.size());
  cell.n_questions = static_cast<int>(questions.size());
  auto [mu_u, sd_u] = summarize(uncal);
  auto [mu_c, sd_c] = summarize(cal);
  cell.uncalibrated = mu_u;
  cell.calibrated = mu_c;
  cell.uncalibrated_std = sd_u;
  cell.calibrated_std = sd_c;
  if (rows.size() >= 2) {
    cell.test = pairedTTest(cal, uncal, 1);
    cell.has_test = true;
  }

  // Per-group rows.
  std::map<GroupKey, std::vector<const RowScore*>> by_group;
  for (const auto& row : rows) by_group[row.group].push_back(&row);
  for (const auto& [group, group_rows] : by_group) {
    GroupRow out;
    out.group = group;
    out.n_questions = static_cast<int>(group_rows.size());
    std::vector<double> gu;
    std::vector<double> gc;
    for (const RowScore* row : group_rows) {
      gu.push_back(row->uncalibrated);
      gc.push_back(row->calibrated);
    }
    out.uncalibrated = summarize(gu).first;
    out.calibrated = summarize(gc).first;
    if (gu.size() >= 2) {
      out.test = pairedTTest(gc, gu, 1);
      out.has_test = true;
    }
    cell.groups.push_back(std::move(out));
  }
}

/// Research path: retrain the grid on one group's own pairs and score that
/// group's test rows with it.
void perGroupCalibration(CellResult& cell,
                         std::span<const ElicitationRecord> records,
                         const GoldTable& gold, const SplitAssignment& splits,
                         uint64_t seed) {
  for (auto& group_row : cell.groups) {
    std::vector<ElicitationRecord> subset;
    for (const auto& record : records) {
      if (record.key.group == group_row.group) subset.push_back(record);
    }
    try {
      TrainingPairs train = buildPairs(subset, gold, splits, Split::Train);
      TrainingPairs dev = buildPairs(subset, gold, splits, Split::Dev);
      CalibrationModel model = trainCalibrator(train, dev, seed, cell.setting);
      double total = 0.0;
      size_t n = 0;
      for (const auto& record : subset) {
        if (splits.of(record.key.question_id) != Split::Test) continue;
        const GoldEntry* entry =
            gold.find(record.key.question_id, record.key.group);
        if (!entry) continue;
        total += opinionAlignment(applyCalibration(model, record.distribution),
                                  entry->distribution);
        ++n;
      }
      if (n > 0) {
        group_row.per_group_calibrated = total / static_cast<double>(n);
        group_row.has_per_group_model = true;
      }
    } catch (const Error&) {
      // group too small to carry its own model; row stays pooled-only
    }
  }
}

std::vector<ElicitationRecord> elicitCell(Provider& provider,
                                          const Dataset& world,
                                          const std::string& dataset_tag,
                                          Method method, PromptKind kind,
                                          const PromptTemplates& templates,
                                          int workers, int* n_failed) {
  struct Task {
    const SurveyQuestion* question;
    GroupKey group;
  };
  std::vector<Task> tasks;
  for (const auto& q : world.questions) {
    if (q.dataset != dataset_tag) continue;
    for (const auto& group : world.gold.groupsFor(q.id)) {
      tasks.push_back({&q, group});
    }
  }
  std::vector<std::optional<ElicitationRecord>> slots(tasks.size());
  std::vector<int> discarded(tasks.size(), 0);
  parallelFor(workers, tasks.size(), [&](size_t i) {
    try {
      slots[i] = elicit(provider, *tasks[i].question, tasks[i].group, method,
                        kind, templates);
    } catch (const Error& e) {
      if (e.code() == Errc::AllSamplesDiscarded) {
        discarded[i] = 1;  // drop the record, keep the cell
      } else {
        throw;
      }
    }
  });
  std::vector<ElicitationRecord> records;
  records.reserve(tasks.size());
  int failed = 0;
  for (size_t i = 0; i < tasks.size(); ++i) {
    if (slots[i]) {
      records.push_back(std::move(*slots[i]));
    } else {
      ++failed;
    }
  }
  if (n_failed) *n_failed = failed;
  return records;
}

std::string formatAligned(double value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", value * 100.0);
  return buf;
}

std::string formatFixed(double value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", value);
  return buf;
}

std::string formatP(double value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", value);
  return buf;
}

std::string formatMse(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.8f", value);
  return buf;
}

}  // namespace

void annotateSignificance(AlignmentReport& report) {
  int n_cells = 0;
  int n_groups = 0;
  for (const auto& cell : report.cells) {
    if (!cell.error.empty()) continue;
    if (cell.has_test) ++n_cells;
    for (const auto& group : cell.groups) {
      if (group.has_test) ++n_groups;
    }
  }
  report.n_comparisons_cells = std::max(1, n_cells);
  report.n_comparisons_groups = std::max(1, n_groups);
  for (auto& cell : report.cells) {
    if (cell.has_test) {
      cell.test.n_comparisons = report.n_comparisons_cells;
      cell.test.p_bonferroni =
          std::min(1.0, cell.test.p_value * report.n_comparisons_cells);
    }
    for (auto& group : cell.groups) {
      if (group.has_test) {
        group.test.n_comparisons = report.n_comparisons_groups;
        group.test.p_bonferroni =
            std::min(1.0, group.test.p_value * report.n_comparisons_groups);
      }
    }
  }

  std::vector<double> uncal;
  std::vector<double> cal;
  int improved = 0;
  int std_reduced = 0;
  for (const auto& cell : report.cells) {
    if (!cell.error.empty()) continue;
    uncal.push_back(cell.uncalibrated);
    cal.push_back(cell.calibrated);
    if (cell.calibrated > cell.uncalibrated) ++improved;
    if (cell.calibrated_std <= cell.uncalibrated_std) ++std_reduced;
  }
  if (!uncal.empty()) {
    auto [mu_u, sd_u] = summarize(uncal);
    auto [mu_c, sd_c] = summarize(cal);
    report.mean_uncalibrated = mu_u;
    report.mean_calibrated = mu_c;
    report.mean_improvement = mu_c - mu_u;
    report.across_settings_std_uncalibrated = sd_u;
    report.across_settings_std_calibrated = sd_c;
    report.frac_improved =
        static_cast<double>(improved) / static_cast<double>(uncal.size());
    report.frac_std_reduced =
        static_cast<double>(std_reduced) / static_cast<double>(uncal.size());
  }
}

AlignmentReport runGrid(const ExperimentConfig& config) {
  config.validate();

  // One merged world: dataset identity lives in each question's tag.
  Dataset world;
  std::unordered_set<std::string> seen_ids;
  for (const auto& dc : config.datasets) {
    Dataset loaded =
        loadDataset(dc.questions_path, dc.respondents_path, dc.min_group_count);
    for (auto& q : loaded.questions) {
      if (!seen_ids.insert(q.id).second) {
        raise(Errc::SchemaError, "duplicate question id '" + q.id +
                                     "' across dataset files");
      }
      world.questions.push_back(std::move(q));
    }
    for (const auto& [key, entry] : loaded.gold.entries()) {
      world.gold.put(key.first, key.second, entry.distribution,
                     entry.respondent_count);
    }
    world.respondents_loaded += loaded.respondents_loaded;
  }

  std::set<std::string> dataset_tags;
  for (const auto& q : world.questions) dataset_tags.insert(q.dataset);

  SplitAssignment splits = makeSplits(world.questions, config.seed);
  saveGold(world, config.out_dir + "/gold.json");
  saveSplits(splits, config.out_dir + "/splits.json");

  PromptTemplates templates = config.prompts_dir.empty()
                                  ? PromptTemplates::defaults()
                                  : PromptTemplates::loadDir(config.prompts_dir);

  AlignmentReport report;
  report.alpha = config.alpha;

  struct LooPool {
    SettingId setting;  // dataset left empty until the holdout is applied
    std::vector<ElicitationRecord> records;
  };
  std::map<std::string, LooPool> loo_pools;

  for (const auto& provider_path : config.provider_paths) {
    std::unique_ptr<Provider> provider;
    std::string provider_error;
    std::string model_id = provider_path;
    try {
      ProviderConfig pc = loadProviderConfig(provider_path);
      model_id = pc.model_id;
      provider = makeProvider(pc);
    } catch (const Error& e) {
      provider_error = e.what();
    }

    for (const auto& tag : dataset_tags) {
      for (Method method : config.methods) {
        for (PromptKind kind : config.prompt_kinds) {
          CellResult cell;
          cell.setting = SettingId{tag, model_id, method, kind};
          if (!provider_error.empty()) {
            cell.error = provider_error;
            report.cells.push_back(std::move(cell));
            continue;
          }
          try {
            int n_failed = 0;
            std::vector<ElicitationRecord> records =
                elicitCell(*provider, world, tag, method, kind, templates,
                           config.workers, &n_failed);
            if (n_failed > 0) {
              logWarn(cell.setting.registryName() + ": dropped " +
                      std::to_string(n_failed) +
                      " records with no parsable samples");
            }
            if (records.empty()) {
              cell.error = "every record was discarded";
              report.cells.push_back(std::move(cell));
              continue;
            }
            saveRecords(records, config.out_dir + "/elicited/" +
                                     cell.setting.registryName() + ".jsonl");

            uint64_t cell_seed = Rng::mix(
                config.seed, Rng::hashString(cell.setting.registryName()));
            TrainingPairs train = buildPairs(records, world.gold, splits,
                                             Split::Train);
            TrainingPairs dev = buildPairs(records, world.gold, splits,
                                           Split::Dev);
            CalibrationModel model =
                trainCalibrator(train, dev, cell_seed, cell.setting);
            saveCalibrationModel(model, config.out_dir + "/models");
            cell.chosen_spec = model.fitted.spec().name();
            cell.chosen_dev_mse = model.chosenDevMse();

            evaluateCell(cell, records, world.gold, splits, model);
            if (config.per_group_calibration && cell.error.empty()) {
              perGroupCalibration(cell, records, world.gold, splits, cell_seed);
            }
            if (!config.min_supervision_sizes.empty() && cell.error.empty()) {
              for (const auto& point : minimalSupervisionCurve(
                       records, world.gold, splits,
                       config.min_supervision_sizes,
                       config.min_supervision_seeds, cell_seed,
                       cell.setting)) {
                cell.supervision.push_back({point.effective_size,
                                            point.mean_test_mse,
                                            point.mean_test_alignment});
              }
            }
            if (!config.holdout.empty()) {
              std::string pool_key = model_id + "\x1f" + methodName(method) +
                                     "\x1f" + promptKindName(kind);
              LooPool& pool = loo_pools[pool_key];
              pool.setting = SettingId{"", model_id, method, kind};
              pool.records.insert(pool.records.end(), records.begin(),
                                  records.end());
            }
          } catch (const Error& e) {
            cell.error = e.what();
          }
          report.cells.push_back(std::move(cell));
        }
      }
    }
  }

  if (!config.holdout.empty()) {
    for (auto& [key, pool] : loo_pools) {
      try {
        CrossDatasetReport loo = crossDatasetCalibrate(
            pool.records, world, splits, config.holdout,
            Rng::mix(config.seed, Rng::hashString("loo" + key)));
        saveCalibrationModel(loo.model, config.out_dir + "/models/loo");
        CrossDatasetRow row;
        row.setting = loo.model.setting;
        row.uncalibrated = loo.uncalibrated_alignment;
        row.calibrated = loo.calibrated_alignment;
        row.n_rows = static_cast<int>(loo.n_rows);
        report.cross_dataset.push_back(std::move(row));
      } catch (const Error& e) {
        logWarn("cross-dataset run failed for " + key + ": " + e.what());
      }
    }
  }

  annotateSignificance(report);
  return report;
}

namespace {

void writeAlignmentCsv(const AlignmentReport& report, const std::string& path) {
  std::string out = "# alignment values are percentages; bonferroni n=" +
                    std::to_string(report.n_comparisons_cells) +
                    "; alpha=" + formatP(report.alpha) + "\n";
  out +=
      "dataset,model,method,prompt_kind,n_questions,n_rows,uncalibrated,"
      "calibrated,improvement,t_statistic,p_value,p_bonferroni,significant,"
      "chosen_spec\n";
  for (const auto& cell : report.cells) {
    if (!cell.error.empty()) continue;
    out += cell.setting.dataset + "," + cell.setting.model_id + "," +
           methodName(cell.setting.method) + "," +
           promptKindName(cell.setting.kind) + "," +
           std::to_string(cell.n_questions) + "," +
           std::to_string(cell.n_rows) + "," + formatAligned(cell.uncalibrated) +
           "," + formatAligned(cell.calibrated) + "," +
           formatAligned(cell.calibrated - cell.uncalibrated) + ",";
    if (cell.has_test) {
      out += formatFixed(cell.test.t_statistic) + "," +
             formatP(cell.test.p_value) + "," +
             formatP(cell.test.p_bonferroni) + "," +
             (cell.test.significant(report.alpha) ? "1" : "0");
    } else {
      out += ",,,";
    }
    out += "," + cell.chosen_spec + "\n";
  }
  writeFile(path, out);
}

void writePerGroupCsv(const AlignmentReport& report, const std::string& path) {
  std::string out = "# alignment values are percentages; bonferroni n=" +
                    std::to_string(report.n_comparisons_groups) +
                    "; alpha=" + formatP(report.alpha) + "\n";
  out +=
      "dataset,model,method,prompt_kind,attribute,value,n_questions,"
      "uncalibrated,calibrated,improvement,p_value,p_bonferroni,significant,"
      "per_group_calibrated\n";
  for (const auto& cell : report.cells) {
    if (!cell.error.empty()) continue;
    for (const auto& group : cell.groups) {
      out += cell.setting.dataset + "," + cell.setting.model_id + "," +
             methodName(cell.setting.method) + "," +
             promptKindName(cell.setting.kind) + "," + group.group.attribute +
             "," + group.group.value + "," +
             std::to_string(group.n_questions) + "," +
             formatAligned(group.uncalibrated) + "," +
             formatAligned(group.calibrated) + "," +
             formatAligned(group.calibrated - group.uncalibrated) + ",";
      if (group.has_test) {
        out += formatP(group.test.p_value) + "," +
               formatP(group.test.p_bonferroni) + "," +
               (group.test.significant(report.alpha) ? "1" : "0");
      } else {
        out += ",,";
      }
      out += ",";
      if (group.has_per_group_model) {
        out += formatAligned(group.per_group_calibrated);
      }
      out += "\n";
    }
  }
  writeFile(path, out);
}

void writeStdVsAlignmentCsv(const AlignmentReport& report,
                            const std::string& path) {
  std::string out =
      "dataset,model,method,prompt_kind,phase,mean_alignment,std_alignment\n";
  for (const auto& cell : report.cells) {
    if (!cell.error.empty()) continue;
    std::string prefix = cell.setting.dataset + "," + cell.setting.model_id +
                         "," + methodName(cell.setting.method) + "," +
                         promptKindName(cell.setting.kind) + ",";
    out += prefix + "uncalibrated," + formatAligned(cell.uncalibrated) + "," +
           formatAligned(cell.uncalibrated_std) + "\n";
    out += prefix + "calibrated," + formatAligned(cell.calibrated) + "," +
           formatAligned(cell.calibrated_std) + "\n";
  }
  writeFile(path, out);
}

void writeMinSupervisionCsv(const AlignmentReport& report,
                            const std::string& path) {
  std::string out =
      "dataset,model,method,prompt_kind,size,mean_test_mse,"
      "mean_test_alignment\n";
  for (const auto& cell : report.cells) {
    if (!cell.error.empty()) continue;
    for (const auto& row : cell.supervision) {
      out += cell.setting.dataset + "," + cell.setting.model_id + "," +
             methodName(cell.setting.method) + "," +
             promptKindName(cell.setting.kind) + "," +
             std::to_string(row.size) + "," + formatMse(row.mean_test_mse) +
             "," + formatAligned(row.mean_test_alignment) + "\n";
    }
  }
  writeFile(path, out);
}

void writeCrossDatasetCsv(const AlignmentReport& report,
                          const std::string& path) {
  std::string out =
      "holdout,model,method,prompt_kind,n_rows,uncalibrated,calibrated,"
      "improvement\n";
  for (const auto& row : report.cross_dataset) {
    out += row.setting.dataset + "," + row.setting.model_id + "," +
           methodName(row.setting.method) + "," +
           promptKindName(row.setting.kind) + "," + std::to_string(row.n_rows) +
           "," + formatAligned(row.uncalibrated) + "," +
           formatAligned(row.calibrated) + "," +
           formatAligned(row.calibrated - row.uncalibrated) + "\n";
  }
  writeFile(path, out);
}

void writeSummaryJson(const AlignmentReport& report, const std::string& path) {
  json j;
  j["schema"] = 1;
  j["alpha"] = report.alpha;
  j["n_comparisons_cells"] = report.n_comparisons_cells;
  j["n_comparisons_groups"] = report.n_comparisons_groups;
  int ok = 0;
  json failures = json::array();
  for (const auto& cell : report.cells) {
    if (cell.error.empty()) {
      ++ok;
    } else {
      failures.push_back({{"setting", cell.setting.registryName()},
                          {"error", cell.error}});
    }
  }
  j["n_settings"] = ok;
  j["failures"] = std::move(failures);
  j["mean_uncalibrated"] = report.mean_uncalibrated;
  j["mean_calibrated"] = report.mean_calibrated;
  j["mean_improvement"] = report.mean_improvement;
  j["frac_improved"] = report.frac_improved;
  j["frac_std_reduced"] = report.frac_std_reduced;
  j["across_settings_std_uncalibrated"] =
      report.across_settings_std_uncalibrated;
  j["across_settings_std_calibrated"] = report.across_settings_std_calibrated;
  writeFile(path, j.dump(1) + "\n");
}

json testToJson(const PairedTestResult& test) {
  json j;
  j["t"] = std::isfinite(test.t_statistic)
               ? json(test.t_statistic)
               : json(test.t_statistic > 0 ? "inf" : "-inf");
  j["df"] = test.degrees_of_freedom;
  j["p"] = test.p_value;
  j["p_bonferroni"] = test.p_bonferroni;
  j["n_comparisons"] = test.n_comparisons;
  j["zero_variance"] =
      test.outcome == PairedTestResult::Outcome::ZeroVarianceDifferences;
  return j;
}

PairedTestResult testFromJson(const json& j) {
  PairedTestResult test;
  if (j.at("t").is_string()) {
    test.t_statistic = j.at("t").get<std::string>() == "inf"
                           ? std::numeric_limits<double>::infinity()
                           : -std::numeric_limits<double>::infinity();
  } else {
    test.t_statistic = j.at("t").get<double>();
  }
  test.degrees_of_freedom = j.at("df").get<int>();
  test.p_value = j.at("p").get<double>();
  test.p_bonferroni = j.at("p_bonferroni").get<double>();
  test.n_comparisons = j.at("n_comparisons").get<int>();
  test.outcome = j.at("zero_variance").get<bool>()
                     ? PairedTestResult::Outcome::ZeroVarianceDifferences
                     : PairedTestResult::Outcome::Ok;
  return test;
}

}  // namespace

std::string reportToJson(const AlignmentReport& report) {
  json j;
  j["schema"] = 1;
  j["alpha"] = report.alpha;
  j["n_comparisons_cells"] = report.n_comparisons_cells;
  j["n_comparisons_groups"] = report.n_comparisons_groups;
  j["mean_uncalibrated"] = report.mean_uncalibrated;
  j["mean_calibrated"] = report.mean_calibrated;
  j["mean_improvement"] = report.mean_improvement;
  j["frac_improved"] = report.frac_improved;
  j["frac_std_reduced"] = report.frac_std_reduced;
  j["across_settings_std_uncalibrated"] =
      report.across_settings_std_uncalibrated;
  j["across_settings_std_calibrated"] = report.across_settings_std_calibrated;
  json cells = json::array();
  for (const auto& cell : report.cells) {
    json c;
    c["dataset"] = cell.setting.dataset;
    c["model_id"] = cell.setting.model_id;
    c["method"] = methodName(cell.setting.method);
    c["prompt_kind"] = promptKindName(cell.setting.kind);
    c["error"] = cell.error;
    c["n_rows"] = cell.n_rows;
    c["n_questions"] = cell.n_questions;
    c["uncalibrated"] = cell.uncalibrated;
    c["calibrated"] = cell.calibrated;
    c["uncalibrated_std"] = cell.uncalibrated_std;
    c["calibrated_std"] = cell.calibrated_std;
    c["chosen_spec"] = cell.chosen_spec;
    c["chosen_dev_mse"] = cell.chosen_dev_mse;
    if (cell.has_test) c["test"] = testToJson(cell.test);
    json groups = json::array();
    for (const auto& group : cell.groups) {
      json g;
      g["attribute"] = group.group.attribute;
      g["value"] = group.group.value;
      g["n_questions"] = group.n_questions;
      g["uncalibrated"] = group.uncalibrated;
      g["calibrated"] = group.calibrated;
      if (group.has_test) g["test"] = testToJson(group.test);
      if (group.has_per_group_model) {
        g["per_group_calibrated"] = group.per_group_calibrated;
      }
      groups.push_back(std::move(g));
    }
    c["groups"] = std::move(groups);
    json supervision = json::array();
    for (const auto& row : cell.supervision) {
      supervision.push_back({{"size", row.size},
                             {"mean_test_mse", row.mean_test_mse},
                             {"mean_test_alignment", row.mean_test_alignment}});
    }
    c["supervision"] = std::move(supervision);
    cells.push_back(std::move(c));
  }
  j["cells"] = std::move(cells);
  json loo = json::array();
  for (const auto& row : report.cross_dataset) {
    loo.push_back({{"holdout", row.setting.dataset},
                   {"model_id", row.setting.model_id},
                   {"method", methodName(row.setting.method)},
                   {"prompt_kind", promptKindName(row.setting.kind)},
                   {"n_rows", row.n_rows},
                   {"uncalibrated", row.uncalibrated},
                   {"calibrated", row.calibrated}});
  }
  j["cross_dataset"] = std::move(loo);
  return j.dump(1) + "\n";
}

AlignmentReport reportFromJson(const std::string& text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) raise(Errc::SchemaError, "report is not valid JSON");
  AlignmentReport report;
  try {
    report.alpha = j.at("alpha").get<double>();
    report.n_comparisons_cells = j.at("n_comparisons_cells").get<int>();
    report.n_comparisons_groups = j.at("n_comparisons_groups").get<int>();
    report.mean_uncalibrated = j.at("mean_uncalibrated").get<double>();
    report.mean_calibrated = j.at("mean_calibrated").get<double>();
    report.mean_improvement = j.at("mean_improvement").get<double>();
    report.frac_improved = j.at("frac_improved").get<double>();
    report.frac_std_reduced = j.at("frac_std_reduced").get<double>();
    report.across_settings_std_uncalibrated =
        j.at("across_settings_std_uncalibrated").get<double>();
    report.across_settings_std_calibrated =
        j.at("across_settings_std_calibrated").get<double>();
    for (const auto& c : j.at("cells")) {
      CellResult cell;
      cell.setting.dataset = c.at("dataset").get<std::string>();
      cell.setting.model_id = c.at("model_id").get<std::string>();
      cell.setting.method = *methodFromName(c.at("method").get<std::string>());
      cell.setting.kind =
          *promptKindFromName(c.at("prompt_kind").get<std::string>());
      cell.error = c.at("error").get<std::string>();
      cell.n_rows = c.at("n_rows").get<int>();
      cell.n_questions = c.at("n_questions").get<int>();
      cell.uncalibrated = c.at("uncalibrated").get<double>();
      cell.calibrated = c.at("calibrated").get<double>();
      cell.uncalibrated_std = c.at("uncalibrated_std").get<double>();
      cell.calibrated_std = c.at("calibrated_std").get<double>();
      cell.chosen_spec = c.at("chosen_spec").get<std::string>();
      cell.chosen_dev_mse = c.at("chosen_dev_mse").get<double>();
      if (c.contains("test")) {
        cell.test = testFromJson(c.at("test"));
        cell.has_test = true;
      }
      for (const auto& g : c.at("groups")) {
        GroupRow group;
        group.group.attribute = g.at("attribute").get<std::string>();
        group.group.value = g.at("value").get<std::string>();
        group.n_questions = g.at("n_questions").get<int>();
        group.uncalibrated = g.at("uncalibrated").get<double>();
        group.calibrated = g.at("calibrated").get<double>();
        if (g.contains("test")) {
          group.test = testFromJson(g.at("test"));
          group.has_test = true;
        }
        if (g.contains("per_group_calibrated")) {
          group.per_group_calibrated = g.at("per_group_calibrated").get<double>();
          group.has_per_group_model = true;
        }
        cell.groups.push_back(std::move(group));
      }
      for (const auto& s : c.at("supervision")) {
        cell.supervision.push_back({s.at("size").get<int>(),
                                    s.at("mean_test_mse").get<double>(),
                                    s.at("mean_test_alignment").get<double>()});
      }
      report.cells.push_back(std::move(cell));
    }
    for (const auto& r : j.at("cross_dataset")) {
      CrossDatasetRow row;
      row.setting.dataset = r.at("holdout").get<std::string>();
      row.setting.model_id = r.at("model_id").get<std::string>();
      row.setting.method = *methodFromName(r.at("method").get<std::string>());
      row.setting.kind =
          *promptKindFromName(r.at("prompt_kind").get<std::string>());
      row.n_rows = r.at("n_rows").get<int>();
      row.uncalibrated = r.at("uncalibrated").get<double>();
      row.calibrated = r.at("calibrated").get<double>();
      report.cross_dataset.push_back(std::move(row));
    }
  } catch (const json::exception& e) {
    raise(Errc::SchemaError, std::string("report JSON: ") + e.what());
  }
  return report;
}

void emitReports(const AlignmentReport& report, const std::string& out_dir) {
  writeAlignmentCsv(report, out_dir + "/alignment.csv");
  writePerGroupCsv(report, out_dir + "/per_group.csv");
  writeStdVsAlignmentCsv(report, out_dir + "/std_vs_alignment.csv");
  writeMinSupervisionCsv(report, out_dir + "/min_supervision.csv");
  writeSummaryJson(report, out_dir + "/summary.json");
  writeFile(out_dir + "/report.json", reportToJson(report));
  if (!report.cross_dataset.empty()) {
    writeCrossDatasetCsv(report, out_dir + "/cross_dataset.csv");
  }
}

// --- CLI entry points ---

void cmdIngest(const std::string& questions_path,
               const std::string& respondents_path, int min_group_count,
               const std::string& out_gold) {
  Dataset dataset =
      loadDataset(questions_path, respondents_path, min_group_count);
  saveGold(dataset, out_gold);
  logInfo("ingested " + std::to_string(dataset.respondents_loaded) +
          " respondents over " + std::to_string(dataset.questions.size()) +
          " questions into '" + out_gold + "' (" +
          std::to_string(dataset.gold.size()) + " gold entries)");
}

void cmdSynth(const std::string& spec_path, const std::string& out_dir) {
  SyntheticSpec spec = spec_path.empty() ? SyntheticSpec::defaults()
                                         : SyntheticSpec::fromTomlFile(spec_path);
  SyntheticWorld world = generateWorld(spec);
  writeWorld(world, out_dir);
  logInfo("wrote synthetic world (" + std::to_string(world.questions.size()) +
          " questions, " + std::to_string(world.respondents.size()) +
          " respondents) to '" + out_dir + "'");
}

void cmdElicit(const std::string& gold_path, const std::string& provider_path,
               const std::string& method_name, const std::string& prompt_kind,
               const std::string& prompts_dir, int workers,
               const std::string& out_path) {
  auto method = methodFromName(method_name);
  if (!method) raise(Errc::InvalidArgument, "unknown method '" + method_name + "'");
  auto kind = promptKindFromName(prompt_kind);
  if (!kind) {
    raise(Errc::InvalidArgument, "unknown prompt kind '" + prompt_kind + "'");
  }
  Dataset world = loadGold(gold_path);
  PromptTemplates templates = prompts_dir.empty()
                                  ? PromptTemplates::defaults()
                                  : PromptTemplates::loadDir(prompts_dir);
  std::unique_ptr<Provider> provider =
      makeProvider(loadProviderConfig(provider_path));

  std::set<std::string> tags;
  for (const auto& q : world.questions) tags.insert(q.dataset);
  std::vector<ElicitationRecord> all_records;
  for (const auto& tag : tags) {
    int n_failed = 0;
    std::vector<ElicitationRecord> records = elicitCell(
        *provider, world, tag, *method, *kind, templates, workers, &n_failed);
    if (n_failed > 0) {
      logWarn(tag + ": dropped " + std::to_string(n_failed) +
              " records with no parsable samples");
    }
    all_records.insert(all_records.end(),
                       std::make_move_iterator(records.begin()),
                       std::make_move_iterator(records.end()));
  }
  saveRecords(all_records, out_path);
  logInfo("wrote " + std::to_string(all_records.size()) + " records to '" +
          out_path + "'");
}

void cmdCalibrate(const std::string& elicited_path,
                  const std::string& gold_path, const std::string& splits_path,
                  uint64_t seed, const std::string& sizes_csv,
                  const std::string& holdout, const std::string& out_dir) {
  Dataset world = loadGold(gold_path);
  std::vector<ElicitationRecord> records = loadRecords(elicited_path);
  if (records.empty()) raise(Errc::EmptySelection, "no elicited records");

  SplitAssignment splits;
  if (splits_path.empty()) {
    splits = makeSplits(world.questions, seed);
    saveSplits(splits, out_dir + "/splits.json");
    logInfo("derived splits from seed " + std::to_string(seed) +
            "; saved to '" + out_dir + "/splits.json'");
  } else {
    splits = loadSplits(splits_path);
  }

  std::vector<int> sizes;
  if (!sizes_csv.empty()) {
    std::istringstream in(sizes_csv);
    std::string item;
    while (std::getline(in, item, ',')) {
      try {
        sizes.push_back(std::stoi(item));
      } catch (const std::exception&) {
        raise(Errc::InvalidArgument, "bad supervision size '" + item + "'");
      }
    }
  }

  // One model per setting present in the records; the dataset axis comes
  // from each record's question.
  std::map<SettingId, std::vector<ElicitationRecord>> by_setting;
  for (auto& record : records) {
    SettingId id{record.dataset, record.key.setting->model_id,
                 record.key.setting->method, record.key.setting->kind};
    by_setting[id].push_back(std::move(record));
  }

  std::string supervision_csv =
      "dataset,model,method,prompt_kind,size,mean_test_mse,"
      "mean_test_alignment\n";
  bool any_supervision = false;
  for (const auto& [setting, subset] : by_setting) {
    uint64_t setting_seed = Rng::mix(seed, Rng::hashString(setting.registryName()));
    TrainingPairs train = buildPairs(subset, world.gold, splits, Split::Train);
    TrainingPairs dev = buildPairs(subset, world.gold, splits, Split::Dev);
    CalibrationModel model = trainCalibrator(train, dev, setting_seed, setting);
    saveCalibrationModel(model, out_dir);
    logInfo("trained " + setting.registryName() + ": chose " +
            model.fitted.spec().name());
    if (!sizes.empty()) {
      any_supervision = true;
      for (const auto& point :
           minimalSupervisionCurve(subset, world.gold, splits, sizes, 10,
                                   setting_seed, setting)) {
        supervision_csv += setting.dataset + "," + setting.model_id + "," +
                           methodName(setting.method) + "," +
                           promptKindName(setting.kind) + "," +
                           std::to_string(point.effective_size) + "," +
                           formatMse(point.mean_test_mse) + "," +
                           formatAligned(point.mean_test_alignment) + "\n";
      }
    }
  }
  if (any_supervision) {
    writeFile(out_dir + "/min_supervision.csv", supervision_csv);
  }

  if (!holdout.empty()) {
    std::map<std::string, std::vector<ElicitationRecord>> pools;
    for (const auto& [setting, subset] : by_setting) {
      std::string key = setting.model_id + "\x1f" + methodName(setting.method) +
                        "\x1f" + promptKindName(setting.kind);
      pools[key].insert(pools[key].end(), subset.begin(), subset.end());
    }
    std::string loo_csv =
        "holdout,model,method,prompt_kind,n_rows,uncalibrated,calibrated,"
        "improvement\n";
    for (const auto& [key, pool] : pools) {
      CrossDatasetReport loo = crossDatasetCalibrate(
          pool, world, splits, holdout,
          Rng::mix(seed, Rng::hashString("loo" + key)));
      saveCalibrationModel(loo.model, out_dir + "/loo");
      loo_csv += loo.model.setting.dataset + "," +
                 loo.model.setting.model_id + "," +
                 methodName(loo.model.setting.method) + "," +
                 promptKindName(loo.model.setting.kind) + "," +
                 std::to_string(loo.n_rows) + "," +
                 formatAligned(loo.uncalibrated_alignment) + "," +
                 formatAligned(loo.calibrated_alignment) + "," +
                 formatAligned(loo.calibrated_alignment -
                               loo.uncalibrated_alignment) +
                 "\n";
    }
    writeFile(out_dir + "/cross_dataset.csv", loo_csv);
  }
}

void cmdEvaluate(const std::string& elicited_path, const std::string& gold_path,
                 const std::string& splits_path, const std::string& models_dir,
                 const std::string& out_dir) {
  Dataset world = loadGold(gold_path);
  SplitAssignment splits = loadSplits(splits_path);
  std::vector<ElicitationRecord> records = loadRecords(elicited_path);
  if (records.empty()) raise(Errc::EmptySelection, "no elicited records");

  std::map<SettingId, std::vector<ElicitationRecord>> by_setting;
  for (auto& record : records) {
    SettingId id{record.dataset, record.key.setting->model_id,
                 record.key.setting->method, record.key.setting->kind};
    by_setting[id].push_back(std::move(record));
  }

  AlignmentReport report;
  for (const auto& [setting, subset] : by_setting) {
    CellResult cell;
    cell.setting = setting;
    try {
      CalibrationModel model = loadCalibrationModel(
          models_dir + "/" + setting.registryName() + ".json");
      cell.chosen_spec = model.fitted.spec().name();
      cell.chosen_dev_mse = model.chosenDevMse();
      evaluateCell(cell, subset, world.gold, splits, model);
    } catch (const Error& e) {
      cell.error = e.what();
    }
    report.cells.push_back(std::move(cell));
  }
  annotateSignificance(report);
  emitReports(report, out_dir);
}

void cmdReport(const std::string& report_json_path, const std::string& out_dir) {
  AlignmentReport report = reportFromJson(readFile(report_json_path));
  emitReports(report, out_dir);
}

void cmdRun(const std::string& config_path, const std::string& out_dir_override,
            bool has_seed, uint64_t seed, int workers) {
  ExperimentConfig config = ExperimentConfig::fromTomlFile(config_path);
  if (!out_dir_override.empty()) config.out_dir = out_dir_override;
  if (has_seed) config.seed = seed;
  if (workers > 0) config.workers = workers;
  AlignmentReport report = runGrid(config);
  emitReports(report, config.out_dir);
  int failed = 0;
  for (const auto& cell : report.cells) {
    if (!cell.error.empty()) ++failed;
  }
  logInfo("grid done: " + std::to_string(report.cells.size() - failed) + "/" +
          std::to_string(report.cells.size()) + " settings succeeded; " +
          "mean improvement " +
          formatAligned(report.mean_improvement) + " points");
}

}  // namespace distalign
