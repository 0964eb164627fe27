// Copyright 2026 The dist-align Authors
// SPDX-License-Identifier: Apache-2.0

#include "distalign/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "distalign/rng.hpp"
#include "ioutil.hpp"

namespace distalign {

using nlohmann::json;

void GoldTable::put(const std::string& question_id, const GroupKey& group,
                    OpinionDistribution dist, int64_t count) {
  entries_.insert_or_assign(Key{question_id, group},
                            GoldEntry{std::move(dist), count});
}

const GoldEntry* GoldTable::find(const std::string& question_id,
                                 const GroupKey& group) const {
  auto it = entries_.find(Key{question_id, group});
  return it == entries_.end() ? nullptr : &it->second;
}

std::vector<GroupKey> GoldTable::groupsFor(
    const std::string& question_id) const {
  std::vector<GroupKey> groups;
  auto lo = entries_.lower_bound(Key{question_id, GroupKey{}});
  for (auto it = lo; it != entries_.end() && it->first.first == question_id;
       ++it) {
    groups.push_back(it->first.second);
  }
  // All-respondents first, the rest keep their sorted order.
  auto all = std::find_if(groups.begin(), groups.end(),
                          [](const GroupKey& g) { return g.isAll(); });
  if (all != groups.end()) std::rotate(groups.begin(), all, all + 1);
  return groups;
}

const char* splitName(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Dev: return "dev";
    case Split::Test: return "test";
  }
  return "?";
}

std::optional<Split> splitFromName(std::string_view name) {
  if (name == "train") return Split::Train;
  if (name == "dev") return Split::Dev;
  if (name == "test") return Split::Test;
  return std::nullopt;
}

Split SplitAssignment::of(const std::string& question_id) const {
  auto it = by_question.find(question_id);
  if (it == by_question.end()) {
    raise(Errc::InvalidArgument,
          "question '" + question_id + "' has no split assignment");
  }
  return it->second;
}

std::vector<SurveyQuestion> loadQuestions(const std::string& path) {
  json root = json::parse(readFile(path), nullptr, false);
  if (root.is_discarded() || !root.is_array()) {
    raise(Errc::SchemaError, "'" + path + "' is not a JSON array of questions");
  }
  std::vector<SurveyQuestion> questions;
  questions.reserve(root.size());
  for (size_t i = 0; i < root.size(); ++i) {
    const json& q = root[i];
    try {
      SurveyQuestion question;
      question.id = q.at("id").get<std::string>();
      question.dataset = q.at("dataset").get<std::string>();
      question.category = q.value("category", std::string{});
      question.text = q.at("text").get<std::string>();
      question.choices = q.at("choices").get<std::vector<std::string>>();
      question.validate();
      questions.push_back(std::move(question));
    } catch (const json::exception& e) {
      raise(Errc::SchemaError, "question #" + std::to_string(i) + " in '" +
                                   path + "': " + e.what());
    }
  }
  return questions;
}

namespace {

std::vector<std::string> splitCsvLine(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

std::vector<RespondentRecord> loadRespondentsCsv(const std::string& path) {
  std::istringstream in(readFile(path));
  std::string line;
  if (!std::getline(in, line)) raise(Errc::SchemaError, "empty CSV '" + path + "'");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> header = splitCsvLine(line);
  int qid_col = -1;
  int choice_col = -1;
  for (size_t i = 0; i < header.size(); ++i) {
    if (header[i] == "question_id") qid_col = static_cast<int>(i);
    if (header[i] == "choice_index") choice_col = static_cast<int>(i);
  }
  if (qid_col < 0 || choice_col < 0) {
    raise(Errc::SchemaError,
          "CSV '" + path + "' needs question_id and choice_index columns");
  }
  std::vector<RespondentRecord> records;
  size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields = splitCsvLine(line);
    if (fields.size() != header.size()) {
      raise(Errc::SchemaError, "CSV '" + path + "' line " +
                                   std::to_string(line_no) +
                                   ": wrong field count");
    }
    RespondentRecord record;
    record.question_id = fields[static_cast<size_t>(qid_col)];
    try {
      record.choice_index = std::stoi(fields[static_cast<size_t>(choice_col)]);
    } catch (const std::exception&) {
      raise(Errc::SchemaError, "CSV '" + path + "' line " +
                                   std::to_string(line_no) +
                                   ": choice_index is not an integer");
    }
    for (size_t i = 0; i < header.size(); ++i) {
      if (static_cast<int>(i) == qid_col || static_cast<int>(i) == choice_col) {
        continue;
      }
      if (!fields[i].empty()) record.demographics[header[i]] = fields[i];
    }
    records.push_back(std::move(record));
  }
  return records;
}

}  // namespace

std::vector<RespondentRecord> loadRespondents(const std::string& path) {
  if (path.size() > 4 && path.substr(path.size() - 4) == ".csv") {
    return loadRespondentsCsv(path);
  }
  std::istringstream in(readFile(path));
  std::vector<RespondentRecord> records;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json row = json::parse(line, nullptr, false);
    if (row.is_discarded()) {
      raise(Errc::SchemaError,
            "'" + path + "' line " + std::to_string(line_no) + ": bad JSON");
    }
    try {
      RespondentRecord record;
      record.question_id = row.at("question_id").get<std::string>();
      record.choice_index = row.at("choice_index").get<int>();
      if (row.contains("demographics")) {
        for (const auto& [attr, value] : row.at("demographics").items()) {
          record.demographics[attr] = value.get<std::string>();
        }
      }
      records.push_back(std::move(record));
    } catch (const json::exception& e) {
      raise(Errc::SchemaError, "'" + path + "' line " +
                                   std::to_string(line_no) + ": " + e.what());
    }
  }
  return records;
}

Dataset buildGold(std::vector<SurveyQuestion> questions,
                  const std::vector<RespondentRecord>& respondents,
                  int min_group_count) {
  if (questions.empty()) raise(Errc::EmptyDataset, "no questions");
  if (respondents.empty()) raise(Errc::EmptyDataset, "no respondents");

  std::unordered_map<std::string, const SurveyQuestion*> by_id;
  for (const auto& q : questions) {
    q.validate();
    if (!by_id.emplace(q.id, &q).second) {
      raise(Errc::SchemaError, "duplicate question id '" + q.id + "'");
    }
  }

  // (question, group) -> per-choice counts.
  std::map<GoldTable::Key, std::vector<int64_t>> counts;
  for (size_t i = 0; i < respondents.size(); ++i) {
    const RespondentRecord& r = respondents[i];
    auto it = by_id.find(r.question_id);
    if (it == by_id.end()) {
      raise(Errc::SchemaError, "respondent #" + std::to_string(i) +
                                   ": unknown question '" + r.question_id +
                                   "'");
    }
    const size_t k = it->second->k();
    if (r.choice_index < 1 || static_cast<size_t>(r.choice_index) > k) {
      raise(Errc::SchemaError,
            "respondent #" + std::to_string(i) + ": choice_index " +
                std::to_string(r.choice_index) + " outside [1," +
                std::to_string(k) + "] for question '" + r.question_id + "'");
    }
    auto bump = [&](const GroupKey& group) {
      auto [slot, inserted] =
          counts.try_emplace(GoldTable::Key{r.question_id, group},
                             std::vector<int64_t>(k, 0));
      slot->second[static_cast<size_t>(r.choice_index) - 1] += 1;
    };
    bump(GroupKey::allRespondents());
    for (const auto& [attr, value] : r.demographics) {
      bump(GroupKey{attr, value});
    }
  }

  Dataset dataset;
  dataset.questions = std::move(questions);
  dataset.respondents_loaded = static_cast<int64_t>(respondents.size());
  for (const auto& [key, choice_counts] : counts) {
    int64_t total = 0;
    for (int64_t c : choice_counts) total += c;
    if (!key.second.isAll() && total < min_group_count) {
      logWarn("dropping group (" + key.second.attribute + "=" +
              key.second.value + ") of question '" + key.first + "': only " +
              std::to_string(total) + " respondents (min " +
              std::to_string(min_group_count) + ")");
      continue;
    }
    dataset.gold.put(key.first, key.second,
                     OpinionDistribution::fromCounts(choice_counts), total);
  }
  return dataset;
}

Dataset loadDataset(const std::string& questions_path,
                    const std::string& respondents_path, int min_group_count) {
  return buildGold(loadQuestions(questions_path),
                   loadRespondents(respondents_path), min_group_count);
}

std::vector<int> largestRemainder(int total,
                                  const std::vector<double>& weights) {
  double weight_sum = 0.0;
  for (double w : weights) weight_sum += w;
  std::vector<int> alloc(weights.size(), 0);
  if (weight_sum <= 0.0 || total <= 0) return alloc;

  std::vector<double> fractional(weights.size());
  int assigned = 0;
  for (size_t i = 0; i < weights.size(); ++i) {
    double quota = total * weights[i] / weight_sum;
    alloc[i] = static_cast<int>(std::floor(quota));
    fractional[i] = quota - alloc[i];
    assigned += alloc[i];
  }
  std::vector<size_t> order(weights.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return fractional[a] > fractional[b];
  });
  const int leftover = total - assigned;
  for (int i = 0; i < leftover; ++i) alloc[order[static_cast<size_t>(i)]] += 1;
  return alloc;
}

SplitAssignment makeSplits(const std::vector<SurveyQuestion>& questions,
                           uint64_t seed) {
  constexpr double kProportions[3] = {0.6, 0.2, 0.2};
  constexpr int kMinStratum = 5;

  // (dataset, category) occupancy, deciding which categories stand alone.
  std::map<std::pair<std::string, std::string>, int> category_sizes;
  std::map<std::string, int> dataset_sizes;
  for (const auto& q : questions) {
    category_sizes[{q.dataset, q.category}] += 1;
    dataset_sizes[q.dataset] += 1;
  }
  for (const auto& [dataset, n] : dataset_sizes) {
    if (n < kMinStratum) {
      raise(Errc::TooFewQuestions, "dataset '" + dataset + "' has only " +
                                       std::to_string(n) +
                                       " questions; need at least 5");
    }
  }

  // Strata keyed (dataset, category-or-empty), ids sorted before shuffling
  // so the result is a pure function of the id set and the seed.
  std::map<std::pair<std::string, std::string>, std::vector<std::string>>
      strata;
  for (const auto& q : questions) {
    std::string category =
        category_sizes[{q.dataset, q.category}] >= kMinStratum ? q.category
                                                               : std::string{};
    strata[{q.dataset, category}].push_back(q.id);
  }

  SplitAssignment result;
  result.seed = seed;
  Rng rng(Rng::mix(seed, Rng::hashString("splits")));

  std::string current_dataset;
  int remaining[3] = {0, 0, 0};
  for (auto& [key, ids] : strata) {
    if (key.first != current_dataset) {
      current_dataset = key.first;
      std::vector<int> totals =
          largestRemainder(dataset_sizes[current_dataset],
                           {kProportions[0], kProportions[1], kProportions[2]});
      remaining[0] = totals[0];
      remaining[1] = totals[1];
      remaining[2] = totals[2];
    }
    std::sort(ids.begin(), ids.end());
    rng.shuffle(ids);

    // Apportion this stratum against the dataset's remaining capacity;
    // quotas never exceed capacity, and the last stratum drains it.
    std::vector<int> alloc = largestRemainder(
        static_cast<int>(ids.size()),
        {static_cast<double>(remaining[0]), static_cast<double>(remaining[1]),
         static_cast<double>(remaining[2])});
    size_t cursor = 0;
    for (int bucket = 0; bucket < 3; ++bucket) {
      remaining[bucket] -= alloc[static_cast<size_t>(bucket)];
      for (int j = 0; j < alloc[static_cast<size_t>(bucket)]; ++j) {
        result.by_question[ids[cursor++]] = static_cast<Split>(bucket);
      }
    }
  }
  return result;
}

void saveGold(const Dataset& dataset, const std::string& path) {
  json j;
  j["schema"] = 1;
  j["respondents_loaded"] = dataset.respondents_loaded;
  json questions = json::array();
  for (const auto& q : dataset.questions) {
    questions.push_back({{"id", q.id},
                         {"dataset", q.dataset},
                         {"category", q.category},
                         {"text", q.text},
                         {"choices", q.choices}});
  }
  j["questions"] = std::move(questions);
  json entries = json::array();
  for (const auto& [key, entry] : dataset.gold.entries()) {
    entries.push_back({{"question_id", key.first},
                       {"attribute", key.second.attribute},
                       {"value", key.second.value},
                       {"count", entry.respondent_count},
                       {"probs", entry.distribution.probs()}});
  }
  j["entries"] = std::move(entries);
  writeFile(path, j.dump(1) + "\n");
}

Dataset loadGold(const std::string& path) {
  json j = json::parse(readFile(path), nullptr, false);
  if (j.is_discarded()) raise(Errc::SchemaError, "'" + path + "' is not JSON");
  Dataset dataset;
  try {
    dataset.respondents_loaded = j.value("respondents_loaded", int64_t{0});
    for (const auto& q : j.at("questions")) {
      SurveyQuestion question;
      question.id = q.at("id").get<std::string>();
      question.dataset = q.at("dataset").get<std::string>();
      question.category = q.value("category", std::string{});
      question.text = q.at("text").get<std::string>();
      question.choices = q.at("choices").get<std::vector<std::string>>();
      question.validate();
      dataset.questions.push_back(std::move(question));
    }
    for (const auto& e : j.at("entries")) {
      dataset.gold.put(
          e.at("question_id").get<std::string>(),
          GroupKey{e.at("attribute").get<std::string>(),
                   e.at("value").get<std::string>()},
          OpinionDistribution::fromProbs(
              e.at("probs").get<std::vector<double>>()),
          e.at("count").get<int64_t>());
    }
  } catch (const json::exception& e) {
    raise(Errc::SchemaError, "'" + path + "': " + e.what());
  }
  return dataset;
}

void saveSplits(const SplitAssignment& splits, const std::string& path) {
  json j;
  j["schema"] = 1;
  j["seed"] = splits.seed;
  j["proportions"] = {0.6, 0.2, 0.2};
  json assignments = json::array();
  for (const auto& [qid, split] : splits.by_question) {
    assignments.push_back({{"question_id", qid}, {"split", splitName(split)}});
  }
  j["assignments"] = std::move(assignments);
  writeFile(path, j.dump(1) + "\n");
}

SplitAssignment loadSplits(const std::string& path) {
  json j = json::parse(readFile(path), nullptr, false);
  if (j.is_discarded()) raise(Errc::SchemaError, "'" + path + "' is not JSON");
  SplitAssignment splits;
  try {
    splits.seed = j.value("seed", uint64_t{0});
    for (const auto& a : j.at("assignments")) {
      auto split = splitFromName(a.at("split").get<std::string>());
      if (!split) raise(Errc::SchemaError, "bad split label in '" + path + "'");
      splits.by_question[a.at("question_id").get<std::string>()] = *split;
    }
  } catch (const json::exception& e) {
    raise(Errc::SchemaError, "'" + path + "': " + e.what());
  }
  return splits;
}

}  // namespace distalign
