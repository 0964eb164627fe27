// Copyright 2026 The dist-align Authors
// SPDX-License-Identifier: Apache-2.0
//
// Loads survey response data, builds gold answer distributions per
// (question, demographic group) by relative frequency, and produces
// deterministic stratified 60-20-20 question splits.

#ifndef DISTALIGN_INGEST_HPP
#define DISTALIGN_INGEST_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "distalign/core.hpp"

namespace distalign {

struct RespondentRecord {
  std::string question_id;
  int choice_index = 0;  // 1-based
  std::map<std::string, std::string> demographics;
};

struct GoldEntry {
  OpinionDistribution distribution;
  int64_t respondent_count = 0;
};

/// Immutable map from (question_id, group) to a gold distribution plus the
/// respondent count behind it. The all-respondents entry of a question is
/// the relative frequency over every respondent of that question.
class GoldTable {
 public:
  using Key = std::pair<std::string, GroupKey>;

  void put(const std::string& question_id, const GroupKey& group,
           OpinionDistribution dist, int64_t count);

  const GoldEntry* find(const std::string& question_id,
                        const GroupKey& group) const;

  /// Groups stored for one question, all-respondents first.
  std::vector<GroupKey> groupsFor(const std::string& question_id) const;

  const std::map<Key, GoldEntry>& entries() const { return entries_; }
  size_t size() const { return entries_.size(); }

 private:
  std::map<Key, GoldEntry> entries_;
};

enum class Split { Train, Dev, Test };

const char* splitName(Split s);
std::optional<Split> splitFromName(std::string_view name);

/// One split label per question id; proportions are fixed at 60-20-20.
/// All groups of a question inherit the question's split.
struct SplitAssignment {
  std::map<std::string, Split> by_question;
  uint64_t seed = 0;

  Split of(const std::string& question_id) const;
};

struct Dataset {
  std::vector<SurveyQuestion> questions;
  GoldTable gold;
  int64_t respondents_loaded = 0;
};

/// Parses a questions file (JSON array) and validates each question.
/// Errors: Io, SchemaError.
std::vector<SurveyQuestion> loadQuestions(const std::string& path);

/// Parses respondents from JSON Lines ({"question_id", "choice_index",
/// "demographics"}) or, when the path ends in .csv, from a CSV with header
/// question_id,choice_index,<attribute>... Errors name the offending line.
std::vector<RespondentRecord> loadRespondents(const std::string& path);

/// Builds gold distributions from already-parsed inputs. Demographic groups
/// with fewer than min_group_count respondents are omitted with a warning
/// on stderr; the all-respondents entry is always kept.
/// Errors: SchemaError (unknown question, out-of-range choice index with
/// record position), EmptyDataset.
Dataset buildGold(std::vector<SurveyQuestion> questions,
                  const std::vector<RespondentRecord>& respondents,
                  int min_group_count);

/// loadQuestions + loadRespondents + buildGold.
Dataset loadDataset(const std::string& questions_path,
                    const std::string& respondents_path, int min_group_count);

/// Deterministic stratified 60-20-20 assignment over question ids.
///
/// Questions are shuffled with the seeded generator and stratified by
/// (dataset, category); categories with fewer than 5 questions fall back
/// to a per-dataset stratum. Within each dataset, bucket totals follow
/// largest-remainder rounding (remainder ties resolved in train, dev,
/// test order), so each dataset stays within one question of exact
/// 60-20-20. Errors: TooFewQuestions (< 5 in some dataset).
SplitAssignment makeSplits(const std::vector<SurveyQuestion>& questions,
                           uint64_t seed);

// --- file formats ---

/// gold.json: questions plus gold entries; also used for the exact tables
/// emitted by the synthetic world generator.
void saveGold(const Dataset& dataset, const std::string& path);
Dataset loadGold(const std::string& path);

void saveSplits(const SplitAssignment& splits, const std::string& path);
SplitAssignment loadSplits(const std::string& path);

/// Largest-remainder apportionment of `total` into weighted buckets;
/// remainder ties go to the lower bucket index.
std::vector<int> largestRemainder(int total, const std::vector<double>& weights);

}  // namespace distalign

#endif  // DISTALIGN_INGEST_HPP
