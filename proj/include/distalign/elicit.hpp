// Copyright 2026 The dist-align Authors
// SPDX-License-Identifier: Apache-2.0
//
// Prompt rendering, output parsing, and the four protocols for pulling an
// answer-choice distribution out of a chat model: verbalized (ask for the
// numbers, 3 samples averaged), self-random (5 sampled single choices),
// paraphrase (one single choice per each of 5 rewordings), and logprob
// (score each choice index as a continuation and renormalize).

#ifndef DISTALIGN_ELICIT_HPP
#define DISTALIGN_ELICIT_HPP

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "distalign/core.hpp"
#include "distalign/providers.hpp"

namespace distalign {

/// Template texts for one prompt kind. Placeholders: {q} question text,
/// {answer choices} comma-joined choice list, {l} choice count, {att}/{c}
/// demographic attribute/value (sociodemographic kind only), {answer} the
/// continuation slot of the logprob template.
struct PromptSet {
  std::string verbalized;
  std::string self_random;
  std::string logprob;
  std::array<std::string, 5> paraphrase;
};

struct PromptTemplates {
  PromptSet base;
  PromptSet sd;

  /// Compiled-in default templates.
  static const PromptTemplates& defaults();

  /// Reads <dir>/{base,sd}_{verbalized,self_random,logprob,paraphrase_1..5}.txt.
  static PromptTemplates loadDir(const std::string& dir);

  /// Writes the defaults in the loadDir layout.
  static void writeDir(const std::string& dir);
};

/// Expands placeholders. The sociodemographic variants are only valid for
/// non-sentinel groups; rendering checks that no placeholder survives.
std::string renderPrompt(const std::string& templ, const SurveyQuestion& question,
                         const GroupKey& group);

/// Picks the template for (method, kind, group): the sociodemographic
/// wording applies when kind is SD and the group is a real demographic;
/// the all-respondents group always gets the base wording.
const std::string& selectTemplate(const PromptTemplates& templates,
                                  Method method, PromptKind kind,
                                  const GroupKey& group, int paraphrase_index);

struct ParsedVerbalized {
  std::vector<double> raw;  // as extracted, before scaling
  OpinionDistribution distribution;
};

/// Extracts the first bracketed numeric list. Wrong arity, non-numeric
/// entries, or a degenerate sum discard the output (nullopt). Sums in
/// [90, 110] are treated as percentages and divided by 100 before
/// renormalizing.
std::optional<ParsedVerbalized> parseVerbalized(const std::string& text,
                                                size_t k);

/// First integer token in the text, accepted iff it lies in [1, k].
std::optional<int> parseChoice(const std::string& text, size_t k);

struct ElicitationRecord {
  DistributionKey key;
  std::string dataset;
  OpinionDistribution distribution;
  int n_samples_used = 0;
  int n_discarded = 0;
  std::vector<std::string> raw_outputs;
};

/// Number of provider samples per protocol.
inline constexpr int kVerbalizedSamples = 3;
inline constexpr int kSelfRandomSamples = 5;

/// The elicit* functions throw AllSamplesDiscarded when nothing parsable
/// came back, and LogprobsUnsupported when the provider cannot score
/// continuations.
ElicitationRecord elicitVerbalized(Provider& provider,
                                   const SurveyQuestion& question,
                                   const GroupKey& group, PromptKind kind,
                                   const PromptTemplates& templates);
ElicitationRecord elicitSelfRandom(Provider& provider,
                                   const SurveyQuestion& question,
                                   const GroupKey& group, PromptKind kind,
                                   const PromptTemplates& templates);
ElicitationRecord elicitParaphrase(Provider& provider,
                                   const SurveyQuestion& question,
                                   const GroupKey& group, PromptKind kind,
                                   const PromptTemplates& templates);
ElicitationRecord elicitLogprob(Provider& provider,
                                const SurveyQuestion& question,
                                const GroupKey& group, PromptKind kind,
                                const PromptTemplates& templates);

ElicitationRecord elicit(Provider& provider, const SurveyQuestion& question,
                         const GroupKey& group, Method method, PromptKind kind,
                         const PromptTemplates& templates);

// --- elicited.jsonl ---

std::string recordToJsonLine(const ElicitationRecord& record);
ElicitationRecord recordFromJsonLine(const std::string& line);

void saveRecords(const std::vector<ElicitationRecord>& records,
                 const std::string& path);
std::vector<ElicitationRecord> loadRecords(const std::string& path);

}  // namespace distalign

#endif  // DISTALIGN_ELICIT_HPP
