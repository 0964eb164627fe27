// Copyright 2026 The dist-align Authors
// SPDX-License-Identifier: Apache-2.0
//
// Foundational value types: survey questions, demographic group keys, and
// probability distributions over ordinal answer choices, plus the small
// arithmetic every other module builds on. All types are immutable after
// construction and safe to share across threads.

#ifndef DISTALIGN_CORE_HPP
#define DISTALIGN_CORE_HPP

#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "distalign/errors.hpp"

namespace distalign {

/// Absolute tolerance for "probabilities sum to one".
inline constexpr double kSumToOneTol = 1e-9;

/// Sums at or below this are treated as degenerate when renormalizing.
inline constexpr double kDegenerateSumTol = 1e-12;

struct SurveyQuestion {
  std::string id;
  std::string dataset;   // e.g. "WGM"
  std::string category;  // topic bucket, used for stratified splitting
  std::string text;
  std::vector<std::string> choices;  // listed order IS the ordinal order

  size_t k() const { return choices.size(); }

  /// Throws SchemaError unless k >= 2 and choices are non-empty and unique.
  void validate() const;
};

/// One demographic (attribute, value) pair, or the all-respondents sentinel.
struct GroupKey {
  std::string attribute;
  std::string value;

  static GroupKey allRespondents() { return GroupKey{"all", "all"}; }
  bool isAll() const { return attribute == "all" && value == "all"; }

  /// Throws InvalidArgument for empty attribute/value on non-sentinel keys.
  void validate() const;

  auto operator<=>(const GroupKey&) const = default;
};

enum class NegativePolicy { Reject, ClipToZero };

/// Probability vector over k ordinal answer choices. Construction goes
/// through the factory functions below, which enforce non-negativity and
/// sum-to-one (within kSumToOneTol); a constructed value is always valid.
class OpinionDistribution {
 public:
  /// Empty placeholder so records can be built incrementally; every factory
  /// output below is a valid distribution.
  OpinionDistribution() = default;

  /// Validates and adopts an explicit probability vector.
  static OpinionDistribution fromProbs(std::vector<double> probs);

  /// Relative frequencies of non-negative counts. Errors: AllZeroCounts,
  /// LengthMismatch (k < 2).
  static OpinionDistribution fromCounts(std::span<const int64_t> counts);

  /// Scales a raw vector to sum 1. ClipToZero zeroes negatives first;
  /// Reject throws NegativeEntry on any negative. Throws DegenerateSum if
  /// the post-clip sum is <= kDegenerateSumTol.
  static OpinionDistribution renormalized(std::span<const double> raw,
                                          NegativePolicy policy);

  /// Entrywise mean of distributions sharing k. Errors: EmptyList,
  /// LengthMismatch.
  static OpinionDistribution average(
      std::span<const OpinionDistribution> distributions);

  /// Empirical distribution of 1-based choice indices. Every entry of the
  /// result is an exact multiple of 1/n. Errors: EmptyList, OutOfRangeIndex,
  /// LengthMismatch (k < 2).
  static OpinionDistribution fromSamples(std::span<const int> choice_indices,
                                         size_t k);

  size_t size() const { return probs_.size(); }
  double operator[](size_t i) const { return probs_[i]; }
  const std::vector<double>& probs() const { return probs_; }

  bool operator==(const OpinionDistribution& other) const = default;

 private:
  explicit OpinionDistribution(std::vector<double> probs)
      : probs_(std::move(probs)) {}

  std::vector<double> probs_;
};

enum class Source { Gold, Elicited, Calibrated };

enum class Method { Verbalized, SelfRandom, Paraphrase, Logprob };
enum class PromptKind { Base, SD };

const char* methodName(Method m);
std::optional<Method> methodFromName(std::string_view name);
const char* promptKindName(PromptKind k);
std::optional<PromptKind> promptKindFromName(std::string_view name);
const char* sourceName(Source s);

/// Identifies how a non-gold distribution was produced.
struct Setting {
  std::string model_id;
  Method method = Method::Verbalized;
  PromptKind kind = PromptKind::Base;

  auto operator<=>(const Setting&) const = default;
};

/// Addresses one stored distribution. Gold entries carry no setting;
/// elicited and calibrated entries carry a complete one.
struct DistributionKey {
  std::string question_id;
  GroupKey group;
  Source source = Source::Gold;
  std::optional<Setting> setting;

  /// Enforces the source/setting pairing rule above.
  void validate() const;

  auto operator<=>(const DistributionKey&) const = default;
};

}  // namespace distalign

#endif  // DISTALIGN_CORE_HPP
