// Copyright 2026 The dist-align Authors
// SPDX-License-Identifier: Apache-2.0

#include "distalign/core.hpp"

#include <cmath>
#include <unordered_set>

namespace distalign {

void SurveyQuestion::validate() const {
  if (id.empty()) raise(Errc::SchemaError, "question with empty id");
  if (choices.size() < 2) {
    raise(Errc::SchemaError,
          "question '" + id + "' has fewer than 2 answer choices");
  }
  std::unordered_set<std::string> seen;
  for (const auto& c : choices) {
    if (c.empty()) {
      raise(Errc::SchemaError, "question '" + id + "' has an empty choice");
    }
    if (!seen.insert(c).second) {
      raise(Errc::SchemaError,
            "question '" + id + "' has duplicate choice '" + c + "'");
    }
  }
}

void GroupKey::validate() const {
  if (isAll()) return;
  if (attribute.empty() || value.empty()) {
    raise(Errc::InvalidArgument,
          "group key needs a non-empty attribute and value");
  }
}

namespace {

void checkValidProbs(const std::vector<double>& probs) {
  if (probs.size() < 2) {
    raise(Errc::LengthMismatch, "distribution needs at least 2 entries");
  }
  double sum = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0)) {  // also rejects NaN
      raise(Errc::NegativeEntry, "distribution entry is negative or NaN");
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > kSumToOneTol) {
    raise(Errc::DegenerateSum,
          "distribution sums to " + std::to_string(sum) + ", expected 1");
  }
}

}  // namespace

OpinionDistribution OpinionDistribution::fromProbs(std::vector<double> probs) {
  checkValidProbs(probs);
  return OpinionDistribution(std::move(probs));
}

OpinionDistribution OpinionDistribution::fromCounts(
    std::span<const int64_t> counts) {
  if (counts.size() < 2) {
    raise(Errc::LengthMismatch, "need at least 2 counts");
  }
  int64_t total = 0;
  for (int64_t c : counts) {
    if (c < 0) raise(Errc::NegativeEntry, "negative count");
    total += c;
  }
  if (total == 0) raise(Errc::AllZeroCounts, "every count is zero");
  std::vector<double> probs(counts.size());
  for (size_t i = 0; i < counts.size(); ++i) {
    probs[i] = static_cast<double>(counts[i]) / static_cast<double>(total);
  }
  return OpinionDistribution(std::move(probs));
}

OpinionDistribution OpinionDistribution::renormalized(
    std::span<const double> raw, NegativePolicy policy) {
  if (raw.size() < 2) {
    raise(Errc::LengthMismatch, "need at least 2 entries to renormalize");
  }
  std::vector<double> clipped(raw.begin(), raw.end());
  for (double& v : clipped) {
    if (std::isnan(v)) raise(Errc::InvalidArgument, "NaN entry");
    if (v < 0.0) {
      if (policy == NegativePolicy::Reject) {
        raise(Errc::NegativeEntry, "negative entry with Reject policy");
      }
      v = 0.0;
    }
  }
  double sum = 0.0;
  for (double v : clipped) sum += v;
  if (!(sum > kDegenerateSumTol)) {
    raise(Errc::DegenerateSum, "entries sum to (nearly) zero");
  }
  for (double& v : clipped) v /= sum;
  return OpinionDistribution(std::move(clipped));
}

OpinionDistribution OpinionDistribution::average(
    std::span<const OpinionDistribution> distributions) {
  if (distributions.empty()) raise(Errc::EmptyList, "nothing to average");
  const size_t k = distributions.front().size();
  std::vector<double> mean(k, 0.0);
  for (const auto& d : distributions) {
    if (d.size() != k) {
      raise(Errc::LengthMismatch, "distributions of differing length");
    }
    for (size_t i = 0; i < k; ++i) mean[i] += d[i];
  }
  for (double& v : mean) v /= static_cast<double>(distributions.size());
  return OpinionDistribution(std::move(mean));
}

OpinionDistribution OpinionDistribution::fromSamples(
    std::span<const int> choice_indices, size_t k) {
  if (choice_indices.empty()) raise(Errc::EmptyList, "no samples");
  if (k < 2) raise(Errc::LengthMismatch, "k must be at least 2");
  std::vector<double> probs(k, 0.0);
  for (int idx : choice_indices) {
    if (idx < 1 || static_cast<size_t>(idx) > k) {
      raise(Errc::OutOfRangeIndex,
            "sample index " + std::to_string(idx) + " outside [1," +
                std::to_string(k) + "]");
    }
    probs[static_cast<size_t>(idx) - 1] += 1.0;
  }
  for (double& v : probs) v /= static_cast<double>(choice_indices.size());
  return OpinionDistribution(std::move(probs));
}

const char* methodName(Method m) {
  switch (m) {
    case Method::Verbalized: return "verbalized";
    case Method::SelfRandom: return "self-random";
    case Method::Paraphrase: return "paraphrase";
    case Method::Logprob: return "logprob";
  }
  return "?";
}

std::optional<Method> methodFromName(std::string_view name) {
  if (name == "verbalized") return Method::Verbalized;
  if (name == "self-random") return Method::SelfRandom;
  if (name == "paraphrase") return Method::Paraphrase;
  if (name == "logprob") return Method::Logprob;
  return std::nullopt;
}

const char* promptKindName(PromptKind k) {
  return k == PromptKind::Base ? "base" : "sd";
}

std::optional<PromptKind> promptKindFromName(std::string_view name) {
  if (name == "base") return PromptKind::Base;
  if (name == "sd") return PromptKind::SD;
  return std::nullopt;
}

const char* sourceName(Source s) {
  switch (s) {
    case Source::Gold: return "gold";
    case Source::Elicited: return "elicited";
    case Source::Calibrated: return "calibrated";
  }
  return "?";
}

void DistributionKey::validate() const {
  group.validate();
  if (source == Source::Gold) {
    if (setting.has_value()) {
      raise(Errc::InvalidArgument, "gold entries must not carry a setting");
    }
  } else if (!setting.has_value() || setting->model_id.empty()) {
    raise(Errc::InvalidArgument,
          "elicited/calibrated entries need a complete setting");
  }
}

const char* errcName(Errc c) {
  switch (c) {
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::AllZeroCounts: return "AllZeroCounts";
    case Errc::DegenerateSum: return "DegenerateSum";
    case Errc::NegativeEntry: return "NegativeEntry";
    case Errc::EmptyList: return "EmptyList";
    case Errc::OutOfRangeIndex: return "OutOfRangeIndex";
    case Errc::TooFewPairs: return "TooFewPairs";
    case Errc::TooFewQuestions: return "TooFewQuestions";
    case Errc::TooFewDatasets: return "TooFewDatasets";
    case Errc::SchemaError: return "SchemaError";
    case Errc::EmptyDataset: return "EmptyDataset";
    case Errc::Io: return "Io";
    case Errc::ProviderError: return "ProviderError";
    case Errc::AuthError: return "AuthError";
    case Errc::LogprobsUnsupported: return "LogprobsUnsupported";
    case Errc::AllSamplesDiscarded: return "AllSamplesDiscarded";
    case Errc::MissingGold: return "MissingGold";
    case Errc::EmptySelection: return "EmptySelection";
    case Errc::DegenerateDesign: return "DegenerateDesign";
    case Errc::UnknownCase: return "UnknownCase";
    case Errc::Internal: return "Internal";
  }
  return "Unknown";
}

}  // namespace distalign
