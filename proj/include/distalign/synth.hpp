// Copyright 2026 The dist-align Authors
// SPDX-License-Identifier: Apache-2.0
//
// Generates fully synthetic survey worlds (questions, demographic-shifted
// gold distributions, respondents) with known ground truth, so every
// pipeline stage runs without network access. Gold answer distributions
// come from a discretized logistic located at a per-question mean that
// demographic membership shifts additively.

#ifndef DISTALIGN_SYNTH_HPP
#define DISTALIGN_SYNTH_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "distalign/core.hpp"
#include "distalign/ingest.hpp"
#include "distalign/providers.hpp"

namespace distalign {

struct AttributeSpec {
  std::string name;
  std::vector<std::string> values;
};

struct SyntheticSpec {
  int n_datasets = 3;
  int n_questions = 40;  // per dataset
  int k_min = 4;
  int k_max = 4;
  std::vector<AttributeSpec> attributes;  // empty = the default 3 x 3 set
  double group_effect = 1.0;              // scale of demographic mean shifts
  int respondents_per_group = 500;        // expected respondents per group
  uint64_t seed = 42;
  std::string dataset_prefix = "synth";

  void validate() const;

  /// Desk-scale default world: 3 datasets x 40 questions x k=4,
  /// 3 attributes x 3 values, 500 respondents per group.
  static SyntheticSpec defaults();

  /// Reads the [synth] table; attribute entries use "name:v1|v2|v3".
  static SyntheticSpec fromTomlFile(const std::string& path);
};

struct SyntheticWorld {
  std::vector<SurveyQuestion> questions;
  std::vector<RespondentRecord> respondents;
  Dataset hidden;  // exact gold distributions, no sampling error
};

/// Deterministic for a fixed spec (bit-identical files on rerun).
SyntheticWorld generateWorld(const SyntheticSpec& spec);

/// Writes questions.json, respondents.jsonl and hidden_gold.json under
/// out_dir, in the ingestion schema.
void writeWorld(const SyntheticWorld& world, const std::string& out_dir);

/// A named mock configuration plus the qualitative outcome acceptance runs
/// assert for it.
struct ExpectedOutcome {
  bool has_improvement_within = false;
  double improvement_within = 0.0;  // |mean improvement| bound (identity)
  bool has_min_improvement = false;
  double min_improvement = 0.0;  // mean improvement floor (sharpen)
  bool expect_group_std_reduction = false;
};

struct BenchmarkCase {
  std::string name;
  MockDistortion distortion;
  ExpectedOutcome expected;
};

/// Parses case names composed of '+'-joined tokens:
///   identity | sharpen:<gamma> | affine-noise:<a>,<b>,<sigma> |
///   group-exaggerate:<lambda>
/// e.g. "sharpen:2+affine-noise:1,0,0.05". Errors: UnknownCase.
BenchmarkCase benchmarkCase(const std::string& name);

}  // namespace distalign

#endif  // DISTALIGN_SYNTH_HPP
