// Copyright 2026 The dist-align Authors
// SPDX-License-Identifier: Apache-2.0
//
// Opinion-alignment metric on ordinal answer scales and the paired
// significance statistics used when comparing calibrated against
// uncalibrated scores. Everything here is a pure function.

#ifndef DISTALIGN_METRICS_HPP
#define DISTALIGN_METRICS_HPP

#include <span>
#include <utility>

#include "distalign/core.hpp"

namespace distalign {

/// 1 minus the 1-Wasserstein distance between p and q on support points
/// {1..k} with unit spacing, normalized by the maximum possible distance
/// (k-1). Computed through the CDF form:
///
///   alignment = 1 - (1/(k-1)) * sum_{i=1}^{k-1} |CDF_p(i) - CDF_q(i)|
///
/// 1 means identical distributions; 0 means point masses on the two
/// extreme choices. Errors: LengthMismatch.
double opinionAlignment(const OpinionDistribution& p,
                        const OpinionDistribution& q);

/// Independent route to the same quantity for cross-checking: explicit
/// minimum-cost transport with cost |i-j|, built by the north-west-corner
/// rule (optimal in one dimension). Returns the unnormalized cost.
/// Restricted to k <= 7. Errors: LengthMismatch, InvalidArgument (k > 7).
double wassersteinBruteforce(const OpinionDistribution& p,
                             const OpinionDistribution& q);

struct PairedTestResult {
  enum class Outcome { Ok, ZeroVarianceDifferences };

  double t_statistic = 0.0;
  int degrees_of_freedom = 0;
  double p_value = 1.0;
  double p_bonferroni = 1.0;
  int n_comparisons = 1;
  Outcome outcome = Outcome::Ok;

  bool significant(double alpha) const { return p_bonferroni < alpha; }
};

/// Two-sided paired t-test on aligned score vectors, with Bonferroni
/// correction p_bonferroni = min(1, p * n_comparisons).
///
/// Degenerate inputs are mapped to deterministic outcomes instead of
/// failing: all-zero differences give t=0, p=1; nonzero differences with
/// zero variance give the ZeroVarianceDifferences outcome with p=0 and a
/// signed-infinity t statistic.
///
/// Errors: LengthMismatch, TooFewPairs (< 2), InvalidArgument
/// (n_comparisons < 1).
PairedTestResult pairedTTest(std::span<const double> scores_a,
                             std::span<const double> scores_b,
                             int n_comparisons);

/// Mean and sample standard deviation (n-1 denominator; 0 for singletons).
/// Errors: EmptyList.
std::pair<double, double> summarize(std::span<const double> scores);

/// Regularized incomplete beta function I_x(a, b), relative error <= 1e-10.
/// Exposed because the t CDF below is the only consumer and tests pin it
/// against reference values.
double regularizedIncompleteBeta(double a, double b, double x);

/// CDF of Student's t distribution with df degrees of freedom.
double studentTCdf(double t, int df);

}  // namespace distalign

#endif  // DISTALIGN_METRICS_HPP
