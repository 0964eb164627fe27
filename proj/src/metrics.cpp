// Copyright 2026 The dist-align Authors
// SPDX-License-Identifier: Apache-2.0

#include "distalign/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace distalign {

double opinionAlignment(const OpinionDistribution& p,
                        const OpinionDistribution& q) {
  const size_t k = p.size();
  if (q.size() != k || k < 2) {
    raise(Errc::LengthMismatch, "need two distributions of equal length >= 2");
  }
  double cdf_p = 0.0;
  double cdf_q = 0.0;
  double total = 0.0;
  for (size_t i = 0; i + 1 < k; ++i) {
    cdf_p += p[i];
    cdf_q += q[i];
    total += std::abs(cdf_p - cdf_q);
  }
  double alignment = 1.0 - total / static_cast<double>(k - 1);
  // Guard against rounding a hair outside [0,1].
  return std::clamp(alignment, 0.0, 1.0);
}

double wassersteinBruteforce(const OpinionDistribution& p,
                             const OpinionDistribution& q) {
  const size_t k = p.size();
  if (q.size() != k || k < 2) {
    raise(Errc::LengthMismatch, "need two distributions of equal length >= 2");
  }
  if (k > 7) {
    raise(Errc::InvalidArgument, "brute-force transport is limited to k <= 7");
  }
  // North-west-corner rule: ship mass between the leftmost unexhausted
  // supply and demand bins. With |i-j| costs on a line this is optimal.
  std::vector<double> supply(p.probs());
  std::vector<double> demand(q.probs());
  size_t i = 0;
  size_t j = 0;
  double cost = 0.0;
  while (i < k && j < k) {
    double moved = std::min(supply[i], demand[j]);
    cost += moved * std::abs(static_cast<double>(i) - static_cast<double>(j));
    supply[i] -= moved;
    demand[j] -= moved;
    // The smaller side is exhausted exactly; advance it (both on ties).
    if (supply[i] == 0.0) ++i;
    if (demand[j] == 0.0) ++j;
  }
  return cost;
}

PairedTestResult pairedTTest(std::span<const double> scores_a,
                             std::span<const double> scores_b,
                             int n_comparisons) {
  if (scores_a.size() != scores_b.size()) {
    raise(Errc::LengthMismatch, "paired score vectors of differing length");
  }
  if (scores_a.size() < 2) {
    raise(Errc::TooFewPairs, "need at least 2 pairs");
  }
  if (n_comparisons < 1) {
    raise(Errc::InvalidArgument, "n_comparisons must be >= 1");
  }

  const size_t n = scores_a.size();
  std::vector<double> diffs(n);
  for (size_t i = 0; i < n; ++i) diffs[i] = scores_a[i] - scores_b[i];

  double mean = 0.0;
  for (double d : diffs) mean += d;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double d : diffs) ss += (d - mean) * (d - mean);
  double sd = std::sqrt(ss / static_cast<double>(n - 1));

  PairedTestResult result;
  result.degrees_of_freedom = static_cast<int>(n) - 1;
  result.n_comparisons = n_comparisons;

  if (sd == 0.0) {
    if (mean == 0.0) {
      result.t_statistic = 0.0;
      result.p_value = 1.0;
    } else {
      result.outcome = PairedTestResult::Outcome::ZeroVarianceDifferences;
      result.t_statistic = mean > 0
                               ? std::numeric_limits<double>::infinity()
                               : -std::numeric_limits<double>::infinity();
      result.p_value = 0.0;
    }
  } else {
    result.t_statistic = mean / (sd / std::sqrt(static_cast<double>(n)));
    double cdf = studentTCdf(std::abs(result.t_statistic),
                             result.degrees_of_freedom);
    result.p_value = std::clamp(2.0 * (1.0 - cdf), 0.0, 1.0);
  }
  result.p_bonferroni =
      std::min(1.0, result.p_value * static_cast<double>(n_comparisons));
  return result;
}

std::pair<double, double> summarize(std::span<const double> scores) {
  if (scores.empty()) raise(Errc::EmptyList, "no scores to summarize");
  double mean = 0.0;
  for (double s : scores) mean += s;
  mean /= static_cast<double>(scores.size());
  if (scores.size() == 1) return {mean, 0.0};
  double ss = 0.0;
  for (double s : scores) ss += (s - mean) * (s - mean);
  double sd = std::sqrt(ss / static_cast<double>(scores.size() - 1));
  return {mean, sd};
}

namespace {

/// Continued fraction for the incomplete beta function (modified Lentz).
double betaContinuedFraction(double a, double b, double x) {
  constexpr int kMaxIterations = 500;
  constexpr double kEps = 1e-15;
  constexpr double kTiny = 1e-300;

  double qab = a + b;
  double qap = a + 1.0;
  double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIterations; ++m) {
    double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) break;
  }
  return h;
}

}  // namespace

double regularizedIncompleteBeta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) {
    raise(Errc::InvalidArgument, "beta parameters must be positive");
  }
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                    a * std::log(x) + b * std::log1p(-x);
  double front = std::exp(ln_front);
  // Use the continued fraction on the side where it converges fast.
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return front * betaContinuedFraction(a, b, x) / a;
  }
  return 1.0 - front * betaContinuedFraction(b, a, 1.0 - x) / b;
}

double studentTCdf(double t, int df) {
  if (df < 1) raise(Errc::InvalidArgument, "degrees of freedom must be >= 1");
  if (t == 0.0) return 0.5;
  double nu = static_cast<double>(df);
  double x = nu / (nu + t * t);
  double tail = 0.5 * regularizedIncompleteBeta(nu / 2.0, 0.5, x);
  return t > 0.0 ? 1.0 - tail : tail;
}

}  // namespace distalign
