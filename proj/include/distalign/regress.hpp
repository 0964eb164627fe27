// Copyright 2026 The dist-align Authors
// SPDX-License-Identifier: Apache-2.0
//
// Scalar-input regression solvers with a uniform fit/predict contract.
// The calibration layer treats these as interchangeable candidates and
// picks between them on held-out error, so all four families live behind
// the same FittedRegressor value type.

#ifndef DISTALIGN_REGRESS_HPP
#define DISTALIGN_REGRESS_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "distalign/errors.hpp"

namespace distalign {

struct RegressorSpec {
  enum class Kind { Ols, Ridge, Lasso, RandomForest };

  Kind kind = Kind::Ols;

  // Linear-family penalty weight, applied to the slope only (never the
  // intercept). The penalized objective is mean squared error plus
  // alpha * slope^2 (ridge) or alpha * |slope| (lasso).
  double alpha = 0.0;

  // Forest knobs. max_depth <= 0 means unbounded.
  int n_trees = 100;
  int max_depth = 8;
  int min_leaf = 2;
  bool bootstrap = true;
  uint64_t seed = 0;

  static RegressorSpec ols() { return {}; }
  static RegressorSpec ridge(double alpha);
  static RegressorSpec lasso(double alpha);
  static RegressorSpec randomForest(int n_trees, int max_depth, int min_leaf,
                                    uint64_t seed);

  /// Stable display name, e.g. "ridge(alpha=0.1)".
  std::string name() const;

  /// Orders candidates for tie-breaking: OLS < Ridge < Lasso < Forest,
  /// then smaller alpha, then shallower trees, then smaller leaves.
  bool simplerThan(const RegressorSpec& other) const;
};

struct TreeNode {
  // Leaf iff left < 0.
  int left = -1;
  int right = -1;
  double threshold = 0.0;
  double value = 0.0;
};

/// Immutable fitted model. Linear family stores (slope, intercept); the
/// forest stores its flattened trees. Prediction is deterministic.
class FittedRegressor {
 public:
  double predict(double x) const;

  /// Mean squared prediction error. Errors: LengthMismatch, EmptyList.
  double mse(std::span<const double> xs, std::span<const double> ys) const;

  const RegressorSpec& spec() const { return spec_; }
  double slope() const { return slope_; }
  double intercept() const { return intercept_; }
  size_t nTrainPoints() const { return n_train_; }
  double trainMse() const { return train_mse_; }

  /// JSON round-trip for the model registry.
  std::string toJson() const;
  static FittedRegressor fromJson(const std::string& text);

 private:
  friend FittedRegressor fit(const RegressorSpec&, std::span<const double>,
                              std::span<const double>);

  FittedRegressor() = default;

  RegressorSpec spec_;
  double slope_ = 0.0;
  double intercept_ = 0.0;
  std::vector<std::vector<TreeNode>> trees_;
  size_t n_train_ = 0;
  double train_mse_ = 0.0;
};

/// Fits `spec` to (xs, ys).
///
/// OLS and ridge use the closed-form normal equations on centered data;
/// lasso runs coordinate descent (parameter tolerance 1e-8, at most
/// 10,000 sweeps) with an unpenalized intercept; the forest grows
/// bootstrap-sampled depth-limited regression trees with mean-leaf
/// prediction and per-tree seeds derived from spec.seed.
///
/// Errors: LengthMismatch, TooFewPairs (< 2), DegenerateDesign (constant
/// xs with a linear-family spec), InvalidArgument (bad hyperparameters).
FittedRegressor fit(const RegressorSpec& spec, std::span<const double> xs,
                    std::span<const double> ys);

/// The lasso objective minimized above: mean squared error plus
/// alpha * |slope|. Exposed so tests can assert descent monotonicity.
double lassoObjective(double slope, double intercept, double alpha,
                      std::span<const double> xs, std::span<const double> ys);

}  // namespace distalign

#endif  // DISTALIGN_REGRESS_HPP
