// Copyright 2026 The dist-align Authors
// SPDX-License-Identifier: Apache-2.0

#include "distalign/regress.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <nlohmann/json.hpp>

#include "distalign/rng.hpp"

namespace distalign {

using nlohmann::json;

RegressorSpec RegressorSpec::ridge(double alpha) {
  RegressorSpec s;
  s.kind = Kind::Ridge;
  s.alpha = alpha;
  return s;
}

RegressorSpec RegressorSpec::lasso(double alpha) {
  RegressorSpec s;
  s.kind = Kind::Lasso;
  s.alpha = alpha;
  return s;
}

RegressorSpec RegressorSpec::randomForest(int n_trees, int max_depth,
                                          int min_leaf, uint64_t seed) {
  RegressorSpec s;
  s.kind = Kind::RandomForest;
  s.n_trees = n_trees;
  s.max_depth = max_depth;
  s.min_leaf = min_leaf;
  s.seed = seed;
  return s;
}

namespace {

const char* kindName(RegressorSpec::Kind k) {
  switch (k) {
    case RegressorSpec::Kind::Ols: return "ols";
    case RegressorSpec::Kind::Ridge: return "ridge";
    case RegressorSpec::Kind::Lasso: return "lasso";
    case RegressorSpec::Kind::RandomForest: return "random-forest";
  }
  return "?";
}

RegressorSpec::Kind kindFromName(const std::string& name) {
  if (name == "ols") return RegressorSpec::Kind::Ols;
  if (name == "ridge") return RegressorSpec::Kind::Ridge;
  if (name == "lasso") return RegressorSpec::Kind::Lasso;
  if (name == "random-forest") return RegressorSpec::Kind::RandomForest;
  raise(Errc::SchemaError, "unknown regressor kind '" + name + "'");
}

}  // namespace

std::string RegressorSpec::name() const {
  switch (kind) {
    case Kind::Ols:
      return "ols";
    case Kind::Ridge:
      return "ridge(alpha=" + std::to_string(alpha) + ")";
    case Kind::Lasso:
      return "lasso(alpha=" + std::to_string(alpha) + ")";
    case Kind::RandomForest:
      return "random-forest(trees=" + std::to_string(n_trees) +
             ",depth=" + (max_depth <= 0 ? "none" : std::to_string(max_depth)) +
             ",min_leaf=" + std::to_string(min_leaf) + ")";
  }
  return "?";
}

bool RegressorSpec::simplerThan(const RegressorSpec& other) const {
  if (kind != other.kind) {
    return static_cast<int>(kind) < static_cast<int>(other.kind);
  }
  if (alpha != other.alpha) return alpha < other.alpha;
  auto depth_rank = [](int d) {
    return d <= 0 ? std::numeric_limits<int>::max() : d;
  };
  if (depth_rank(max_depth) != depth_rank(other.max_depth)) {
    return depth_rank(max_depth) < depth_rank(other.max_depth);
  }
  return min_leaf < other.min_leaf;
}

double FittedRegressor::predict(double x) const {
  if (spec_.kind != RegressorSpec::Kind::RandomForest) {
    return intercept_ + slope_ * x;
  }
  double sum = 0.0;
  for (const auto& tree : trees_) {
    int node = 0;
    while (tree[node].left >= 0) {
      node = x < tree[node].threshold ? tree[node].left : tree[node].right;
    }
    sum += tree[node].value;
  }
  return sum / static_cast<double>(trees_.size());
}

double FittedRegressor::mse(std::span<const double> xs,
                            std::span<const double> ys) const {
  if (xs.size() != ys.size()) raise(Errc::LengthMismatch, "xs/ys mismatch");
  if (xs.empty()) raise(Errc::EmptyList, "no points to score");
  double ss = 0.0;
  for (size_t i = 0; i < xs.size(); ++i) {
    double r = predict(xs[i]) - ys[i];
    ss += r * r;
  }
  return ss / static_cast<double>(xs.size());
}

namespace {

struct Moments {
  double mean_x = 0.0;
  double mean_y = 0.0;
  double sxx = 0.0;  // sum of centered x squared
  double sxy = 0.0;  // sum of centered cross products
  size_t n = 0;
};

Moments moments(std::span<const double> xs, std::span<const double> ys) {
  Moments m;
  m.n = xs.size();
  for (size_t i = 0; i < m.n; ++i) {
    m.mean_x += xs[i];
    m.mean_y += ys[i];
  }
  m.mean_x /= static_cast<double>(m.n);
  m.mean_y /= static_cast<double>(m.n);
  for (size_t i = 0; i < m.n; ++i) {
    double dx = xs[i] - m.mean_x;
    m.sxx += dx * dx;
    m.sxy += dx * (ys[i] - m.mean_y);
  }
  return m;
}

constexpr double kDesignTol = 1e-14;

void fitLinearFamily(FittedRegressor& model, const RegressorSpec& spec,
                     std::span<const double> xs, std::span<const double> ys) {
  Moments m = moments(xs, ys);
  if (m.sxx <= kDesignTol) {
    raise(Errc::DegenerateDesign, "constant feature values");
  }
  const double n = static_cast<double>(m.n);

  switch (spec.kind) {
    case RegressorSpec::Kind::Ols:
      model.slope_ = m.sxy / m.sxx;
      model.intercept_ = m.mean_y - model.slope_ * m.mean_x;
      break;
    case RegressorSpec::Kind::Ridge:
      // Minimizes MSE + alpha * slope^2, intercept unpenalized; on
      // centered data this is sxy / (sxx + n*alpha).
      model.slope_ = m.sxy / (m.sxx + n * spec.alpha);
      model.intercept_ = m.mean_y - model.slope_ * m.mean_x;
      break;
    case RegressorSpec::Kind::Lasso: {
      // Coordinate descent on (intercept, slope), minimizing
      // MSE + alpha * |slope|. Each half-step solves its coordinate
      // exactly, so the objective never increases.
      double slope = 0.0;
      double intercept = m.mean_y;
      double mean_xx = 0.0;
      for (double x : xs) mean_xx += x * x;
      mean_xx /= n;
      const double soft = spec.alpha / 2.0;
      for (int sweep = 0; sweep < 10000; ++sweep) {
        double prev_slope = slope;
        double prev_intercept = intercept;
        intercept = m.mean_y - slope * m.mean_x;
        double cross = 0.0;
        for (size_t i = 0; i < xs.size(); ++i) {
          cross += xs[i] * (ys[i] - intercept);
        }
        cross /= n;
        double shrunk = std::abs(cross) <= soft
                            ? 0.0
                            : (cross > 0 ? cross - soft : cross + soft);
        slope = shrunk / mean_xx;
        if (std::abs(slope - prev_slope) <= 1e-8 &&
            std::abs(intercept - prev_intercept) <= 1e-8) {
          break;
        }
      }
      model.slope_ = slope;
      model.intercept_ = m.mean_y - slope * m.mean_x;
      break;
    }
    default:
      raise(Errc::Internal, "not a linear family kind");
  }
}

struct TreeBuilder {
  // Points sorted by x for the current sample.
  std::vector<double> xs;
  std::vector<double> ys;
  std::vector<double> prefix_y;
  std::vector<double> prefix_yy;
  int max_depth;
  int min_leaf;
  std::vector<TreeNode> nodes;

  double rangeSum(size_t lo, size_t hi) const {
    return prefix_y[hi] - prefix_y[lo];
  }
  double rangeSse(size_t lo, size_t hi) const {
    double s = rangeSum(lo, hi);
    double n = static_cast<double>(hi - lo);
    return (prefix_yy[hi] - prefix_yy[lo]) - s * s / n;
  }

  int build(size_t lo, size_t hi, int depth) {
    const size_t n = hi - lo;
    int index = static_cast<int>(nodes.size());
    nodes.push_back({});
    nodes[index].value = rangeSum(lo, hi) / static_cast<double>(n);

    if (depth >= max_depth || n < 2 * static_cast<size_t>(min_leaf)) {
      return index;
    }
    // Scan split positions between distinct x values; both sides must
    // keep at least min_leaf points.
    double best_sse = std::numeric_limits<double>::infinity();
    size_t best_pos = 0;
    for (size_t pos = lo + static_cast<size_t>(min_leaf);
         pos + static_cast<size_t>(min_leaf) <= hi; ++pos) {
      if (xs[pos] == xs[pos - 1]) continue;
      double sse = rangeSse(lo, pos) + rangeSse(pos, hi);
      if (sse < best_sse) {
        best_sse = sse;
        best_pos = pos;
      }
    }
    if (best_pos == 0) return index;  // all x equal: stay a leaf

    nodes[index].threshold = 0.5 * (xs[best_pos - 1] + xs[best_pos]);
    int left = build(lo, best_pos, depth + 1);
    int right = build(best_pos, hi, depth + 1);
    nodes[index].left = left;
    nodes[index].right = right;
    return index;
  }
};

void fitForest(FittedRegressor& model, const RegressorSpec& spec,
               std::span<const double> xs, std::span<const double> ys) {
  if (spec.n_trees < 1) raise(Errc::InvalidArgument, "n_trees must be >= 1");
  if (spec.min_leaf < 1) raise(Errc::InvalidArgument, "min_leaf must be >= 1");
  const size_t n = xs.size();
  const int depth_cap = spec.max_depth <= 0
                            ? std::numeric_limits<int>::max()
                            : spec.max_depth;

  std::vector<size_t> order(n);
  model.trees_.reserve(static_cast<size_t>(spec.n_trees));
  for (int t = 0; t < spec.n_trees; ++t) {
    Rng rng(Rng::mix(spec.seed, static_cast<uint64_t>(t) + 1));
    std::vector<size_t> sample(n);
    if (spec.bootstrap) {
      for (size_t i = 0; i < n; ++i) {
        sample[i] = static_cast<size_t>(rng.nextBelow(n));
      }
    } else {
      std::iota(sample.begin(), sample.end(), size_t{0});
    }
    std::sort(sample.begin(), sample.end(), [&](size_t a, size_t b) {
      return xs[a] < xs[b] || (xs[a] == xs[b] && a < b);
    });

    TreeBuilder builder;
    builder.max_depth = depth_cap;
    builder.min_leaf = spec.min_leaf;
    builder.xs.resize(n);
    builder.ys.resize(n);
    for (size_t i = 0; i < n; ++i) {
      builder.xs[i] = xs[sample[i]];
      builder.ys[i] = ys[sample[i]];
    }
    builder.prefix_y.assign(n + 1, 0.0);
    builder.prefix_yy.assign(n + 1, 0.0);
    for (size_t i = 0; i < n; ++i) {
      builder.prefix_y[i + 1] = builder.prefix_y[i] + builder.ys[i];
      builder.prefix_yy[i + 1] =
          builder.prefix_yy[i] + builder.ys[i] * builder.ys[i];
    }
    builder.build(0, n, 0);
    model.trees_.push_back(std::move(builder.nodes));
  }
}

}  // namespace

FittedRegressor fit(const RegressorSpec& spec, std::span<const double> xs,
                    std::span<const double> ys) {
  if (xs.size() != ys.size()) raise(Errc::LengthMismatch, "xs/ys mismatch");
  if (xs.size() < 2) raise(Errc::TooFewPairs, "need at least 2 points");
  if (spec.alpha < 0.0) raise(Errc::InvalidArgument, "alpha must be >= 0");

  FittedRegressor model;
  model.spec_ = spec;
  if (spec.kind == RegressorSpec::Kind::RandomForest) {
    fitForest(model, spec, xs, ys);
  } else {
    fitLinearFamily(model, spec, xs, ys);
  }
  model.n_train_ = xs.size();
  model.train_mse_ = model.mse(xs, ys);
  return model;
}

double lassoObjective(double slope, double intercept, double alpha,
                      std::span<const double> xs, std::span<const double> ys) {
  double ss = 0.0;
  for (size_t i = 0; i < xs.size(); ++i) {
    double r = ys[i] - intercept - slope * xs[i];
    ss += r * r;
  }
  return ss / static_cast<double>(xs.size()) + alpha * std::abs(slope);
}

std::string FittedRegressor::toJson() const {
  json j;
  j["kind"] = kindName(spec_.kind);
  j["alpha"] = spec_.alpha;
  j["n_trees"] = spec_.n_trees;
  j["max_depth"] = spec_.max_depth;
  j["min_leaf"] = spec_.min_leaf;
  j["bootstrap"] = spec_.bootstrap;
  j["seed"] = spec_.seed;
  j["n_train"] = n_train_;
  j["train_mse"] = train_mse_;
  if (spec_.kind == RegressorSpec::Kind::RandomForest) {
    json trees = json::array();
    for (const auto& tree : trees_) {
      json nodes = json::array();
      for (const auto& node : tree) {
        nodes.push_back({node.left, node.right, node.threshold, node.value});
      }
      trees.push_back(std::move(nodes));
    }
    j["trees"] = std::move(trees);
  } else {
    j["slope"] = slope_;
    j["intercept"] = intercept_;
  }
  return j.dump();
}

FittedRegressor FittedRegressor::fromJson(const std::string& text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) raise(Errc::SchemaError, "invalid regressor JSON");
  FittedRegressor model;
  try {
    model.spec_.kind = kindFromName(j.at("kind").get<std::string>());
    model.spec_.alpha = j.at("alpha").get<double>();
    model.spec_.n_trees = j.at("n_trees").get<int>();
    model.spec_.max_depth = j.at("max_depth").get<int>();
    model.spec_.min_leaf = j.at("min_leaf").get<int>();
    model.spec_.bootstrap = j.at("bootstrap").get<bool>();
    model.spec_.seed = j.at("seed").get<uint64_t>();
    model.n_train_ = j.at("n_train").get<size_t>();
    model.train_mse_ = j.at("train_mse").get<double>();
    if (model.spec_.kind == RegressorSpec::Kind::RandomForest) {
      for (const auto& tree : j.at("trees")) {
        std::vector<TreeNode> nodes;
        nodes.reserve(tree.size());
        for (const auto& node : tree) {
          nodes.push_back({node.at(0).get<int>(), node.at(1).get<int>(),
                           node.at(2).get<double>(), node.at(3).get<double>()});
        }
        model.trees_.push_back(std::move(nodes));
      }
      if (model.trees_.empty()) {
        raise(Errc::SchemaError, "forest model without trees");
      }
    } else {
      model.slope_ = j.at("slope").get<double>();
      model.intercept_ = j.at("intercept").get<double>();
    }
  } catch (const json::exception& e) {
    raise(Errc::SchemaError, std::string("regressor JSON: ") + e.what());
  }
  return model;
}

}  // namespace distalign
