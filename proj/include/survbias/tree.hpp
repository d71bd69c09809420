#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "survbias/data.hpp"
#include "survbias/rng.hpp"

namespace survbias {

enum class Execution { serial, parallel };

enum class SplitCriterion {
  gini,           // class-frequency leaves, Gini impurity decrease
  logistic_gain,  // Newton leaves G/H, gain G_L^2/H_L + G_R^2/H_R - G^2/H
};

struct FeatureSubsample {
  enum class Rule { all, sqrt, fixed };
  Rule rule = Rule::all;
  std::size_t count = 0;  // used by Rule::fixed

  // Number of candidate features drawn per node out of d.
  std::size_t resolve(std::size_t d) const;
};

struct TreeParams {
  std::size_t max_depth = 16;
  std::size_t min_samples_leaf = 1;
  FeatureSubsample features;
  SplitCriterion criterion = SplitCriterion::gini;

  void validate() const;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  std::uint32_t left = 0;
  std::uint32_t right = 0;
  double value = 0.0;

  bool is_leaf() const { return feature < 0; }
  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

// Binary tree stored as a flat node array; node 0 is the root. Rows with
// x[feature] < threshold go left.
class Tree {
public:
  Tree() = default;
  explicit Tree(std::vector<TreeNode> nodes);

  static Tree leaf(double value);
  static Tree stump(int feature, double threshold, double left_value, double right_value);

  double predict(std::span<const double> row) const;
  const std::vector<TreeNode>& nodes() const { return nodes_; }
  std::vector<TreeNode>& nodes() { return nodes_; }
  std::size_t depth() const;
  void scale_leaves(double factor);

  friend bool operator==(const Tree&, const Tree&) = default;

private:
  std::vector<TreeNode> nodes_;
};

// Per-row sufficient statistics for split search. For Gini trees a is the
// label and b is 1; for Newton trees a is the gradient and b the hessian.
// Leaves take the value sum(a) / sum(b).
struct RowStats {
  std::span<const double> a;
  std::span<const double> b;
};

// Row indices of X sorted by each feature.
using FeatureOrder = std::vector<std::vector<std::uint32_t>>;
FeatureOrder presort_features(const Matrix& X, Execution exec = Execution::serial);

// Grows one tree on the given rows (duplicates allowed, e.g. a bootstrap).
// Candidate features are drawn from rng when params.features is not "all".
// `presorted` speeds up large nodes; it may only be passed when rows holds no
// duplicates.
Tree grow_tree(const Matrix& X, RowStats stats, std::vector<std::size_t> rows, const TreeParams& params,
               Rng& rng, Execution exec = Execution::serial, const FeatureOrder* presorted = nullptr);

}  // namespace survbias
