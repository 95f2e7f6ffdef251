#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "osslc/dataset.hpp"
#include "osslc/rng.hpp"

namespace osslc {

struct TreeHyperparams {
  int max_depth = 0;  // 0 means unbounded
  int min_samples_split = 2;
  int min_samples_leaf = 1;
  std::optional<int> max_leaf_nodes;  // nullopt means unbounded
  double ccp_alpha = 0.0;

  void check() const;
  friend bool operator==(const TreeHyperparams&, const TreeHyperparams&) = default;
};

struct TreeNode {
  int feature = -1;  // -1 for leaves
  double threshold = 0.0;  // rows with x[feature] <= threshold go left
  double impurity = 0.0;   // Gini
  int n_samples = 0;
  std::vector<double> class_counts;  // indexed like DecisionTreeModel::classes
  int left = -1;
  int right = -1;

  bool is_leaf() const noexcept { return feature < 0; }
  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

/// CART classifier. nodes[0] is the root; children always follow parents.
struct DecisionTreeModel {
  std::vector<TreeNode> nodes;
  TreeHyperparams hyperparams;
  std::vector<int> classes;  // sorted label codes seen in training
  std::size_t n_features = 0;

  int leaf_for(std::span<const double> x) const;
  int predict_one(std::span<const double> x) const;
  std::vector<double> proba_one(std::span<const double> x) const;
  std::size_t leaf_count() const;
  int depth() const;

  friend bool operator==(const DecisionTreeModel&, const DecisionTreeModel&) = default;
};

double gini(std::span<const double> class_counts);

/// Weighted impurity decrease of an internal node, relative to the root's
/// sample count: (n_t/N) (i_t - n_l/n_t i_l - n_r/n_t i_r).
double split_gain(const DecisionTreeModel& tree, int node);

/// Greedy CART growth on weighted Gini, then cost-complexity pruning at
/// hp.ccp_alpha. Candidate thresholds are midpoints between consecutive
/// distinct values; equal gains prefer the lower feature, then the lower
/// threshold. With max_leaf_nodes set, growth is best-first.
DecisionTreeModel train_decision_tree(const Dataset& ds, const TreeHyperparams& hp,
                                      std::uint64_t seed = 0);

/// Minimal cost-complexity (weakest-link) pruning with cost
/// R(t) = (n_t / N) gini(t). alpha == 0 returns the tree unchanged.
DecisionTreeModel prune_cost_complexity(const DecisionTreeModel& tree, double alpha);

/// Mean decrease in impurity per feature, normalized to sum 1 (all zeros for
/// a single leaf).
std::vector<double> feature_importance(const DecisionTreeModel& tree);

namespace detail {

/// Per-node feature sampling used by random forests. max_features == 0 means
/// every feature is considered.
struct FeatureSampling {
  std::size_t max_features = 0;
  Rng* rng = nullptr;
};

/// Grows an unpruned tree on `rows` (duplicates allowed, e.g. a bootstrap).
DecisionTreeModel grow_tree(const Dataset& ds, std::span<const std::size_t> rows,
                            const std::vector<int>& classes, const TreeHyperparams& hp,
                            FeatureSampling sampling);

}  // namespace detail

/// Least-squares regression tree used as the boosting base learner.
struct RegressionTree {
  struct Node {
    int feature = -1;
    double threshold = 0.0;
    double value = 0.0;
    double impurity = 0.0;  // mean squared error of the node
    int n_samples = 0;
    int left = -1;
    int right = -1;
    friend bool operator==(const Node&, const Node&) = default;
  };
  std::vector<Node> nodes;

  int leaf_for(std::span<const double> x) const;
  double predict(std::span<const double> x) const { return nodes[leaf_for(x)].value; }
  friend bool operator==(const RegressionTree&, const RegressionTree&) = default;
};

/// Fits targets on the given rows; leaf values are the mean target until the
/// caller overwrites them. Returns the leaf index reached by each row in
/// `leaf_of_row` (same order as `rows`).
RegressionTree fit_regression_tree(const Matrix& X, std::span<const double> target,
                                   std::span<const std::size_t> rows, int max_depth,
                                   int min_samples_leaf, std::vector<int>* leaf_of_row = nullptr);

}  // namespace osslc
