#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "osslc/dataset.hpp"
#include "osslc/tree.hpp"

namespace osslc {

struct ForestHyperparams {
  int n_trees = 100;
  int max_depth = 0;  // 0 means unbounded
  int min_samples_leaf = 1;
  int min_samples_split = 2;
  int max_features = 0;  // 0 means floor(sqrt(p))
  bool bootstrap = true;

  void check() const;
  friend bool operator==(const ForestHyperparams&, const ForestHyperparams&) = default;
};

struct RandomForestModel {
  std::vector<DecisionTreeModel> trees;
  std::vector<std::uint64_t> tree_seeds;
  ForestHyperparams hyperparams;
  std::vector<int> classes;
  std::size_t n_features = 0;

  /// Majority vote; ties go to the lowest class code.
  int predict_one(std::span<const double> x) const;
  /// Vote fractions per class.
  std::vector<double> proba_one(std::span<const double> x) const;
};

RandomForestModel train_random_forest(const Dataset& ds, const ForestHyperparams& hp,
                                      std::uint64_t seed);

/// Mean of the member trees' normalized importances, renormalized.
std::vector<double> feature_importance(const RandomForestModel& forest);

struct BoostingHyperparams {
  int n_stages = 100;
  double learning_rate = 0.1;
  int max_depth = 3;
  int min_samples_leaf = 1;

  void check() const;
  friend bool operator==(const BoostingHyperparams&, const BoostingHyperparams&) = default;
};

/// Multinomial-deviance gradient boosting: each stage holds one regression
/// tree per class, fit to y_k - softmax_k with Newton leaf values.
struct GradientBoostingModel {
  std::vector<std::vector<RegressionTree>> stages;  // [stage][class]
  std::vector<double> initial_scores;               // log class priors
  BoostingHyperparams hyperparams;
  std::vector<int> classes;
  std::size_t n_features = 0;
  std::vector<double> train_deviance;  // after each stage

  std::vector<double> raw_scores(std::span<const double> x) const;
  std::vector<double> proba_one(std::span<const double> x) const;
  int predict_one(std::span<const double> x) const;
};

GradientBoostingModel train_gradient_boosting(const Dataset& ds, const BoostingHyperparams& hp,
                                              std::uint64_t seed = 0);

/// Sum of squared-error reductions per feature over all stage trees, normalized.
std::vector<double> feature_importance(const GradientBoostingModel& model);

std::vector<double> softmax(std::span<const double> raw);

/// Mean multinomial deviance -1/n sum_i log softmax(raw_i)[y_i]. `y` holds
/// class indices (0..K-1), `raw` is n x K.
double multinomial_deviance(const Matrix& raw, std::span<const int> y);

/// d deviance / d raw, i.e. (softmax - onehot) / n.
Matrix multinomial_deviance_gradient(const Matrix& raw, std::span<const int> y);

}  // namespace osslc
