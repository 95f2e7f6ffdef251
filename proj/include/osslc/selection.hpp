#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "osslc/dataset.hpp"
#include "osslc/learner.hpp"

namespace osslc {

enum class Scoring { Accuracy, MacroF1 };

struct CvSpec {
  int k = 10;
  int repeats = 10;
  std::uint64_t seed = 0;
  Scoring scoring = Scoring::Accuracy;
  // 0 disables SMOTE+Tomek inside training folds.
  int smote_k = 5;
  unsigned jobs = 1;

  void check() const;
};

struct SplitResult {
  Dataset train;
  Dataset test;
};

/// Per-class allocation by largest remainder so the test total equals
/// ceil(test_fraction * n). Throws ClassTooSmall or InvalidHyperparam.
SplitResult stratified_split(const Dataset& ds, double test_fraction, std::uint64_t seed);

struct FoldAssignment {
  int k = 0;
  std::vector<int> fold_of_row;
  // Non-empty when some class has fewer than k rows (KTooLarge).
  std::vector<std::string> warnings;

  std::vector<std::size_t> test_rows(int fold) const;
  std::vector<std::size_t> train_rows(int fold) const;
};

FoldAssignment stratified_kfold(const std::vector<int>& y, int k, std::uint64_t seed);

struct CvRun {
  int repeat = 0;
  int fold = 0;
  double score = 0.0;
};

/// Called on every (repeat, fold) before fitting; may alter either split.
using FoldHook = std::function<void(Dataset& train, Dataset& test, int repeat, int fold)>;

/// k * repeats scores ordered by (repeat, fold).
std::vector<CvRun> cross_val_score(const Hyperparams& hp, const Dataset& ds, const CvSpec& cv,
                                   const FoldHook& hook = {});

double score_predictions(const std::vector<int>& y_true, const std::vector<int>& y_pred,
                         Scoring scoring);

// ---------------------------------------------------------------------------
// Grids

struct TreeGrid {
  std::vector<int> max_depth;
  std::vector<int> min_samples_split;
  std::vector<int> min_samples_leaf;
  std::vector<std::optional<int>> max_leaf_nodes;
  std::vector<double> ccp_alpha;
};

struct ForestGrid {
  std::vector<int> n_trees;
  std::vector<int> max_depth;
  std::vector<int> min_samples_leaf;
};

struct BoostingGrid {
  std::vector<double> learning_rate;
  std::vector<int> max_depth;
  std::vector<int> n_stages;
};

struct SvmGrid {
  std::vector<double> C;
  std::vector<double> gamma;
};

using Grid = std::variant<TreeGrid, ForestGrid, BoostingGrid, SvmGrid>;

Family family_of(const Grid& grid);
Grid default_grid(Family family);

/// Cartesian product in declaration order (last axis fastest) with repeated
/// axis values dropped.
std::vector<Hyperparams> expand_grid(const Grid& grid);

/// Negative when a is simpler than b under the family's complexity order.
int compare_complexity(const Hyperparams& a, const Hyperparams& b);

struct GridEntry {
  Hyperparams hyperparams;
  double mean = 0.0;
  double std = 0.0;
  std::vector<CvRun> runs;
};

struct GridResult {
  Family family = Family::DecisionTree;
  std::vector<GridEntry> entries;
  std::size_t best = 0;
  std::string selection_rule;

  const GridEntry& best_entry() const { return entries.at(best); }
};

/// Throws EmptyGrid.
GridResult grid_search(const Grid& grid, const Dataset& ds, const CvSpec& cv);

/// CSV with columns combination_id,repeat,fold,score.
std::string grid_runs_csv(const GridResult& result);

struct SfsStep {
  std::size_t added_feature = 0;
  std::vector<std::size_t> features;
  double mean_score = 0.0;
};

struct SfsTrajectory {
  std::vector<SfsStep> steps;
  std::vector<std::size_t> chosen;
  double chosen_score = 0.0;
};

SfsTrajectory forward_sfs(const Hyperparams& hp, const Dataset& ds, const CvSpec& cv);

struct FinalizeOptions {
  int smote_k = 5;
  std::uint64_t seed = 0;
};

/// SMOTE+Tomek on the full training set, restriction to `features`, final fit.
ModelDocument finalize(const Hyperparams& hp, const std::vector<std::size_t>& features,
                       const Dataset& train, const FinalizeOptions& options);

double mean_score(const std::vector<CvRun>& runs);

}  // namespace osslc
