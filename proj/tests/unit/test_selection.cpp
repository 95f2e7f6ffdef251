#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "osslc/error.hpp"
#include "osslc/rng.hpp"
#include "osslc/selection.hpp"

namespace osslc {
namespace {

Dataset with_counts(const std::vector<std::size_t>& counts, double separation, std::uint64_t seed,
                    std::size_t features = 2) {
  Rng rng(seed);
  Dataset ds;
  for (std::size_t f = 0; f < features; ++f) ds.column_names.push_back("f" + std::to_string(f));
  for (std::size_t c = 0; c < counts.size(); ++c) {
    for (std::size_t i = 0; i < counts[c]; ++i) {
      std::vector<double> x(features);
      for (auto& v : x) v = rng.normal();
      x[0] += separation * static_cast<double>(c);
      ds.append(x, static_cast<int>(c), "r" + std::to_string(ds.size()));
    }
  }
  return ds;
}

template <typename F>
ErrorKind kind_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorKind::Precondition;
}

TEST(StratifiedSplit, HeldOutSupports) {
  const auto ds = with_counts({22, 30, 101}, 1.0, 1);
  const auto s = stratified_split(ds, 0.2, 42);
  const auto test = s.test.class_counts();
  EXPECT_EQ(test.at(0), 4u);
  EXPECT_EQ(test.at(1), 6u);
  EXPECT_EQ(test.at(2), 21u);
  EXPECT_EQ(s.test.size(), 31u);
  EXPECT_EQ(s.train.size(), 122u);
  std::set<std::string> ids(s.train.row_ids.begin(), s.train.row_ids.end());
  for (const auto& id : s.test.row_ids) EXPECT_FALSE(ids.count(id)) << id;
}

TEST(StratifiedSplit, SingleClass) {
  const auto s = stratified_split(with_counts({10}, 0.0, 2), 0.2, 0);
  EXPECT_EQ(s.test.size(), 2u);
  EXPECT_EQ(s.train.size(), 8u);
}

TEST(StratifiedSplit, SeedDeterminesSplit) {
  const auto ds = with_counts({20, 20}, 1.0, 3);
  EXPECT_EQ(stratified_split(ds, 0.25, 5).test, stratified_split(ds, 0.25, 5).test);
  EXPECT_NE(stratified_split(ds, 0.25, 5).test.row_ids, stratified_split(ds, 0.25, 6).test.row_ids);
  EXPECT_EQ(kind_of([&] { stratified_split(ds, 1.5, 0); }), ErrorKind::InvalidHyperparam);
}

TEST(StratifiedKFold, BalancedFolds) {
  std::vector<int> y;
  for (int c = 0; c < 3; ++c) y.insert(y.end(), 10, c);
  const auto a = stratified_kfold(y, 10, 7);
  EXPECT_TRUE(a.warnings.empty());
  for (int f = 0; f < 10; ++f) {
    const auto rows = a.test_rows(f);
    ASSERT_EQ(rows.size(), 3u);
    std::set<int> classes;
    for (auto r : rows) classes.insert(y[r]);
    EXPECT_EQ(classes.size(), 3u);
    EXPECT_EQ(a.train_rows(f).size(), 27u);
  }
  EXPECT_EQ(a.fold_of_row, stratified_kfold(y, 10, 7).fold_of_row);
}

TEST(StratifiedKFold, SmallClassWarnsAndTooManyFoldsFails) {
  std::vector<int> y(12, 0);
  y[0] = 1;
  y[1] = 1;
  const auto a = stratified_kfold(y, 5, 0);
  EXPECT_FALSE(a.warnings.empty());
  EXPECT_EQ(kind_of([&] { stratified_kfold(y, 13, 0); }), ErrorKind::KTooLarge);
}

TEST(CrossVal, SeparableScoresAllOne) {
  const auto ds = with_counts({20, 20, 20}, 20.0, 4);
  CvSpec cv;
  const auto runs = cross_val_score(TreeHyperparams{}, ds, cv);
  ASSERT_EQ(runs.size(), 100u);
  for (std::size_t i = 0; i < runs.size(); ++i) {
    EXPECT_EQ(runs[i].repeat, static_cast<int>(i / 10));
    EXPECT_EQ(runs[i].fold, static_cast<int>(i % 10));
    EXPECT_EQ(runs[i].score, 1.0);
  }
}

TEST(CrossVal, ConstantPredictorScoresMajorityShare) {
  const auto ds = with_counts({70, 30}, 1.0, 5);
  CvSpec cv;
  cv.smote_k = 0;
  const auto runs = cross_val_score(TreeHyperparams{}, ds, cv,
                                    [](Dataset& train, Dataset&, int, int) {
                                      for (auto& label : train.y) label = 0;
                                    });
  EXPECT_NEAR(mean_score(runs), 0.7, 1e-9);
}

TEST(CrossVal, Deterministic) {
  const auto ds = with_counts({15, 15}, 1.0, 6);
  CvSpec cv;
  cv.k = 3;
  cv.repeats = 2;
  cv.seed = 11;
  const auto a = cross_val_score(TreeHyperparams{}, ds, cv);
  cv.jobs = 3;
  const auto b = cross_val_score(TreeHyperparams{}, ds, cv);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].score, b[i].score);
}

TEST(Scoring, AccuracyAndMacroF1) {
  const std::vector<int> t = {0, 0, 1, 1};
  const std::vector<int> p = {0, 1, 1, 1};
  EXPECT_DOUBLE_EQ(score_predictions(t, p, Scoring::Accuracy), 0.75);
  // F1: class 0 -> 2/3, class 1 -> 0.8
  EXPECT_DOUBLE_EQ(score_predictions(t, p, Scoring::MacroF1), (2.0 / 3.0 + 0.8) / 2.0);
}

TEST(Grid, DefaultSizes) {
  EXPECT_EQ(expand_grid(default_grid(Family::DecisionTree)).size(), 960u);
  EXPECT_EQ(expand_grid(default_grid(Family::RandomForest)).size(), 27u);
  EXPECT_EQ(expand_grid(default_grid(Family::GradientBoosting)).size(), 27u);
  EXPECT_EQ(expand_grid(default_grid(Family::SvmRbf)).size(), 25u);
  for (auto f : {Family::DecisionTree, Family::RandomForest, Family::GradientBoosting, Family::SvmRbf}) {
    EXPECT_EQ(family_of(default_grid(f)), f);
  }
}

TEST(Grid, LastAxisFastest) {
  const auto hps = expand_grid(SvmGrid{{1.0, 2.0}, {0.1, 0.2, 0.1}});
  ASSERT_EQ(hps.size(), 4u);
  EXPECT_EQ(std::get<SvmHyperparams>(hps[1]).C, 1.0);
  EXPECT_EQ(std::get<SvmHyperparams>(hps[1]).gamma, 0.2);
  EXPECT_EQ(std::get<SvmHyperparams>(hps[2]).C, 2.0);
}

TEST(Grid, ComplexityOrder) {
  TreeHyperparams shallow, deep, unbounded;
  shallow.max_depth = 3;
  deep.max_depth = 10;
  EXPECT_LT(compare_complexity(shallow, deep), 0);
  EXPECT_GT(compare_complexity(unbounded, deep), 0);
  EXPECT_EQ(compare_complexity(shallow, shallow), 0);
  SvmHyperparams small, large;
  large.C = 100;
  EXPECT_LT(compare_complexity(small, large), 0);
}

TEST(GridSearch, SingleCombinationWins) {
  const auto ds = with_counts({15, 15}, 1.0, 7);
  CvSpec cv;
  cv.k = 3;
  cv.repeats = 1;
  const auto r = grid_search(TreeGrid{{4}, {2}, {1}, {std::nullopt}, {0.0}}, ds, cv);
  ASSERT_EQ(r.entries.size(), 1u);
  EXPECT_EQ(r.best, 0u);
  EXPECT_EQ(r.entries[0].runs.size(), 3u);
  const auto csv = grid_runs_csv(r);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "combination_id,repeat,fold,score");
}

TEST(GridSearch, TiesPreferSimplerModel) {
  const auto ds = with_counts({15, 15}, 30.0, 8);
  CvSpec cv;
  cv.k = 3;
  cv.repeats = 1;
  const auto r = grid_search(TreeGrid{{10, 3}, {2}, {1}, {std::nullopt}, {0.0}}, ds, cv);
  EXPECT_EQ(r.entries[0].mean, r.entries[1].mean);
  EXPECT_EQ(std::get<TreeHyperparams>(r.best_entry().hyperparams).max_depth, 3);
}

TEST(GridSearch, EmptyGrid) {
  const auto ds = with_counts({5, 5}, 1.0, 9);
  EXPECT_EQ(kind_of([&] { grid_search(SvmGrid{{}, {0.1}}, ds, CvSpec{}); }), ErrorKind::EmptyGrid);
}

TEST(Sfs, InformativeFeatureFirst) {
  Rng rng(10);
  Dataset ds;
  ds.column_names = {"noise", "signal"};
  for (int i = 0; i < 60; ++i) {
    const int label = i % 2;
    ds.append(std::vector<double>{rng.normal(), label * 5.0 + 0.3 * rng.normal()}, label,
              "r" + std::to_string(i));
  }
  CvSpec cv;
  cv.k = 5;
  cv.repeats = 2;
  const auto traj = forward_sfs(TreeHyperparams{}, ds, cv);
  ASSERT_EQ(traj.steps.size(), 2u);
  EXPECT_EQ(traj.steps[0].added_feature, 1u);
  EXPECT_EQ(traj.steps[1].features, (std::vector<std::size_t>{0, 1}));
  EXPECT_EQ(traj.chosen, (std::vector<std::size_t>{1}));
  EXPECT_EQ(traj.chosen_score, traj.steps[0].mean_score);
  for (const auto& s : traj.steps) EXPECT_LE(s.mean_score, traj.chosen_score);
}

TEST(Finalize, SeparableTrainAccuracy) {
  const auto ds = with_counts({10, 14, 30}, 15.0, 11, 3);
  const auto doc = finalize(TreeHyperparams{}, {0, 2}, ds, {});
  EXPECT_EQ(doc.selected_features, (std::vector<std::string>{"f0", "f2"}));
  const std::vector<std::size_t> cols = {0, 2};
  const auto narrowed = ds.select_features(cols);
  EXPECT_EQ(predict(doc.model, narrowed.X), ds.y);
  EXPECT_EQ(doc.provenance.at("training_rows"), 54);
}

}  // namespace
}  // namespace osslc
