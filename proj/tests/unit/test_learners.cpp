#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "osslc/error.hpp"
#include "osslc/learner.hpp"
#include "osslc/rng.hpp"
#include "support/temp_dir.hpp"

namespace osslc {
namespace {

using testing::TempDir;

Dataset blobs(std::size_t per_class, int classes, double separation, std::uint64_t seed,
              std::size_t features = 2) {
  Rng rng(seed);
  Dataset ds;
  for (std::size_t f = 0; f < features; ++f) ds.column_names.push_back("f" + std::to_string(f));
  for (int c = 0; c < classes; ++c) {
    for (std::size_t i = 0; i < per_class; ++i) {
      std::vector<double> x(features);
      for (std::size_t f = 0; f < features; ++f) x[f] = rng.normal();
      x[0] += separation * c;
      ds.append(x, c, "r" + std::to_string(ds.size()));
    }
  }
  return ds;
}

double accuracy(const LearnerModel& m, const Dataset& ds) {
  const auto pred = predict(m, ds.X);
  std::size_t hit = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) hit += pred[i] == ds.y[i];
  return static_cast<double>(hit) / static_cast<double>(pred.size());
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

TEST(Standardizer, Examples) {
  const Matrix X = Matrix::from_rows({{1, 5}, {2, 5}, {3, 5}});
  const auto s = fit_standardizer(X);
  const auto Z = s.transform(X);
  EXPECT_NEAR(Z(0, 0), -1.2247, 1e-4);
  EXPECT_NEAR(Z(1, 0), 0.0, 1e-12);
  EXPECT_NEAR(Z(2, 0), 1.2247, 1e-4);
  for (std::size_t r = 0; r < 3; ++r) EXPECT_EQ(Z(r, 1), 0.0);
}

TEST(Standardizer, InverseRoundTrip) {
  Rng rng(3);
  Matrix X(20, 4);
  for (std::size_t r = 0; r < 20; ++r)
    for (std::size_t c = 0; c < 4; ++c) X(r, c) = 100.0 * rng.normal() + 7.0 * c;
  const auto s = fit_standardizer(X);
  const auto back = s.inverse_transform(s.transform(X));
  for (std::size_t r = 0; r < 20; ++r)
    for (std::size_t c = 0; c < 4; ++c) EXPECT_NEAR(back(r, c), X(r, c), 1e-9);
}

TEST(DecisionTree, PureDataIsSingleLeaf) {
  Dataset ds = blobs(10, 1, 0.0, 1);
  const auto t = train_decision_tree(ds, {});
  EXPECT_EQ(t.nodes.size(), 1u);
  EXPECT_EQ(t.nodes[0].impurity, 0.0);
  EXPECT_EQ(t.predict_one(ds.X.row(3)), 0);
}

TEST(DecisionTree, OneDimensionalSplit) {
  Dataset ds;
  ds.column_names = {"x"};
  for (double x : {-3.0, -2.0, -0.5}) ds.append(std::vector<double>{x}, 0, "a");
  for (double x : {0.0, 1.0, 4.0}) ds.append(std::vector<double>{x}, 1, "b");
  const auto t = train_decision_tree(ds, {});
  ASSERT_EQ(t.nodes.size(), 3u);
  EXPECT_EQ(t.nodes[0].feature, 0);
  EXPECT_EQ(t.nodes[0].threshold, -0.25);
  EXPECT_EQ(accuracy(LearnerModel(t), ds), 1.0);
}

TEST(DecisionTree, ImportanceOfSingleSplit) {
  Dataset ds;
  ds.column_names = {"x", "noise"};
  ds.append(std::vector<double>{0.0, 1.0}, 0, "a");
  ds.append(std::vector<double>{1.0, 1.0}, 1, "b");
  const auto t = train_decision_tree(ds, {});
  EXPECT_EQ(feature_importance(t), (std::vector<double>{1.0, 0.0}));
}

TEST(DecisionTree, HyperparamLimits) {
  const auto ds = blobs(40, 3, 1.0, 2);
  TreeHyperparams hp;
  hp.max_depth = 2;
  EXPECT_LE(train_decision_tree(ds, hp).depth(), 2);
  hp = {};
  hp.max_leaf_nodes = 4;
  EXPECT_LE(train_decision_tree(ds, hp).leaf_count(), 4u);
  hp = {};
  hp.min_samples_leaf = 15;
  for (const auto& n : train_decision_tree(ds, hp).nodes) EXPECT_GE(n.n_samples, 15);
  hp = {};
  hp.max_depth = -1;
  EXPECT_EQ(kind_of([&] { train_decision_tree(ds, hp); }), ErrorKind::InvalidHyperparam);
}

TEST(Pruning, AlphaZeroAndInfinity) {
  const auto ds = blobs(30, 3, 1.0, 4);
  const auto t = train_decision_tree(ds, {});
  EXPECT_EQ(prune_cost_complexity(t, 0.0), t);
  EXPECT_EQ(prune_cost_complexity(t, 1e9).leaf_count(), 1u);
}

TEST(Pruning, LeavesNonIncreasingInAlpha) {
  const auto ds = blobs(30, 3, 1.0, 5);
  const auto t = train_decision_tree(ds, {});
  std::size_t prev = t.leaf_count();
  for (double a = 0.001; a < 0.5; a *= 1.5) {
    const auto leaves = prune_cost_complexity(t, a).leaf_count();
    EXPECT_LE(leaves, prev) << a;
    prev = leaves;
  }
}

TEST(RandomForest, SingleTreeWithoutBootstrapMatchesTree) {
  const auto ds = blobs(25, 3, 1.0, 6, 3);
  ForestHyperparams fh;
  fh.n_trees = 1;
  fh.bootstrap = false;
  fh.max_features = 3;
  const auto forest = train_random_forest(ds, fh, 9);
  const auto tree = train_decision_tree(ds, {});
  const auto probe = blobs(30, 3, 1.0, 60, 3);
  for (std::size_t i = 0; i < probe.size(); ++i) {
    EXPECT_EQ(forest.predict_one(probe.X.row(i)), tree.predict_one(probe.X.row(i)));
  }
}

TEST(RandomForest, SeparableBlobsAndDeterminism) {
  const auto ds = blobs(20, 3, 8.0, 7);
  ForestHyperparams fh;
  fh.n_trees = 50;
  const auto a = train_random_forest(ds, fh, 3);
  EXPECT_EQ(accuracy(LearnerModel(a), ds), 1.0);
  const auto b = train_random_forest(ds, fh, 3);
  EXPECT_EQ(predict(LearnerModel(a), ds.X), predict(LearnerModel(b), ds.X));
}

TEST(RandomForest, VoteIsMemberMode) {
  const auto ds = blobs(20, 3, 1.0, 8);
  ForestHyperparams fh;
  fh.n_trees = 7;
  const auto f = train_random_forest(ds, fh, 5);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    std::map<int, int> votes;
    for (const auto& t : f.trees) ++votes[t.predict_one(ds.X.row(i))];
    int best = -1, best_votes = -1;
    for (const auto& [c, v] : votes) {
      if (v > best_votes) best = c, best_votes = v;
    }
    EXPECT_EQ(f.predict_one(ds.X.row(i)), best);
  }
}

TEST(Boosting, ZeroLearningRatePredictsPrior) {
  auto ds = blobs(10, 3, 3.0, 9);
  for (int i = 0; i < 5; ++i) ds.append(ds.X.row(12), 1, "extra");
  BoostingHyperparams bh;
  bh.learning_rate = 0.0;
  bh.n_stages = 5;
  const auto m = train_gradient_boosting(ds, bh);
  for (std::size_t i = 0; i < ds.size(); ++i) EXPECT_EQ(m.predict_one(ds.X.row(i)), 1);
}

TEST(Boosting, SeparableTwoClassAndDevianceDecreases) {
  const auto ds = blobs(25, 2, 6.0, 10);
  BoostingHyperparams bh;
  const auto m = train_gradient_boosting(ds, bh);
  EXPECT_EQ(accuracy(LearnerModel(m), ds), 1.0);
  for (std::size_t s = 1; s < m.train_deviance.size(); ++s) {
    EXPECT_LE(m.train_deviance[s], m.train_deviance[s - 1] + 1e-12);
  }
}

TEST(Svm, TwoPointMidpoint) {
  const Matrix X = Matrix::from_rows({{0.0, 0.0}, {2.0, 2.0}});
  const std::vector<double> y = {1.0, -1.0};
  SvmHyperparams hp;
  hp.gamma = 0.5;
  const auto sol = solve_binary_svm(X, y, hp);
  double f = sol.bias;
  const std::vector<double> mid = {1.0, 1.0};
  for (std::size_t i = 0; i < 2; ++i) f += sol.alpha[i] * y[i] * rbf_kernel(X.row(i), mid, hp.gamma);
  EXPECT_NEAR(f, 0.0, 1e-6);
}

TEST(Svm, XorIsSeparable) {
  Dataset ds;
  ds.column_names = {"a", "b"};
  ds.append(std::vector<double>{0, 0}, 0, "p");
  ds.append(std::vector<double>{1, 1}, 0, "q");
  ds.append(std::vector<double>{0, 1}, 1, "r");
  ds.append(std::vector<double>{1, 0}, 1, "s");
  SvmHyperparams hp;
  hp.C = 10;
  hp.gamma = 1;
  EXPECT_EQ(accuracy(LearnerModel(train_svm_rbf(ds, hp)), ds), 1.0);
}

TEST(Svm, NonConvergenceIsReported) {
  const auto ds = blobs(30, 2, 0.2, 11);
  SvmHyperparams hp;
  hp.C = 1000;
  hp.max_iterations = 2;
  EXPECT_EQ(kind_of([&] { train_svm_rbf(ds, hp); }), ErrorKind::NonConvergence);
}

TEST(Learner, PredictOnPureLeafTrainingRow) {
  Dataset ds;
  ds.column_names = {"x"};
  ds.append(std::vector<double>{0.0}, 2, "a");
  ds.append(std::vector<double>{5.0}, 0, "b");
  const LearnerModel m = train(TreeHyperparams{}, ds, 0);
  EXPECT_EQ(predict(m, ds.X), ds.y);
  const auto p = predict_proba(m, ds.X);
  EXPECT_EQ(p(0, 1), 1.0);
}

TEST(Learner, ProbabilitiesAreRowStochastic) {
  const auto ds = blobs(15, 3, 1.0, 12);
  ForestHyperparams fh;
  fh.n_trees = 10;
  BoostingHyperparams bh;
  bh.n_stages = 10;
  for (const Hyperparams& hp : std::vector<Hyperparams>{TreeHyperparams{}, fh, bh}) {
    const auto m = train(hp, ds, 4);
    const auto p = predict_proba(m, ds.X);
    for (std::size_t r = 0; r < p.rows(); ++r) {
      double s = 0.0;
      for (std::size_t c = 0; c < p.cols(); ++c) {
        EXPECT_GE(p(r, c), 0.0);
        s += p(r, c);
      }
      EXPECT_NEAR(s, 1.0, 1e-12);
    }
  }
}

TEST(Learner, SvmHasNoProbabilitiesOrImportance) {
  const auto ds = blobs(10, 2, 4.0, 13);
  const auto m = train(SvmHyperparams{}, ds, 0);
  EXPECT_FALSE(supports_proba(m));
  EXPECT_EQ(kind_of([&] { predict_proba(m, ds.X); }), ErrorKind::NotProbabilistic);
  EXPECT_EQ(kind_of([&] { feature_importance(m); }), ErrorKind::NotProbabilistic);
}

TEST(Learner, WidthMismatch) {
  const auto ds = blobs(10, 2, 4.0, 14);
  const auto m = train(TreeHyperparams{}, ds, 0);
  EXPECT_EQ(kind_of([&] { predict(m, Matrix(2, 3)); }), ErrorKind::DimensionMismatch);
}

TEST(Learner, ImportanceSumsToOne) {
  const auto ds = blobs(20, 3, 1.0, 15, 4);
  ForestHyperparams fh;
  fh.n_trees = 10;
  BoostingHyperparams bh;
  bh.n_stages = 10;
  for (const Hyperparams& hp : std::vector<Hyperparams>{TreeHyperparams{}, fh, bh}) {
    const auto imp = feature_importance(train(hp, ds, 1));
    EXPECT_NEAR(std::accumulate(imp.begin(), imp.end(), 0.0), 1.0, 1e-9);
  }
}

class Serialization : public ::testing::TestWithParam<int> {};

Hyperparams hyperparams_for(int which) {
  switch (which) {
    case 0: {
      TreeHyperparams h;
      h.max_depth = 4;
      h.max_leaf_nodes = 6;
      h.ccp_alpha = 0.001;
      return h;
    }
    case 1: {
      ForestHyperparams h;
      h.n_trees = 8;
      return h;
    }
    case 2: {
      BoostingHyperparams h;
      h.n_stages = 12;
      return h;
    }
    default: {
      SvmHyperparams h;
      h.C = 3.0;
      h.gamma = 0.2;
      return h;
    }
  }
}

TEST_P(Serialization, RoundTripAndDeterminism) {
  const auto ds = blobs(15, 3, 1.5, 16, 3);
  const auto hp = hyperparams_for(GetParam());
  ModelDocument doc{train(hp, ds, 77), ds.column_names, {{"seed", 77}}};
  const auto text = model_to_json(doc).dump();
  ModelDocument again{train(hp, ds, 77), ds.column_names, {{"seed", 77}}};
  EXPECT_EQ(model_to_json(again).dump(), text);

  TempDir tmp;
  save_model(doc, tmp / "m.json");
  const auto loaded = load_model(tmp / "m.json");
  EXPECT_EQ(model_to_json(loaded).dump(), text);
  EXPECT_EQ(predict(loaded.model, ds.X), predict(doc.model, ds.X));
  EXPECT_EQ(loaded.selected_features, ds.column_names);
  EXPECT_EQ(hyperparams_to_json(hp), hyperparams_to_json(hyperparams_from_json(family_of(hp),
                                                                              hyperparams_to_json(hp))));
}

INSTANTIATE_TEST_SUITE_P(AllFamilies, Serialization, ::testing::Range(0, 4));

TEST(Persistence, RejectsNewerFormatAndGarbage) {
  const auto ds = blobs(10, 2, 3.0, 17);
  auto j = model_to_json({train(TreeHyperparams{}, ds, 0), ds.column_names, {}});
  j["format_version"] = kModelFormatVersion + 1;
  EXPECT_EQ(kind_of([&] { model_from_json(j); }), ErrorKind::UnsupportedFormat);
  j["format_version"] = kModelFormatVersion;
  j["family"] = "perceptron";
  EXPECT_EQ(kind_of([&] { model_from_json(j); }), ErrorKind::UnsupportedFormat);

  TempDir tmp;
  EXPECT_EQ(kind_of([&] { load_model(tmp / "none.json"); }), ErrorKind::MissingFile);
  testing::write_file(tmp / "bad.json", "{not json");
  EXPECT_EQ(kind_of([&] { load_model(tmp / "bad.json"); }), ErrorKind::UnsupportedFormat);
}

TEST(Families, NamesRoundTrip) {
  for (auto f : {Family::DecisionTree, Family::RandomForest, Family::GradientBoosting, Family::SvmRbf}) {
    EXPECT_EQ(parse_family(family_name(f)), f);
  }
  EXPECT_FALSE(parse_family("knn"));
}

}  // namespace
}  // namespace osslc
