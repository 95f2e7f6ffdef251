#include <gtest/gtest.h>

#include <cmath>

#include "osslc/error.hpp"
#include "osslc/outliers.hpp"
#include "osslc/rng.hpp"

namespace osslc {
namespace {

Matrix blob(std::size_t n, std::uint64_t seed, double spread = 1.0) {
  Rng rng(seed);
  Matrix X(n, 2);
  for (std::size_t i = 0; i < n; ++i) {
    X(i, 0) = spread * rng.normal();
    X(i, 1) = spread * rng.normal();
  }
  return X;
}

Dataset labeled(const Matrix& X, int label) {
  Dataset ds;
  ds.column_names = {"a", "b"};
  for (std::size_t i = 0; i < X.rows(); ++i) ds.append(X.row(i), label, "r" + std::to_string(i));
  return ds;
}

TEST(AveragePathLength, KnownValues) {
  EXPECT_EQ(average_path_length(0), 0.0);
  EXPECT_EQ(average_path_length(1), 0.0);
  EXPECT_DOUBLE_EQ(average_path_length(2), 1.0);
  // 2 H(2) - 2*2/3
  EXPECT_NEAR(average_path_length(3), 2.0 * 1.5 - 4.0 / 3.0, 1e-12);
}

TEST(IsolationForest, SingleRowScoresHalf) {
  const Matrix X = Matrix::from_rows({{3.0, 4.0}});
  const auto model = fit_isolation_forest(X, 20, 256, 1);
  for (const auto& t : model.trees) EXPECT_EQ(t.nodes.size(), 1u);
  EXPECT_EQ(anomaly_score(model, X.row(0)), 0.5);
  const std::vector<double> other = {100.0, -7.0};
  EXPECT_EQ(anomaly_score(model, other), 0.5);
}

TEST(IsolationForest, SeededFitIsDeterministic) {
  const Matrix X = blob(120, 4);
  const auto a = fit_isolation_forest(X, 30, 64, 99);
  const auto b = fit_isolation_forest(X, 30, 64, 99);
  EXPECT_EQ(a.trees, b.trees);
  EXPECT_EQ(anomaly_scores(a, X), anomaly_scores(b, X));
}

TEST(IsolationForest, DepthCappedAtLogSubsample) {
  const Matrix X = blob(300, 5);
  const auto model = fit_isolation_forest(X, 25, 64, 3);
  for (const auto& t : model.trees) EXPECT_LE(t.depth(), 6);
  EXPECT_EQ(model.subsample_size, 64);
  EXPECT_DOUBLE_EQ(model.normalizer, average_path_length(64));
}

TEST(IsolationForest, SubsampleClampedToRows) {
  const auto model = fit_isolation_forest(blob(40, 6), 10, 256, 3);
  EXPECT_EQ(model.subsample_size, 40);
}

TEST(IsolationForest, ClusterInteriorVersusPlantedOutlier) {
  Matrix X = blob(99, 7, 0.5);
  const std::vector<double> far = {8.0, 8.0};
  X.append_row(far);
  const auto model = fit_isolation_forest(X, 100, 256, 11);
  const std::vector<double> centre = {0.0, 0.0};
  EXPECT_LT(anomaly_score(model, centre), 0.5);
  EXPECT_GT(anomaly_score(model, far), 0.6);
}

TEST(IsolationForest, DuplicateRowScoresIdentically) {
  Matrix X = blob(60, 8);
  const std::vector<double> copy(X.row(10).begin(), X.row(10).end());
  X.append_row(copy);
  const auto model = fit_isolation_forest(X, 50, 256, 2);
  EXPECT_NEAR(anomaly_score(model, X.row(10)), anomaly_score(model, X.row(60)), 1e-9);
}

TEST(IsolationForest, EmptyInput) {
  try {
    fit_isolation_forest(Matrix(0, 2), 10, 10, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::EmptyInput);
  }
}

TEST(Contamination, Defaults) {
  const auto spec = ContaminationSpec::defaults();
  EXPECT_EQ(spec.fraction_for(stage_code(LifecycleStage::Graduated)), 0.01);
  EXPECT_EQ(spec.fraction_for(stage_code(LifecycleStage::Incubating)), 0.05);
  EXPECT_EQ(spec.fraction_for(stage_code(LifecycleStage::Sandbox)), 0.10);
  EXPECT_EQ(contamination_count(0.10, 101), 10u);
  EXPECT_EQ(contamination_count(0.01, 99), 0u);
}

TEST(FilterOutliers, ZeroContaminationKeepsEverything) {
  Dataset ds = labeled(blob(30, 1), 0);
  const Dataset other = labeled(blob(20, 2), 2);
  for (std::size_t i = 0; i < other.size(); ++i) ds.append(other.X.row(i), 2, "o" + std::to_string(i));
  ContaminationSpec spec;
  for (auto s : {LifecycleStage::Sandbox, LifecycleStage::Incubating, LifecycleStage::Graduated}) {
    spec.fraction[s] = 0.0;
  }
  const auto out = filter_class_outliers(ds, spec, 50, 1);
  EXPECT_EQ(out.kept, ds);
  EXPECT_TRUE(out.removed_rows.empty());
}

TEST(FilterOutliers, FloorRemovalKeepsOrder) {
  const Dataset ds = labeled(blob(101, 3), stage_code(LifecycleStage::Sandbox));
  const auto out = filter_class_outliers(ds, ContaminationSpec::defaults(), 50, 4);
  EXPECT_EQ(out.removed_rows.size(), 10u);
  EXPECT_EQ(out.kept.size(), 91u);
  EXPECT_TRUE(std::is_sorted(out.removed_rows.begin(), out.removed_rows.end()));
  std::size_t k = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (std::binary_search(out.removed_rows.begin(), out.removed_rows.end(), i)) continue;
    EXPECT_EQ(out.kept.row_ids[k++], ds.row_ids[i]);
  }
}

TEST(FilterOutliers, RemovesHighestScores) {
  const Dataset ds = labeled(blob(50, 9), 0);
  ContaminationSpec spec;
  spec.fraction[LifecycleStage::Sandbox] = 0.1;
  const auto out = filter_class_outliers(ds, spec, 40, 21);
  ASSERT_EQ(out.removed_rows.size(), 5u);
  auto radius = [&](std::size_t i) { return std::hypot(ds.X(i, 0), ds.X(i, 1)); };
  double removed = 0.0, kept = 0.0;
  for (auto i : out.removed_rows) removed += radius(i);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (!std::binary_search(out.removed_rows.begin(), out.removed_rows.end(), i)) kept += radius(i);
  }
  EXPECT_GT(removed / 5.0, kept / 45.0);
}

TEST(FilterOutliers, UnlabeledRowsRejected) {
  Dataset ds = labeled(blob(5, 1), 0);
  ds.y[2] = kUnlabeled;
  try {
    filter_class_outliers(ds, ContaminationSpec::defaults());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::UnlabeledRow);
  }
}

}  // namespace
}  // namespace osslc
