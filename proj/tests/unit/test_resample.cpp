#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "osslc/error.hpp"
#include "osslc/resample.hpp"
#include "osslc/rng.hpp"

namespace osslc {
namespace {

Dataset make(const std::vector<std::vector<double>>& rows, const std::vector<int>& y) {
  Dataset ds;
  ds.column_names = {"a", "b"};
  for (std::size_t i = 0; i < rows.size(); ++i) ds.append(rows[i], y[i], "r" + std::to_string(i));
  return ds;
}

Dataset clusters(const std::vector<std::size_t>& counts, double separation, std::uint64_t seed) {
  Rng rng(seed);
  Dataset ds;
  ds.column_names = {"a", "b"};
  for (std::size_t c = 0; c < counts.size(); ++c) {
    for (std::size_t i = 0; i < counts[c]; ++i) {
      const std::vector<double> x = {separation * static_cast<double>(c) + 0.3 * rng.normal(),
                                     0.3 * rng.normal()};
      ds.append(x, static_cast<int>(c), "c" + std::to_string(c) + "-" + std::to_string(i));
    }
  }
  return ds;
}

std::set<std::pair<std::size_t, std::size_t>> brute_links(const Dataset& ds) {
  auto nearest = [&](std::size_t i) {
    std::size_t best = i;
    double best_d = INFINITY;
    for (std::size_t j = 0; j < ds.size(); ++j) {
      if (j == i) continue;
      const double d = squared_distance(ds.X.row(i), ds.X.row(j));
      if (d < best_d) best_d = d, best = j;
    }
    return best;
  };
  std::set<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto j = nearest(i);
    if (i < j && ds.y[i] != ds.y[j] && nearest(j) == i) out.insert({i, j});
  }
  return out;
}

TEST(Smote, BalancedInputUnchanged) {
  const auto ds = clusters({8, 8, 8}, 5.0, 1);
  EXPECT_EQ(smote(ds, 5, 3), ds);
}

TEST(Smote, SegmentPoint) {
  const auto ds = make({{0, 0}, {1, 1}, {5, 5}, {6, 6}, {7, 7}}, {0, 0, 1, 1, 1});
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto out = smote(ds, 5, seed);
    ASSERT_EQ(out.size(), 6u);
    const double x = out.X(5, 0), y = out.X(5, 1);
    EXPECT_EQ(x, y);
    EXPECT_GE(x, 0.0);
    EXPECT_LE(x, 1.0);
    EXPECT_EQ(out.y[5], 0);
    EXPECT_EQ(out.row_ids[5], "synthetic:0:0");
  }
}

TEST(Smote, GrowsEveryClassToMajority) {
  const auto ds = clusters({4, 6, 21}, 3.0, 2);
  const auto out = smote(ds, 5, 7);
  const auto counts = out.class_counts();
  EXPECT_EQ(counts.at(0), 21u);
  EXPECT_EQ(counts.at(1), 21u);
  EXPECT_EQ(counts.at(2), 21u);
  for (std::size_t i = 0; i < ds.size(); ++i) EXPECT_EQ(out.row_ids[i], ds.row_ids[i]);
}

TEST(Smote, SingletonMinorityRejected) {
  const auto ds = make({{0, 0}, {1, 1}, {2, 2}}, {0, 1, 1});
  try {
    smote(ds, 5, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ClassTooSmall);
  }
}

TEST(Tomek, SeparatedClustersHaveNoLinks) {
  EXPECT_TRUE(tomek_links(clusters({10, 10}, 50.0, 3)).empty());
}

TEST(Tomek, TwoPoints) {
  const auto links = tomek_links(make({{0, 0}, {1, 0}}, {0, 1}));
  ASSERT_EQ(links.size(), 1u);
  EXPECT_EQ(links[0], std::make_pair(std::size_t{0}, std::size_t{1}));
}

TEST(Tomek, MatchesBruteForce) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto ds = clusters({10, 10}, 0.5, 100 + seed);
    const auto links = tomek_links(ds);
    const std::set<std::pair<std::size_t, std::size_t>> got(links.begin(), links.end());
    EXPECT_EQ(got, brute_links(ds)) << seed;
  }
}

TEST(SmoteTomek, SeparatedBalancedUnchanged) {
  const auto ds = clusters({12, 12}, 50.0, 4);
  EXPECT_EQ(smote_tomek(ds, 5, 1), ds);
}

TEST(SmoteTomek, InterleavedLeavesNoLinks) {
  const auto ds = clusters({15, 25}, 0.4, 5);
  const auto out = smote_tomek(ds, 5, 2);
  EXPECT_TRUE(tomek_links(out).empty());
}

TEST(SmoteTomek, CountsDifferByAtMostRemovedLinks) {
  const auto ds = clusters({4, 6, 21}, 1.0, 6);
  const auto balanced = smote(ds, 5, 9);
  const auto out = smote_tomek(ds, 5, 9);
  const std::size_t removed = balanced.size() - out.size();
  const auto counts = out.class_counts();
  for (const auto& [c, n] : counts) {
    EXPECT_LE(21 - n, removed) << c;
  }
}

TEST(SmoteTomek, RemoveMajorityPolicyKeepsMinority) {
  const auto ds = clusters({10, 10}, 0.4, 8);
  const auto out = smote_tomek(ds, 5, 1, TomekPolicy::RemoveMajority);
  EXPECT_LE(out.size(), ds.size());
  EXPECT_TRUE(tomek_links(out).empty());
}

TEST(NearestNeighbors, TiesGoToLowerIndex) {
  const Matrix X = Matrix::from_rows({{0, 0}, {1, 0}, {-1, 0}, {0, 2}});
  const auto nn = nearest_neighbors(X, 0, {1, 2, 3}, 2);
  EXPECT_EQ(nn, (std::vector<std::size_t>{1, 2}));
}

}  // namespace
}  // namespace osslc
