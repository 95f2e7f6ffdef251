#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "osslc/diagnostics.hpp"
#include "osslc/error.hpp"
#include "osslc/rng.hpp"

namespace osslc {
namespace {

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

std::vector<double> ranks_oracle(const std::vector<double>& v) {
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    double less = 0, equal = 0;
    for (double w : v) less += w < v[i], equal += w == v[i];
    r[i] = less + (equal + 1.0) / 2.0;
  }
  return r;
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

TEST(Spearman, MonotoneAndReversed) {
  Matrix X(12, 3);
  for (std::size_t i = 0; i < 12; ++i) {
    const double x = static_cast<double>(i) - 5.5;
    X(i, 0) = x;
    X(i, 1) = x * x * x;
    X(i, 2) = -x;
  }
  const auto s = spearman_matrix(X);
  EXPECT_NEAR(s.rho(0, 1), 1.0, 1e-12);
  EXPECT_NEAR(s.rho(0, 2), -1.0, 1e-12);
  EXPECT_EQ(s.rho(1, 1), 1.0);
}

TEST(Spearman, MatchesRankPearsonOracle) {
  Rng rng(3);
  Matrix X(15, 4);
  for (std::size_t r = 0; r < 15; ++r)
    for (std::size_t c = 0; c < 4; ++c) X(r, c) = std::round(3.0 * rng.normal());
  const auto s = spearman_matrix(X);
  for (std::size_t a = 0; a < 4; ++a)
    for (std::size_t b = 0; b < 4; ++b) {
      EXPECT_NEAR(s.rho(a, b), pearson(ranks_oracle(X.column(a)), ranks_oracle(X.column(b))), 1e-9);
    }
}

TEST(Spearman, ConstantColumnFlagged) {
  Matrix X = Matrix::from_rows({{1, 7}, {2, 7}, {3, 7}});
  const auto s = spearman_matrix(X);
  EXPECT_TRUE(s.constant[1]);
  EXPECT_FALSE(s.constant[0]);
  EXPECT_EQ(s.rho(0, 1), 0.0);
  EXPECT_EQ(kind_of([] { spearman_matrix(Matrix(1, 2)); }), ErrorKind::EmptyInput);
}

TEST(AverageRanks, Ties) {
  EXPECT_EQ(average_ranks({10, 20, 10, 30}), (std::vector<double>{1.5, 3, 1.5, 4}));
}

struct ShapiroCase {
  const char* name;
  std::vector<double> x;
  double w;
  double p;
};

// Reference values from scipy.stats.shapiro.
const std::vector<ShapiroCase> kShapiroCases = {
    {"three", {1.0, 2.0, 4.0}, 0.9642857142857142, 0.6368868450289689},
    {"normal_scores",
     {-1.54663527139923, -1.0004905456193152, -0.6554235052344266, -0.3754617702355184,
      -0.12258084388880242, 0.12258084388880255, 0.3754617702355184, 0.6554235052344266,
      1.0004905456193152, 1.54663527139923},
     0.9965048684184032, 0.999961373132172},
    {"skewed",
     {2.797866, 5.165077, 3.14785,  0.37788,  0.248379, 1.069505, 2.366355, 1.663938, 6.112193,
      2.118786, 1.896025, 0.481272, 0.330312, 4.412342, 1.050128, 2.251328, 0.25248,  0.646378,
      0.27497,  0.460391, 2.467149, 0.227505, 0.586201, 1.177965, 0.512492, 0.77702,  0.801026,
      1.519131, 0.649694, 1.312929, 1.058464, 1.528932, 1.252252, 5.247145, 0.514955, 3.317419,
      0.668571, 0.383688, 3.357493, 0.644355, 0.678659, 0.249403, 0.122677, 1.885703, 0.31184,
      2.177708, 6.348175, 0.891546, 0.324129, 1.483196},
     0.7979366092068977, 7.861130723554397e-07},
    {"normal",
     {0.761728, -0.26179, 0.017464, 1.335271, 1.265452, 0.709978, -0.866401, -0.053676, 0.602917,
      -0.211866, -0.610018, -0.765389, -0.632009, -0.671605, -0.451111, 1.145677, -0.800642,
      0.886902, 0.417585, 0.13975, -0.827402, -0.456694, 1.973555, 0.099068, 0.538208},
     0.9358938255506056, 0.11895271578023087},
    {"uniform",
     {0.456954, 0.589075, 0.146394, 0.801959, 0.379303, 0.409816, 0.565821, 0.260716, 0.436358,
      0.134819, 0.702891, 0.100561},
     0.9556204209029533, 0.7199692277958307},
};

TEST(ShapiroWilk, ReferenceValues) {
  for (const auto& c : kShapiroCases) {
    const auto r = shapiro_wilk(c.x);
    EXPECT_NEAR(r.w, c.w, 1e-4) << c.name;
    EXPECT_NEAR(r.p, c.p, std::max(1e-3 * c.p, 1e-9)) << c.name;
  }
}

TEST(ShapiroWilk, NormalScoresNearOne) {
  EXPECT_GE(shapiro_wilk(kShapiroCases[1].x).w, 0.99);
  EXPECT_LT(shapiro_wilk(kShapiroCases[2].x).p, 0.01);
}

TEST(ShapiroWilk, Degenerate) {
  EXPECT_EQ(kind_of([] { shapiro_wilk({5, 5, 5, 5}); }), ErrorKind::ConstantColumn);
  EXPECT_EQ(kind_of([] { shapiro_wilk({1, 2}); }), ErrorKind::SampleSizeOutOfRange);
}

TEST(BoxsM, IdenticalGeneratorsGiveNonNegativeM) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed);
    Matrix X(200, 2);
    std::vector<int> y(200);
    for (std::size_t i = 0; i < 200; ++i) {
      X(i, 0) = rng.normal();
      X(i, 1) = rng.normal();
      y[i] = static_cast<int>(i % 2);
    }
    const auto r = boxs_m(X, y);
    EXPECT_GE(r.m, 0.0);
    EXPECT_GE(r.p, 0.0);
    EXPECT_LE(r.p, 1.0);
    EXPECT_EQ(r.df, 3.0);
  }
}

TEST(BoxsM, UnequalVariancesDetected) {
  Rng rng(4);
  Matrix X(400, 2);
  std::vector<int> y(400);
  for (std::size_t i = 0; i < 400; ++i) {
    const double s = i < 200 ? 1.0 : 3.0;
    X(i, 0) = s * rng.normal();
    X(i, 1) = s * rng.normal();
    y[i] = i < 200 ? 0 : 1;
  }
  EXPECT_LT(boxs_m(X, y).p, 0.01);
}

TEST(BoxsM, TooFewRowsIsSingular) {
  Matrix X = Matrix::from_rows({{1, 2, 3}, {2, 1, 0}, {0, 1, 1}, {3, 3, 1}, {1, 0, 2}, {2, 2, 2}});
  const std::vector<int> y = {0, 0, 1, 1, 1, 1};
  EXPECT_EQ(kind_of([&] { boxs_m(X, y); }), ErrorKind::SingularCovariance);
}

TEST(Quantile, LinearInterpolation) {
  EXPECT_DOUBLE_EQ(quantile({1, 2, 3, 4}, 0.5), 2.5);
  EXPECT_DOUBLE_EQ(quantile({4, 1, 3, 2}, 0.25), 1.75);
  EXPECT_EQ(quantile_grid({0, 10}, 3), (std::vector<double>{0, 5, 10}));
}

Dataset step_data() {
  Dataset ds;
  ds.column_names = {"x", "ignored"};
  Rng rng(5);
  for (int i = 0; i < 20; ++i) {
    const double x = i;
    ds.append(std::vector<double>{x, rng.normal()}, i < 10 ? 0 : 1, "r");
  }
  return ds;
}

TEST(PartialDependence, IgnoredFeatureIsFlat) {
  const auto ds = step_data();
  TreeHyperparams hp;
  hp.max_depth = 1;
  const auto m = train(hp, ds, 0);
  const auto pd = partial_dependence(m, ds.X, 1, 10);
  for (const auto& curve : pd.curves)
    for (double v : curve) EXPECT_DOUBLE_EQ(v, curve.front());
}

TEST(PartialDependence, SingleSplitGivesOneJump) {
  const auto ds = step_data();
  TreeHyperparams hp;
  hp.max_depth = 1;
  const auto m = train(hp, ds, 0);
  const auto pd = partial_dependence(m, ds.X, 0, 20);
  ASSERT_EQ(pd.classes, (std::vector<int>{0, 1}));
  int jumps = 0;
  for (std::size_t g = 1; g < pd.grid.size(); ++g) {
    if (pd.curves[1][g] != pd.curves[1][g - 1]) {
      ++jumps;
      EXPECT_GT(pd.grid[g], 9.5);
      EXPECT_LE(pd.grid[g - 1], 9.5);
    }
  }
  EXPECT_EQ(jumps, 1);
  EXPECT_EQ(pd.curves[1].front(), 0.0);
  EXPECT_EQ(pd.curves[1].back(), 1.0);
}

double trapezoid(const RidgelineClass& c) {
  double s = 0.0;
  for (std::size_t i = 1; i < c.x.size(); ++i) {
    s += 0.5 * (c.density[i] + c.density[i - 1]) * (c.x[i] - c.x[i - 1]);
  }
  return s;
}

TEST(Ridgeline, DensitiesIntegrateToOne) {
  Rng rng(6);
  std::map<int, std::vector<double>> by_class;
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < 40; ++i) by_class[c].push_back(10.0 * c + rng.normal());
  const auto s = ridgeline_series("f", by_class);
  ASSERT_EQ(s.classes.size(), 3u);
  EXPECT_EQ(s.classes[0].label, 0);
  EXPECT_EQ(s.classes[2].label, 2);
  for (const auto& c : s.classes) {
    EXPECT_EQ(c.x.size(), kRidgelineGridPoints);
    EXPECT_NEAR(trapezoid(c), 1.0, 0.01);
    EXPECT_LE(c.q1, c.q2);
    EXPECT_LE(c.q2, c.q3);
  }
}

TEST(Ridgeline, ConcentratedValues) {
  std::map<int, std::vector<double>> by_class;
  by_class[0] = {0, 0, 0, 0, 1e-9, 0};
  const auto s = ridgeline_series("f", by_class);
  const auto& c = s.classes[0];
  EXPECT_NEAR(c.q1, 0.0, 1e-9);
  EXPECT_NEAR(c.q3, 0.0, 1e-9);
  const auto peak = std::max_element(c.density.begin(), c.density.end()) - c.density.begin();
  EXPECT_NEAR(c.x[peak], 0.0, 2.0 * (c.x[1] - c.x[0]) + 1e-9);
}

TEST(Ridgeline, BimodalHasTwoPeaks) {
  std::map<int, std::vector<double>> by_class;
  Rng rng(7);
  for (int i = 0; i < 100; ++i) by_class[1].push_back((i % 2 ? 10.0 : -10.0) + rng.normal());
  const auto s = ridgeline_series("f", by_class);
  const auto& d = s.classes[0].density;
  int maxima = 0;
  for (std::size_t i = 1; i + 1 < d.size(); ++i) maxima += d[i] > d[i - 1] && d[i] >= d[i + 1];
  EXPECT_EQ(maxima, 2);
}

TEST(Ridgeline, BandsAndErrors) {
  RidgelineClass c;
  c.q1 = 1;
  c.q2 = 2;
  c.q3 = 3;
  EXPECT_EQ(c.band(0.5), 1);
  EXPECT_EQ(c.band(1.5), 2);
  EXPECT_EQ(c.band(2.5), 3);
  EXPECT_EQ(c.band(3.5), 4);
  std::map<int, std::vector<double>> tiny = {{0, {1.0}}};
  EXPECT_EQ(kind_of([&] { ridgeline_series("f", tiny); }), ErrorKind::ClassTooSmall);
}

TEST(Ridgeline, CsvHeader) {
  std::map<int, std::vector<double>> by_class = {{0, {1, 2, 3}}, {2, {4, 5, 6}}};
  const auto csv = ridgeline_csv({ridgeline_series("stars_count", by_class)});
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "feature,class,x,density,quartile_band");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 2 * static_cast<long>(kRidgelineGridPoints));
  EXPECT_NE(ridgeline_svg(ridgeline_series("stars_count", by_class)).find("<svg"), std::string::npos);
}

}  // namespace
}  // namespace osslc
