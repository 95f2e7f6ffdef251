#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "osslc/error.hpp"
#include "osslc/evaluate.hpp"

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

const std::vector<int> kLabels = {0, 1, 2};

TEST(ConfusionMatrix, IdentityIsDiagonal) {
  const std::vector<int> y = {0, 1, 2, 2, 1, 0, 0};
  const auto m = confusion_matrix(y, y, kLabels);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) {
      if (i != j) EXPECT_EQ(m.counts[i][j], 0);
    }
  EXPECT_EQ(m.counts[0][0], 3);
  EXPECT_EQ(m.total(), 7);
}

TEST(ConfusionMatrix, SinglePredictedClass) {
  const auto m = confusion_matrix({0, 1, 2, 1}, {1, 1, 1, 1}, kLabels);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(m.counts[i][0], 0);
    EXPECT_EQ(m.counts[i][2], 0);
  }
}

TEST(ConfusionMatrix, MatchesPairCounting) {
  std::mt19937 gen(5);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<int> t(1 + gen() % 60), p(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = gen() % 3, p[i] = gen() % 3;
    const auto m = confusion_matrix(t, p, kLabels);
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) {
        std::int64_t n = 0;
        for (std::size_t i = 0; i < t.size(); ++i) n += t[i] == a && p[i] == b;
        EXPECT_EQ(m.counts[a][b], n);
      }
  }
}

TEST(ConfusionMatrix, Errors) {
  EXPECT_EQ(kind_of([] { confusion_matrix({0, 1}, {0}, kLabels); }), ErrorKind::LengthMismatch);
  EXPECT_EQ(kind_of([] { confusion_matrix({0, 5}, {0, 1}, kLabels); }), ErrorKind::UnknownLabel);
}

ConfusionMatrix table_matrix() {
  // Rows and columns in report order: graduated, incubating, sandbox.
  ConfusionMatrix m;
  m.labels = {2, 1, 0};
  m.counts = {{3, 0, 1}, {0, 5, 1}, {0, 1, 20}};
  return m;
}

TEST(Report, PublishedMatrix) {
  const auto r = classification_report(table_matrix());
  EXPECT_NEAR(r.accuracy, 28.0 / 31.0, 1e-12);
  EXPECT_EQ(format_fixed2(r.accuracy), "0.90");
  ASSERT_EQ(r.classes.size(), 3u);
  const auto& grads = r.classes[0];
  EXPECT_EQ(grads.label, 2);
  EXPECT_EQ(format_fixed2(grads.precision), "1.00");
  EXPECT_EQ(format_fixed2(grads.recall), "0.75");
  EXPECT_EQ(format_fixed2(grads.f1), "0.86");
  EXPECT_EQ(grads.support, 4);
  EXPECT_EQ(format_fixed2(r.classes[1].f1), "0.83");
  EXPECT_EQ(format_fixed2(r.classes[2].precision), "0.91");
  EXPECT_EQ(format_fixed2(r.classes[2].recall), "0.95");
  EXPECT_EQ(format_fixed2(r.macro.f1), "0.87");
  EXPECT_EQ(format_fixed2(r.weighted.f1), "0.90");
  EXPECT_FALSE(r.zero_division);
  EXPECT_NE(render_report(r).find("0.90"), std::string::npos);
}

TEST(Report, PerfectMatrix) {
  ConfusionMatrix m{{0, 1, 2}, {{4, 0, 0}, {0, 6, 0}, {0, 0, 21}}};
  const auto r = classification_report(m);
  EXPECT_EQ(r.accuracy, 1.0);
  for (const auto& c : r.classes) {
    EXPECT_EQ(c.precision, 1.0);
    EXPECT_EQ(c.recall, 1.0);
    EXPECT_EQ(c.f1, 1.0);
  }
  EXPECT_EQ(r.macro.f1, 1.0);
  EXPECT_EQ(r.weighted.f1, 1.0);
}

TEST(Report, AbsentPredictionClassHasZeroPrecision) {
  const auto m = confusion_matrix({0, 1, 2, 2}, {0, 1, 1, 1}, kLabels);
  const auto r = classification_report(m);
  const auto it = std::find_if(r.classes.begin(), r.classes.end(), [](auto& c) { return c.label == 2; });
  ASSERT_NE(it, r.classes.end());
  EXPECT_EQ(it->precision, 0.0);
  EXPECT_TRUE(it->precision_undefined);
  EXPECT_TRUE(r.zero_division);
  EXPECT_NO_THROW(render_report(r));
  EXPECT_EQ(report_to_json(r).at("zero_division"), true);
}

TEST(Report, EmptyMatrix) {
  ConfusionMatrix m{{0, 1}, {{0, 0}, {0, 0}}};
  EXPECT_EQ(kind_of([&] { classification_report(m); }), ErrorKind::EmptyMatrix);
}

TEST(Report, InvariantUnderPermutation) {
  std::mt19937 gen(9);
  std::vector<int> t(80), p(80);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = gen() % 3, p[i] = gen() % 3;
  const auto a = classification_report(confusion_matrix(t, p, kLabels));
  std::vector<std::size_t> idx(t.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::shuffle(idx.begin(), idx.end(), gen);
  std::vector<int> t2, p2;
  for (auto i : idx) t2.push_back(t[i]), p2.push_back(p[i]);
  const auto b = classification_report(confusion_matrix(t2, p2, kLabels));
  EXPECT_EQ(a.accuracy, b.accuracy);
  EXPECT_EQ(a.macro.f1, b.macro.f1);
  EXPECT_EQ(a.weighted.f1, b.weighted.f1);
}

TEST(Report, WeightedAverageIsSupportWeighted) {
  const auto r = classification_report(table_matrix());
  double f1 = 0.0;
  for (const auto& c : r.classes) f1 += c.f1 * static_cast<double>(c.support);
  EXPECT_NEAR(r.weighted.f1, f1 / 31.0, 1e-12);
  EXPECT_EQ(r.weighted.support, 31);
}

TEST(Rounding, HalfToEven) {
  EXPECT_EQ(format_fixed2(0.845), "0.84");
  EXPECT_EQ(format_fixed2(0.835), "0.84");
  EXPECT_EQ(format_fixed2(0.8451), "0.85");
  EXPECT_EQ(format_fixed2(1.0), "1.00");
  EXPECT_DOUBLE_EQ(round_half_even(2.5, 0), 2.0);
  EXPECT_DOUBLE_EQ(round_half_even(3.5, 0), 4.0);
}

TEST(Report, LabelOrderAndNames) {
  EXPECT_EQ(report_label_order(), (std::vector<int>{2, 1, 0}));
  EXPECT_EQ(report_class_name(2), "grads");
  EXPECT_EQ(report_class_name(0), "sandbox");
}

}  // namespace
}  // namespace osslc
