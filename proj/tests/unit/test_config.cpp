#include <gtest/gtest.h>

#include "osslc/config.hpp"
#include "osslc/error.hpp"

namespace osslc {
namespace {

TEST(Config, DefaultsMatchDocumentedValues) {
  const RunConfig c;
  EXPECT_EQ(c.cv.k, 10);
  EXPECT_EQ(c.cv.repeats, 10);
  EXPECT_EQ(c.test_fraction, 0.2);
  EXPECT_EQ(c.smote_k, 5);
  EXPECT_EQ(c.recency_days, 365);
  EXPECT_EQ(c.family_tie_epsilon, 0.005);
  EXPECT_EQ(format_rfc3339(c.window_end), "2023-12-31T23:59:59Z");
  EXPECT_EQ(c.families.size(), 4u);
  EXPECT_NO_THROW(c.check());
}

TEST(Config, ParsesKeys) {
  const auto c = parse_config(
      "# comment\n"
      "seed = 12\n"
      "\n"
      "cv.k = 5\n"
      "cv.scoring = macro_f1\n"
      "contamination.sandbox = 0.2\n"
      "families = [decision_tree, svm_rbf]\n"
      "sfs = false\n"
      "paths.output = \"out dir\"\n"
      "grid.decision_tree.max_leaf_nodes = [none, 10]\n");
  EXPECT_EQ(c.seed, 12u);
  EXPECT_EQ(c.cv.k, 5);
  EXPECT_EQ(c.cv.scoring, Scoring::MacroF1);
  EXPECT_EQ(c.contamination.fraction_for(0), 0.2);
  EXPECT_EQ(c.families, (std::vector<Family>{Family::DecisionTree, Family::SvmRbf}));
  EXPECT_FALSE(c.sfs);
  EXPECT_EQ(c.output_dir, "out dir");
  const auto& g = std::get<TreeGrid>(c.grids.at(Family::DecisionTree));
  EXPECT_EQ(g.max_leaf_nodes, (std::vector<std::optional<int>>{std::nullopt, 10}));
}

TEST(Config, RoundTrip) {
  auto c = parse_config(
      "seed = 99\ncv.repeats = 3\ntest_fraction = 0.25\njobs = 2\n"
      "grid.svm_rbf.C = [0.5, 2]\nwindow_end = 2022-06-30T00:00:00Z\n");
  const auto text = config_to_string(c);
  const auto again = parse_config(text);
  EXPECT_EQ(config_to_string(again), text);
  EXPECT_EQ(config_to_json(again), config_to_json(c));
  EXPECT_EQ(again.seed, 99u);
  EXPECT_EQ(std::get<SvmGrid>(again.grids.at(Family::SvmRbf)).C, (std::vector<double>{0.5, 2}));
}

TEST(Config, UnknownKeyNamesLine) {
  try {
    parse_config("seed = 1\nbogus = 2\n", "run.cfg");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ConfigError);
    EXPECT_NE(std::string(e.what()).find("run.cfg:2"), std::string::npos) << e.what();
  }
}

TEST(Config, RejectsBadValues) {
  try {
    parse_config("cv.k = 1\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InvalidHyperparam);
  }
  for (const char* text : {"test_fraction = 1.5\n", "cv.scoring = auc\n", "seed\n",
                           "families = [knn]\n"}) {
    try {
      parse_config(text);
      FAIL() << text;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::ConfigError) << text;
    }
  }
}

}  // namespace
}  // namespace osslc
