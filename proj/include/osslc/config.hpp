#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "osslc/learner.hpp"
#include "osslc/outliers.hpp"
#include "osslc/selection.hpp"
#include "osslc/timeutil.hpp"

namespace osslc {

struct RunConfig {
  std::uint64_t seed = 0;
  Timestamp window_end;
  ContaminationSpec contamination = ContaminationSpec::defaults();
  double test_fraction = 0.2;
  CvSpec cv;
  int smote_k = 5;
  int recency_days = 365;
  int isolation_trees = kDefaultIsolationTrees;
  std::vector<Family> families = {Family::DecisionTree, Family::RandomForest, Family::GradientBoosting,
                                  Family::SvmRbf};
  std::map<Family, Grid> grids;
  bool sfs = true;
  double family_tie_epsilon = 0.005;
  unsigned jobs = 1;
  std::filesystem::path corpus_dir;
  std::filesystem::path features_path;
  std::filesystem::path labels_path;
  std::filesystem::path output_dir;

  RunConfig();
  void check() const;
};

/// Grammar, one entry per line:
///   key = value        value: number | true | false | none | word | "string" | [v, v, ...]
///   # comment          blank lines ignored
/// Unknown keys are rejected with ConfigError naming the line.
RunConfig parse_config(const std::string& text, const std::string& source = "<config>");
RunConfig load_config(const std::filesystem::path& path);

/// Canonical text form; parse_config(config_to_string(c)) reproduces c exactly.
std::string config_to_string(const RunConfig& config);
nlohmann::json config_to_json(const RunConfig& config);

}  // namespace osslc
