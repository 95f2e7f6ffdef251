#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "osslc/config.hpp"
#include "osslc/evaluate.hpp"
#include "osslc/features.hpp"
#include "osslc/learner.hpp"

namespace osslc {

/// Replaces every missing (NaN) cell with 0.
FeatureTable impute_zeros(FeatureTable table);

/// One row per archive subdirectory of `corpus_dir` (sorted by directory
/// name), each clipped to `window_end` before feature extraction.
FeatureTable extract_corpus_features(const std::filesystem::path& corpus_dir, Timestamp window_end,
                                     const FeatureOptions& options = {}, unsigned jobs = 1);

// Artifact file names inside a run's output directory.
inline constexpr const char* kManifestFile = "manifest.json";
inline constexpr const char* kModelFile = "model.json";
inline constexpr const char* kReportJsonFile = "report.json";
inline constexpr const char* kReportTextFile = "report.txt";
inline constexpr const char* kImportanceFile = "importance.csv";
inline constexpr const char* kRidgelineFile = "ridgeline.csv";
inline constexpr const char* kDiagnosticsFile = "diagnostics.json";

struct FamilyOutcome {
  Family family = Family::DecisionTree;
  Hyperparams hyperparams;
  double cv_mean = 0.0;
  std::vector<std::size_t> features;
  double sfs_score = 0.0;
  ClassificationReport test_report;
};

struct RunManifest {
  nlohmann::json config;
  nlohmann::json row_counts;
  std::vector<FamilyOutcome> candidates;
  std::size_t chosen = 0;
  std::vector<std::string> chosen_features;
  ClassificationReport report;
  // Empty when the chosen family has no impurity importances.
  std::vector<double> importance;
  std::vector<std::string> artifacts;
  nlohmann::json wall_clock;

  const FamilyOutcome& chosen_outcome() const { return candidates.at(chosen); }
};

/// Lexicographic over (accuracy, macro F1, weighted F1): a candidate wins
/// only when it leads by more than epsilon on the first metric that differs
/// by more than epsilon.
bool outperforms(const ClassificationReport& candidate, const ClassificationReport& incumbent, double epsilon);

/// Runs the whole training flow on a labeled table and writes every artifact
/// into config.output_dir. On failure the directory receives nothing.
RunManifest run_training(const RunConfig& config, const FeatureTable& corpus);

nlohmann::json manifest_to_json(const RunManifest& m);

struct Classification {
  std::string repo_id;
  int predicted = 0;
  // Follows the model's class order; empty for non-probabilistic models.
  std::vector<double> probabilities;
};

struct ClassifyResult {
  std::vector<int> classes;
  std::vector<Classification> rows;
  std::vector<std::string> ignored_columns;
};

/// Throws MissingFeatureColumn when the table lacks a selected feature.
ClassifyResult classify(const ModelDocument& doc, const FeatureTable& table);
ClassifyResult classify(const std::filesystem::path& model_path, const FeatureTable& table);
std::string classification_csv(const ClassifyResult& result);

}  // namespace osslc
