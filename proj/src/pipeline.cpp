#include "osslc/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numeric>
#include <set>
#include <sstream>

#include "osslc/diagnostics.hpp"
#include "osslc/error.hpp"
#include "osslc/outliers.hpp"
#include "osslc/parallel.hpp"
#include "osslc/selection.hpp"

namespace osslc {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::IoError, "cannot write " + path.string());
  out << text;
  if (!out) fail(ErrorKind::IoError, "write failed for " + path.string());
}

FeatureTable dataset_to_table(const Dataset& ds) {
  FeatureTable t;
  t.column_names = ds.column_names;
  t.repo_ids = ds.row_ids;
  t.values = ds.X;
  for (int label : ds.y) t.labels.push_back(stage_from_code(label));
  return t;
}

class StageClock {
 public:
  template <typename F>
  auto run(const std::string& name, F&& body) {
    const auto start = std::chrono::steady_clock::now();
    try {
      if constexpr (std::is_void_v<decltype(body())>) {
        body();
        record(name, start);
      } else {
        auto result = body();
        record(name, start);
        return result;
      }
    } catch (const Error& e) {
      throw e.annotated("stage " + name);
    }
  }

  json timings;

 private:
  void record(const std::string& name, std::chrono::steady_clock::time_point start) {
    timings[name] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

std::vector<int> report_labels_for(const Dataset& ds) {
  const auto present = ds.classes();
  std::vector<int> labels;
  for (int l : report_label_order())
    if (std::find(present.begin(), present.end(), l) != present.end()) labels.push_back(l);
  for (int l : present)
    if (std::find(labels.begin(), labels.end(), l) == labels.end()) labels.push_back(l);
  return labels;
}

std::vector<std::size_t> ridgeline_features(const std::vector<double>& importance, std::size_t n) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  if (!importance.empty()) {
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return importance[a] > importance[b]; });
  }
  order.resize(std::min<std::size_t>(4, n));
  return order;
}

json counts_json(const Dataset& ds) {
  json j = json::object();
  for (const auto& [label, n] : ds.class_counts()) j[std::string(stage_name(stage_from_code(label)))] = n;
  j["total"] = ds.size();
  return j;
}

class StagingDir {
 public:
  explicit StagingDir(fs::path target) : target_(std::move(target)) {
    staging_ = target_;
    staging_ += ".partial";
    fs::remove_all(staging_);
    fs::create_directories(staging_);
  }
  ~StagingDir() {
    std::error_code ec;
    if (!committed_) fs::remove_all(staging_, ec);
  }
  const fs::path& path() const { return staging_; }

  void commit() {
    fs::create_directories(target_);
    for (const auto& entry : fs::directory_iterator(staging_)) {
      fs::rename(entry.path(), target_ / entry.path().filename());
    }
    fs::remove_all(staging_);
    committed_ = true;
  }

 private:
  fs::path target_;
  fs::path staging_;
  bool committed_ = false;
};

}  // namespace

FeatureTable impute_zeros(FeatureTable table) {
  Matrix& m = table.values;
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (double& v : m.row(r))
      if (std::isnan(v)) v = 0.0;
  return table;
}

FeatureTable extract_corpus_features(const fs::path& corpus_dir, Timestamp window_end, const FeatureOptions& options,
                                     unsigned jobs) {
  if (!fs::is_directory(corpus_dir)) fail(ErrorKind::MissingFile, "corpus directory not found: " + corpus_dir.string());
  std::vector<fs::path> archives;
  for (const auto& entry : fs::directory_iterator(corpus_dir)) {
    if (entry.is_directory() && fs::exists(entry.path() / kMetaFile)) archives.push_back(entry.path());
  }
  std::sort(archives.begin(), archives.end());
  std::vector<FeatureVector> rows(archives.size());
  parallel_for(archives.size(), jobs, [&](std::size_t i) {
    try {
      rows[i] = compute_features(clip_to_window(load_archive(archives[i]), window_end), options);
    } catch (const Error& e) {
      throw e.annotated(archives[i].string());
    }
  });
  return features_to_table(rows);
}

bool outperforms(const ClassificationReport& candidate, const ClassificationReport& incumbent, double epsilon) {
  const double a[3] = {candidate.accuracy, candidate.macro.f1, candidate.weighted.f1};
  const double b[3] = {incumbent.accuracy, incumbent.macro.f1, incumbent.weighted.f1};
  for (int i = 0; i < 3; ++i) {
    if (a[i] > b[i] + epsilon) return true;
    if (b[i] > a[i] + epsilon) return false;
  }
  return false;
}

RunManifest run_training(const RunConfig& config_in, const FeatureTable& corpus) {
  RunConfig config = config_in;
  config.check();
  config.cv.seed = config.seed;
  config.cv.smote_k = config.smote_k;
  config.cv.jobs = config.jobs;
  if (config.output_dir.empty()) fail(ErrorKind::ConfigError, "no output directory configured");

  RunManifest manifest;
  manifest.config = config_to_json(config);
  StageClock clock;
  StagingDir staging(config.output_dir);
  const fs::path dir = staging.path();

  const Dataset labeled = clock.run("impute", [&] {
    FeatureTable table = impute_zeros(corpus);
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < table.size(); ++i)
      if (table.labels[i]) keep.push_back(i);
    FeatureTable t;
    t.column_names = table.column_names;
    for (std::size_t i : keep) {
      t.repo_ids.push_back(table.repo_ids[i]);
      t.labels.push_back(table.labels[i]);
      t.values.append_row(table.values.row(i));
    }
    if (t.values.rows() == 0) t.values = Matrix(0, table.column_names.size());
    manifest.row_counts["input"] = table.size();
    manifest.row_counts["unlabeled_dropped"] = table.size() - keep.size();
    if (keep.empty()) fail(ErrorKind::EmptyInput, "no labeled rows in the feature table");
    return table_to_dataset(t);
  });
  manifest.row_counts["labeled"] = counts_json(labeled);

  const Dataset filtered = clock.run("outliers", [&] {
    auto result = filter_class_outliers(labeled, config.contamination, config.isolation_trees, config.seed);
    for (const auto& [label, n] : result.kept.class_counts()) {
      if (n < static_cast<std::size_t>(config.cv.k)) {
        fail(ErrorKind::ClassTooSmall, "class " + std::string(stage_name(stage_from_code(label))) + " has " +
                                           std::to_string(n) + " rows after outlier filtering; cv.k=" +
                                           std::to_string(config.cv.k) + " needs at least " +
                                           std::to_string(config.cv.k) + " (lower cv.k or add projects)");
      }
    }
    manifest.row_counts["outliers_removed"] = result.removed_rows.size();
    return std::move(result.kept);
  });
  manifest.row_counts["filtered"] = counts_json(filtered);
  write_text(dir / "filtered.csv", feature_csv_string(dataset_to_table(filtered)));

  const SplitResult split = clock.run("split", [&] { return stratified_split(filtered, config.test_fraction, config.seed); });
  manifest.row_counts["train"] = counts_json(split.train);
  manifest.row_counts["test"] = counts_json(split.test);
  write_text(dir / "train.csv", feature_csv_string(dataset_to_table(split.train)));
  write_text(dir / "test.csv", feature_csv_string(dataset_to_table(split.test)));

  auto families = config.families;
  std::sort(families.begin(), families.end());
  families.erase(std::unique(families.begin(), families.end()), families.end());
  const auto labels = report_labels_for(filtered);
  std::vector<ModelDocument> docs;
  json candidates = json::array();
  for (Family family : families) {
    const std::string name(family_name(family));
    FamilyOutcome outcome;
    outcome.family = family;
    const auto grid = clock.run("grid_search:" + name, [&] { return grid_search(config.grids.at(family), split.train, config.cv); });
    write_text(dir / ("grid_" + name + ".csv"), grid_runs_csv(grid));
    outcome.hyperparams = grid.best_entry().hyperparams;
    outcome.cv_mean = grid.best_entry().mean;
    json sfs_steps = json::array();
    if (config.sfs) {
      const auto traj = clock.run("sfs:" + name, [&] { return forward_sfs(outcome.hyperparams, split.train, config.cv); });
      outcome.features = traj.chosen;
      outcome.sfs_score = traj.chosen_score;
      for (const auto& s : traj.steps) {
        sfs_steps.push_back({{"added", split.train.column_names[s.added_feature]}, {"size", s.features.size()},
                             {"mean_score", s.mean_score}});
      }
    } else {
      outcome.features.resize(split.train.num_features());
      std::iota(outcome.features.begin(), outcome.features.end(), 0);
      outcome.sfs_score = outcome.cv_mean;
    }
    auto doc = clock.run("finalize:" + name, [&] {
      return finalize(outcome.hyperparams, outcome.features, split.train, {config.smote_k, config.seed});
    });
    const auto test = split.test.select_features(outcome.features);
    outcome.test_report = classification_report(confusion_matrix(test.y, predict(doc.model, test.X), labels));
    candidates.push_back({{"family", name},
                          {"hyperparams", hyperparams_to_json(outcome.hyperparams)},
                          {"grid_size", grid.entries.size()},
                          {"cv_mean", outcome.cv_mean},
                          {"cv_std", grid.best_entry().std},
                          {"sfs", sfs_steps},
                          {"features", doc.selected_features},
                          {"test_accuracy", outcome.test_report.accuracy},
                          {"test_macro_f1", outcome.test_report.macro.f1},
                          {"test_weighted_f1", outcome.test_report.weighted.f1}});
    manifest.candidates.push_back(std::move(outcome));
    docs.push_back(std::move(doc));
  }

  for (std::size_t i = 1; i < manifest.candidates.size(); ++i) {
    if (outperforms(manifest.candidates[i].test_report, manifest.candidates[manifest.chosen].test_report,
                    config.family_tie_epsilon)) {
      manifest.chosen = i;
    }
  }
  ModelDocument& doc = docs[manifest.chosen];
  doc.provenance["candidates"] = candidates;
  doc.provenance["family_tie_epsilon"] = config.family_tie_epsilon;
  manifest.chosen_features = doc.selected_features;
  manifest.report = manifest.chosen_outcome().test_report;
  if (supports_proba(doc.model)) manifest.importance = feature_importance(doc.model);

  clock.run("persist", [&] {
    save_model(doc, dir / kModelFile);
    write_text(dir / kReportJsonFile, report_to_json(manifest.report).dump(2) + "\n");
    write_text(dir / kReportTextFile, render_report(manifest.report));
    std::ostringstream imp;
    imp << "feature,importance\n";
    for (std::size_t i = 0; i < manifest.importance.size(); ++i)
      imp << manifest.chosen_features[i] << ',' << format_double(manifest.importance[i]) << '\n';
    write_text(dir / kImportanceFile, imp.str());
  });

  clock.run("diagnose", [&] {
    const auto idx = ridgeline_features(manifest.importance, manifest.chosen_features.size());
    std::vector<RidgelineSeries> series;
    for (std::size_t i : idx) {
      const auto& feature = manifest.chosen_features[i];
      const auto col = static_cast<std::size_t>(
          std::find(filtered.column_names.begin(), filtered.column_names.end(), feature) - filtered.column_names.begin());
      std::map<int, std::vector<double>> by_class;
      for (std::size_t r = 0; r < filtered.size(); ++r) by_class[filtered.y[r]].push_back(filtered.X(r, col));
      series.push_back(ridgeline_series(feature, by_class));
      write_text(dir / ("ridgeline_" + feature + ".svg"), ridgeline_svg(series.back()));
    }
    write_text(dir / kRidgelineFile, ridgeline_csv(series));
    write_text(dir / kDiagnosticsFile, diagnostics_to_json(run_diagnostics(filtered)).dump(2) + "\n");
  });

  for (const auto& entry : fs::directory_iterator(dir)) manifest.artifacts.push_back(entry.path().filename().string());
  manifest.artifacts.push_back(kManifestFile);
  std::sort(manifest.artifacts.begin(), manifest.artifacts.end());
  manifest.wall_clock = clock.timings;
  write_text(dir / kManifestFile, manifest_to_json(manifest).dump(2) + "\n");
  staging.commit();
  return manifest;
}

json manifest_to_json(const RunManifest& m) {
  json candidates = json::array();
  for (const auto& c : m.candidates) {
    candidates.push_back({{"family", family_name(c.family)},
                          {"hyperparams", hyperparams_to_json(c.hyperparams)},
                          {"cv_mean", c.cv_mean},
                          {"sfs_score", c.sfs_score},
                          {"feature_count", c.features.size()},
                          {"test_accuracy", c.test_report.accuracy},
                          {"test_macro_f1", c.test_report.macro.f1},
                          {"test_weighted_f1", c.test_report.weighted.f1}});
  }
  json importance = nullptr;
  if (!m.importance.empty()) {
    importance = json::object();
    for (std::size_t i = 0; i < m.importance.size(); ++i) importance[m.chosen_features[i]] = m.importance[i];
  }
  const auto& chosen = m.chosen_outcome();
  return {{"config", m.config},
          {"row_counts", m.row_counts},
          {"candidates", candidates},
          {"chosen", {{"family", family_name(chosen.family)},
                      {"hyperparams", hyperparams_to_json(chosen.hyperparams)},
                      {"features", m.chosen_features}}},
          {"report", report_to_json(m.report)},
          {"importance", importance},
          {"artifacts", m.artifacts},
          {"wall_clock", m.wall_clock}};
}

ClassifyResult classify(const ModelDocument& doc, const FeatureTable& table_in) {
  const FeatureTable table = impute_zeros(table_in);
  std::vector<std::size_t> cols;
  for (const auto& f : doc.selected_features) {
    const auto it = std::find(table.column_names.begin(), table.column_names.end(), f);
    if (it == table.column_names.end()) fail(ErrorKind::MissingFeatureColumn, "feature table lacks column " + f);
    cols.push_back(static_cast<std::size_t>(it - table.column_names.begin()));
  }
  ClassifyResult result;
  result.classes = model_classes(doc.model);
  for (const auto& c : table.column_names) {
    if (std::find(doc.selected_features.begin(), doc.selected_features.end(), c) == doc.selected_features.end()) {
      result.ignored_columns.push_back(c);
    }
  }
  const Matrix X = table.values.rows() ? table.values.select_cols(cols) : Matrix(0, cols.size());
  const auto pred = predict(doc.model, X);
  std::optional<Matrix> proba;
  if (supports_proba(doc.model)) proba = predict_proba(doc.model, X);
  for (std::size_t r = 0; r < X.rows(); ++r) {
    Classification c{table.repo_ids[r], pred[r], {}};
    if (proba) c.probabilities.assign(proba->row(r).begin(), proba->row(r).end());
    result.rows.push_back(std::move(c));
  }
  return result;
}

ClassifyResult classify(const fs::path& model_path, const FeatureTable& table) {
  return classify(load_model(model_path), table);
}

std::string classification_csv(const ClassifyResult& result) {
  auto name = [](int label) {
    return label >= 0 && label < kNumStages ? std::string(stage_name(stage_from_code(label))) : std::to_string(label);
  };
  std::ostringstream out;
  out << "repo_id,predicted";
  for (int c : result.classes) out << ",p_" << name(c);
  out << '\n';
  for (const auto& row : result.rows) {
    out << row.repo_id << ',' << name(row.predicted);
    for (std::size_t i = 0; i < result.classes.size(); ++i)
      out << ',' << (row.probabilities.empty() ? std::string() : format_double(row.probabilities[i]));
    out << '\n';
  }
  return out.str();
}

}  // namespace osslc
