#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "osslc/dataset.hpp"
#include "osslc/ingest.hpp"

namespace osslc {

/// Canonical metric names in persisted column order.
inline constexpr std::array<std::string_view, 21> kMetricNames = {
    "commits",
    "pr_count",
    "pr_total_files",
    "pr_average_commits",
    "pr_total_commits",
    "pr_total_comments",
    "pr_review_duration_in_hours",
    "total_issue_duration",
    "avg_comment_count_issue",
    "total_comment_count_issue",
    "comments_per_issue",
    "avg_ttfr_hours",
    "contributor_count",
    "new_contributor_count",
    "committer_count",
    "bus_factor",
    "release_count",
    "fork_count",
    "watchers_count",
    "stars_count",
    "dependency_count",
};

std::optional<std::size_t> metric_index(std::string_view name);

struct FeatureOptions {
  int recency_days = 365;
  double bus_factor_threshold = 0.5;
  bool exclude_bots = true;
};

/// One project's metrics, keyed by name; iteration follows kMetricNames only
/// when built by compute_features.
struct FeatureVector {
  std::string repo_id;
  std::vector<std::pair<std::string, double>> values;
  std::optional<LifecycleStage> label;

  std::optional<double> get(std::string_view name) const;
};

/// Requires validate_log(log) to be empty. Zero denominators give 0.
FeatureVector compute_features(const ProjectEventLog& log, const FeatureOptions& options = {});

/// Smallest number of authors whose commits reach `threshold` of the total,
/// taken greedily by descending count. Throws InvalidThreshold unless
/// threshold is in (0, 1].
int bus_factor(const std::map<std::string, std::int64_t>& author_commit_counts, double threshold);

/// Distinct identities whose first contribution falls in the last
/// `recency_days` of the window.
int new_contributor_count(const ProjectEventLog& log, int recency_days, bool exclude_bots = true);

/// Mean hours from issue creation to the first comment by someone other than
/// the author; issues without such a comment are skipped.
double avg_time_to_first_response(const std::vector<IssueRecord>& issues);

/// A dense feature table. Missing cells are NaN until impute_zeros.
struct FeatureTable {
  std::vector<std::string> column_names;
  std::vector<std::string> repo_ids;
  Matrix values;
  std::vector<std::optional<LifecycleStage>> labels;

  std::size_t size() const noexcept { return repo_ids.size(); }
  friend bool operator==(const FeatureTable& a, const FeatureTable& b);
};

/// Throws ColumnMismatch when rows disagree on metric sets.
FeatureTable features_to_table(const std::vector<FeatureVector>& rows);

/// CSV: header `repo_id,<metrics...>,label`; empty cells are missing values.
void write_feature_csv(const FeatureTable& table, const std::filesystem::path& path);
std::string feature_csv_string(const FeatureTable& table);
FeatureTable read_feature_csv(const std::filesystem::path& path);
FeatureTable parse_feature_csv(const std::string& text, const std::string& source = "<memory>");

/// Applies a two-column `repo_id,label` CSV. Unknown label names are rejected
/// with UnknownLabel; repos absent from the labels file stay unlabeled.
void join_labels(FeatureTable& table, const std::filesystem::path& labels_csv);

/// Builds a Dataset from a fully labeled, imputed table. Throws UnlabeledRow.
Dataset table_to_dataset(const FeatureTable& table);

// Shortest round-trip decimal text for a double.
std::string format_double(double v);

}  // namespace osslc
