#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "osslc/timeutil.hpp"

namespace osslc {

/// An (author, time) pair: a comment, review, or review comment.
struct Activity {
  std::string author_id;
  Timestamp timestamp;
  friend bool operator==(const Activity&, const Activity&) = default;
};

struct CommitRecord {
  std::string sha;
  std::string author_id;
  Timestamp authored_at;
  std::int64_t files_changed = 0;
  friend bool operator==(const CommitRecord&, const CommitRecord&) = default;
};

struct PullRequestRecord {
  std::int64_t number = 0;
  std::string author_id;
  Timestamp created_at;
  std::optional<Timestamp> closed_at;
  bool merged = false;
  std::vector<std::string> files;
  std::vector<std::string> commit_shas;
  std::vector<Activity> comments;
  std::vector<Activity> reviews;
  std::vector<Activity> review_comments;
  friend bool operator==(const PullRequestRecord&, const PullRequestRecord&) = default;
};

struct IssueRecord {
  std::int64_t number = 0;
  std::string author_id;
  Timestamp created_at;
  std::optional<Timestamp> closed_at;
  std::vector<Activity> comments;
  friend bool operator==(const IssueRecord&, const IssueRecord&) = default;
};

/// Raw per-repository activity over an observation window. Treated as
/// immutable once loaded.
struct ProjectEventLog {
  std::string repo_id;
  Timestamp window_start;
  Timestamp window_end;
  std::vector<CommitRecord> commits;
  std::vector<PullRequestRecord> pull_requests;
  std::vector<IssueRecord> issues;
  std::vector<Timestamp> releases;
  std::int64_t stars_count = 0;
  std::int64_t fork_count = 0;
  std::int64_t watchers_count = 0;
  std::vector<std::string> dependencies;
  friend bool operator==(const ProjectEventLog&, const ProjectEventLog&) = default;
};

struct Violation {
  std::string entity;  // "meta", "commit", "pull_request", "issue", "release", "dependency"
  std::string key;     // sha, number, or identifier
  std::string message;
  std::string to_string() const;
};

// Default observation cutoff used by the CLI.
inline constexpr const char* kDefaultWindowEnd = "2023-12-31T23:59:59Z";

// Archive file names.
inline constexpr const char* kMetaFile = "meta.json";
inline constexpr const char* kCommitsFile = "commits.jsonl";
inline constexpr const char* kPullRequestsFile = "pull_requests.jsonl";
inline constexpr const char* kIssuesFile = "issues.jsonl";
inline constexpr const char* kReleasesFile = "releases.jsonl";
inline constexpr const char* kDependenciesFile = "dependencies.txt";

/// Reads and validates an archive directory. Throws MissingFile, SchemaError
/// (with file and line), or InvariantViolation.
ProjectEventLog load_archive(const std::filesystem::path& dir);

/// Writes the canonical archive layout; creates `dir` if needed.
void write_archive(const ProjectEventLog& log, const std::filesystem::path& dir);

/// Empty iff every ProjectEventLog invariant holds.
std::vector<Violation> validate_log(const ProjectEventLog& log);

/// Drops events after `end` and moves the window end to min(window_end, end).
ProjectEventLog clip_to_window(const ProjectEventLog& log, Timestamp end);

std::string normalize_identity(std::string_view id);
bool is_bot_identity(std::string_view normalized_id);

}  // namespace osslc
