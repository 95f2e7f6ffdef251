#include "osslc/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "osslc/error.hpp"

namespace osslc {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Thrown by field readers; converted to SchemaError with file and line.
struct FieldError {
  std::string message;
};

const json& field(const json& row, const char* name) {
  if (!row.is_object()) throw FieldError{"row is not a JSON object"};
  auto it = row.find(name);
  if (it == row.end()) throw FieldError{std::string("missing field '") + name + "'"};
  return *it;
}

std::string read_string(const json& row, const char* name) {
  const json& v = field(row, name);
  if (!v.is_string()) throw FieldError{std::string("field '") + name + "' must be a string"};
  return v.get<std::string>();
}

std::int64_t read_int(const json& row, const char* name) {
  const json& v = field(row, name);
  if (!v.is_number_integer()) {
    throw FieldError{std::string("field '") + name + "' must be an integer"};
  }
  return v.get<std::int64_t>();
}

bool read_bool(const json& row, const char* name) {
  const json& v = field(row, name);
  if (!v.is_boolean()) throw FieldError{std::string("field '") + name + "' must be a boolean"};
  return v.get<bool>();
}

Timestamp to_timestamp(const json& v, const std::string& what) {
  if (!v.is_string()) throw FieldError{what + " must be an RFC 3339 string"};
  auto t = parse_rfc3339(v.get<std::string>());
  if (!t) throw FieldError{what + " is not a valid RFC 3339 timestamp: " + v.get<std::string>()};
  return *t;
}

Timestamp read_time(const json& row, const char* name) {
  return to_timestamp(field(row, name), std::string("field '") + name + "'");
}

std::optional<Timestamp> read_optional_time(const json& row, const char* name) {
  auto it = row.find(name);
  if (it == row.end() || it->is_null()) return std::nullopt;
  return to_timestamp(*it, std::string("field '") + name + "'");
}

std::vector<std::string> read_strings(const json& row, const char* name) {
  const json& v = field(row, name);
  if (!v.is_array()) throw FieldError{std::string("field '") + name + "' must be an array"};
  std::vector<std::string> out;
  for (const auto& e : v) {
    if (!e.is_string()) throw FieldError{std::string("field '") + name + "' must hold strings"};
    out.push_back(e.get<std::string>());
  }
  return out;
}

std::vector<Activity> read_activities(const json& row, const char* name) {
  const json& v = field(row, name);
  if (!v.is_array()) throw FieldError{std::string("field '") + name + "' must be an array"};
  std::vector<Activity> out;
  for (const auto& e : v) {
    out.push_back({read_string(e, "author_id"), read_time(e, "timestamp")});
  }
  return out;
}

json activities_json(const std::vector<Activity>& items) {
  json arr = json::array();
  for (const auto& a : items) {
    arr.push_back({{"author_id", a.author_id}, {"timestamp", format_rfc3339(a.timestamp)}});
  }
  return arr;
}

json optional_time_json(const std::optional<Timestamp>& t) {
  return t ? json(format_rfc3339(*t)) : json(nullptr);
}

fs::path require_file(const fs::path& dir, const char* name) {
  fs::path p = dir / name;
  if (!fs::is_regular_file(p)) fail(ErrorKind::MissingFile, "missing archive file " + p.string());
  return p;
}

// Calls parse_row for each non-blank line, attaching file:line to failures.
template <typename F>
void for_each_line(const fs::path& path, F&& parse_row) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::IoError, "cannot open " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); })) {
      continue;
    }
    try {
      parse_row(line);
    } catch (const FieldError& e) {
      fail(ErrorKind::SchemaError, path.string() + ":" + std::to_string(line_no) + ": " + e.message);
    } catch (const json::exception& e) {
      fail(ErrorKind::SchemaError, path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

std::string trim(std::string s) {
  auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

void write_text(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::IoError, "cannot write " + path.string());
  out << content;
}

// Collects every timestamp in the log, for window defaults.
std::vector<Timestamp> all_timestamps(const ProjectEventLog& log) {
  std::vector<Timestamp> ts;
  for (const auto& c : log.commits) ts.push_back(c.authored_at);
  for (const auto& pr : log.pull_requests) {
    ts.push_back(pr.created_at);
    if (pr.closed_at) ts.push_back(*pr.closed_at);
    for (const auto* list : {&pr.comments, &pr.reviews, &pr.review_comments})
      for (const auto& a : *list) ts.push_back(a.timestamp);
  }
  for (const auto& is : log.issues) {
    ts.push_back(is.created_at);
    if (is.closed_at) ts.push_back(*is.closed_at);
    for (const auto& a : is.comments) ts.push_back(a.timestamp);
  }
  ts.insert(ts.end(), log.releases.begin(), log.releases.end());
  return ts;
}

}  // namespace

std::string Violation::to_string() const {
  return entity + (key.empty() ? "" : " " + key) + ": " + message;
}

std::string normalize_identity(std::string_view id) {
  std::string out(id);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

bool is_bot_identity(std::string_view normalized_id) {
  return normalized_id.ends_with("[bot]");
}

ProjectEventLog load_archive(const fs::path& dir) {
  if (!fs::is_directory(dir)) fail(ErrorKind::MissingFile, "archive directory not found: " + dir.string());
  const fs::path meta_path = require_file(dir, kMetaFile);
  const fs::path commits_path = require_file(dir, kCommitsFile);
  const fs::path prs_path = require_file(dir, kPullRequestsFile);
  const fs::path issues_path = require_file(dir, kIssuesFile);
  const fs::path releases_path = require_file(dir, kReleasesFile);
  const fs::path deps_path = require_file(dir, kDependenciesFile);

  ProjectEventLog log;
  std::optional<Timestamp> window_start;
  std::optional<Timestamp> window_end;
  {
    std::ifstream in(meta_path);
    std::stringstream buf;
    buf << in.rdbuf();
    try {
      const json meta = json::parse(buf.str());
      log.repo_id = read_string(meta, "repo_id");
      window_start = read_optional_time(meta, "window_start");
      window_end = read_optional_time(meta, "window_end");
      log.stars_count = read_int(meta, "stars_count");
      log.fork_count = read_int(meta, "fork_count");
      log.watchers_count = read_int(meta, "watchers_count");
    } catch (const FieldError& e) {
      fail(ErrorKind::SchemaError, meta_path.string() + ":1: " + e.message);
    } catch (const json::exception& e) {
      fail(ErrorKind::SchemaError, meta_path.string() + ":1: " + e.what());
    }
  }

  for_each_line(commits_path, [&](const std::string& line) {
    const json row = json::parse(line);
    log.commits.push_back({read_string(row, "sha"), read_string(row, "author_id"),
                           read_time(row, "authored_at"), read_int(row, "files_changed")});
  });
  for_each_line(prs_path, [&](const std::string& line) {
    const json row = json::parse(line);
    PullRequestRecord pr;
    pr.number = read_int(row, "number");
    pr.author_id = read_string(row, "author_id");
    pr.created_at = read_time(row, "created_at");
    pr.closed_at = read_optional_time(row, "closed_at");
    pr.merged = read_bool(row, "merged");
    pr.files = read_strings(row, "files");
    pr.commit_shas = read_strings(row, "commit_shas");
    pr.comments = read_activities(row, "comments");
    pr.reviews = read_activities(row, "reviews");
    pr.review_comments = read_activities(row, "review_comments");
    log.pull_requests.push_back(std::move(pr));
  });
  for_each_line(issues_path, [&](const std::string& line) {
    const json row = json::parse(line);
    IssueRecord is;
    is.number = read_int(row, "number");
    is.author_id = read_string(row, "author_id");
    is.created_at = read_time(row, "created_at");
    is.closed_at = read_optional_time(row, "closed_at");
    is.comments = read_activities(row, "comments");
    log.issues.push_back(std::move(is));
  });
  for_each_line(releases_path, [&](const std::string& line) {
    // Each line is a JSON string; bare timestamps are accepted as well.
    const std::string text = trim(line);
    if (!text.empty() && text.front() == '"') {
      log.releases.push_back(to_timestamp(json::parse(text), "release timestamp"));
    } else {
      log.releases.push_back(to_timestamp(json(text), "release timestamp"));
    }
  });
  for_each_line(deps_path, [&](const std::string& line) {
    log.dependencies.push_back(trim(line));
  });

  const auto stamps = all_timestamps(log);
  if (window_end) {
    log.window_end = *window_end;
  } else if (!stamps.empty()) {
    log.window_end = *std::max_element(stamps.begin(), stamps.end());
  } else {
    log.window_end = window_start.value_or(Timestamp{});
  }
  if (window_start) {
    log.window_start = *window_start;
  } else if (!stamps.empty()) {
    log.window_start = *std::min_element(stamps.begin(), stamps.end());
  } else {
    log.window_start = log.window_end;
  }

  const auto violations = validate_log(log);
  if (!violations.empty()) {
    std::string msg = dir.string() + ": " + violations.front().to_string();
    if (violations.size() > 1) {
      msg += " (and " + std::to_string(violations.size() - 1) + " more)";
    }
    fail(ErrorKind::InvariantViolation, msg);
  }
  return log;
}

void write_archive(const ProjectEventLog& log, const fs::path& dir) {
  fs::create_directories(dir);
  json meta = {{"repo_id", log.repo_id},
               {"window_start", format_rfc3339(log.window_start)},
               {"window_end", format_rfc3339(log.window_end)},
               {"stars_count", log.stars_count},
               {"fork_count", log.fork_count},
               {"watchers_count", log.watchers_count}};
  write_text(dir / kMetaFile, meta.dump(2) + "\n");

  std::string text;
  for (const auto& c : log.commits) {
    json row = {{"sha", c.sha},
                {"author_id", c.author_id},
                {"authored_at", format_rfc3339(c.authored_at)},
                {"files_changed", c.files_changed}};
    text += row.dump() + "\n";
  }
  write_text(dir / kCommitsFile, text);

  text.clear();
  for (const auto& pr : log.pull_requests) {
    json row = {{"number", pr.number},
                {"author_id", pr.author_id},
                {"created_at", format_rfc3339(pr.created_at)},
                {"closed_at", optional_time_json(pr.closed_at)},
                {"merged", pr.merged},
                {"files", pr.files},
                {"commit_shas", pr.commit_shas},
                {"comments", activities_json(pr.comments)},
                {"reviews", activities_json(pr.reviews)},
                {"review_comments", activities_json(pr.review_comments)}};
    text += row.dump() + "\n";
  }
  write_text(dir / kPullRequestsFile, text);

  text.clear();
  for (const auto& is : log.issues) {
    json row = {{"number", is.number},
                {"author_id", is.author_id},
                {"created_at", format_rfc3339(is.created_at)},
                {"closed_at", optional_time_json(is.closed_at)},
                {"comments", activities_json(is.comments)}};
    text += row.dump() + "\n";
  }
  write_text(dir / kIssuesFile, text);

  text.clear();
  for (const auto& r : log.releases) text += json(format_rfc3339(r)).dump() + "\n";
  write_text(dir / kReleasesFile, text);

  text.clear();
  for (const auto& d : log.dependencies) text += d + "\n";
  write_text(dir / kDependenciesFile, text);
}

std::vector<Violation> validate_log(const ProjectEventLog& log) {
  std::vector<Violation> out;
  auto in_window = [&](Timestamp t) { return t >= log.window_start && t <= log.window_end; };
  auto check_time = [&](const std::string& entity, const std::string& key, const std::string& what,
                        Timestamp t) {
    if (!in_window(t)) {
      out.push_back({entity, key,
                     what + " at " + format_rfc3339(t) + " outside window [" +
                         format_rfc3339(log.window_start) + ", " + format_rfc3339(log.window_end) +
                         "]"});
    }
  };

  if (log.repo_id.empty()) out.push_back({"meta", "", "repo_id is empty"});
  if (log.window_start > log.window_end) {
    out.push_back({"meta", log.repo_id, "window_start after window_end"});
  }
  if (log.stars_count < 0) out.push_back({"meta", log.repo_id, "stars_count negative"});
  if (log.fork_count < 0) out.push_back({"meta", log.repo_id, "fork_count negative"});
  if (log.watchers_count < 0) out.push_back({"meta", log.repo_id, "watchers_count negative"});

  std::set<std::string> shas;
  for (const auto& c : log.commits) {
    if (!shas.insert(c.sha).second) out.push_back({"commit", c.sha, "commit sha duplicated"});
    if (c.author_id.empty()) out.push_back({"commit", c.sha, "author_id is empty"});
    if (c.files_changed < 0) out.push_back({"commit", c.sha, "files_changed negative"});
    check_time("commit", c.sha, "authored_at", c.authored_at);
  }

  std::set<std::int64_t> pr_numbers;
  for (const auto& pr : log.pull_requests) {
    const std::string key = std::to_string(pr.number);
    if (pr.number <= 0) out.push_back({"pull_request", key, "number must be positive"});
    if (!pr_numbers.insert(pr.number).second) {
      out.push_back({"pull_request", key, "pull request number duplicated"});
    }
    if (pr.author_id.empty()) out.push_back({"pull_request", key, "author_id is empty"});
    if (pr.closed_at && *pr.closed_at < pr.created_at) {
      out.push_back({"pull_request", key, "closed_at before created_at"});
    }
    if (pr.merged && !pr.closed_at) out.push_back({"pull_request", key, "merged without closed_at"});
    check_time("pull_request", key, "created_at", pr.created_at);
    if (pr.closed_at) check_time("pull_request", key, "closed_at", *pr.closed_at);
    for (const auto& a : pr.comments) check_time("pull_request", key, "comment", a.timestamp);
    for (const auto& a : pr.reviews) check_time("pull_request", key, "review", a.timestamp);
    for (const auto& a : pr.review_comments) {
      check_time("pull_request", key, "review comment", a.timestamp);
    }
  }

  std::set<std::int64_t> issue_numbers;
  for (const auto& is : log.issues) {
    const std::string key = std::to_string(is.number);
    if (is.number <= 0) out.push_back({"issue", key, "number must be positive"});
    if (!issue_numbers.insert(is.number).second) out.push_back({"issue", key, "issue number duplicated"});
    if (is.author_id.empty()) out.push_back({"issue", key, "author_id is empty"});
    if (is.closed_at && *is.closed_at < is.created_at) {
      out.push_back({"issue", key, "closed_at before created_at"});
    }
    check_time("issue", key, "created_at", is.created_at);
    if (is.closed_at) check_time("issue", key, "closed_at", *is.closed_at);
    for (const auto& a : is.comments) {
      if (a.timestamp < is.created_at) out.push_back({"issue", key, "comment before created_at"});
      check_time("issue", key, "comment", a.timestamp);
    }
  }

  for (const auto& r : log.releases) check_time("release", format_rfc3339(r), "release", r);

  std::set<std::string> deps;
  for (const auto& d : log.dependencies) {
    if (d.empty()) out.push_back({"dependency", "", "empty dependency identifier"});
    if (!deps.insert(normalize_identity(d)).second) {
      out.push_back({"dependency", d, "dependency duplicated (case-insensitive)"});
    }
  }
  return out;
}

ProjectEventLog clip_to_window(const ProjectEventLog& log, Timestamp end) {
  if (end >= log.window_end) return log;
  ProjectEventLog out = log;
  out.window_end = std::max(end, log.window_start);
  const Timestamp cut = out.window_end;
  auto keep = [&](Timestamp t) { return t <= cut; };
  auto clip_activities = [&](std::vector<Activity>& items) {
    std::erase_if(items, [&](const Activity& a) { return !keep(a.timestamp); });
  };
  std::erase_if(out.commits, [&](const CommitRecord& c) { return !keep(c.authored_at); });
  std::erase_if(out.pull_requests, [&](const PullRequestRecord& pr) { return !keep(pr.created_at); });
  for (auto& pr : out.pull_requests) {
    if (pr.closed_at && !keep(*pr.closed_at)) {
      // Still open as of the cutoff.
      pr.closed_at.reset();
      pr.merged = false;
    }
    clip_activities(pr.comments);
    clip_activities(pr.reviews);
    clip_activities(pr.review_comments);
  }
  std::erase_if(out.issues, [&](const IssueRecord& is) { return !keep(is.created_at); });
  for (auto& is : out.issues) {
    if (is.closed_at && !keep(*is.closed_at)) is.closed_at.reset();
    clip_activities(is.comments);
  }
  std::erase_if(out.releases, [&](Timestamp t) { return !keep(t); });
  return out;
}

}  // namespace osslc
