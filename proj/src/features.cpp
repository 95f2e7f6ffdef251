#include "osslc/features.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "osslc/error.hpp"

namespace osslc {

namespace {

using IdentityFirstSeen = std::map<std::string, Timestamp>;

// Earliest contribution per normalized identity over every authored event.
IdentityFirstSeen first_contributions(const ProjectEventLog& log, bool exclude_bots) {
  IdentityFirstSeen first;
  auto note = [&](const std::string& raw, Timestamp t) {
    const std::string id = normalize_identity(raw);
    if (id.empty() || (exclude_bots && is_bot_identity(id))) return;
    auto [it, inserted] = first.emplace(id, t);
    if (!inserted && t < it->second) it->second = t;
  };
  for (const auto& c : log.commits) note(c.author_id, c.authored_at);
  for (const auto& pr : log.pull_requests) {
    note(pr.author_id, pr.created_at);
    for (const auto* list : {&pr.comments, &pr.reviews, &pr.review_comments})
      for (const auto& a : *list) note(a.author_id, a.timestamp);
  }
  for (const auto& is : log.issues) {
    note(is.author_id, is.created_at);
    for (const auto& a : is.comments) note(a.author_id, a.timestamp);
  }
  return first;
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

bool same_value(double a, double b) {
  return (std::isnan(a) && std::isnan(b)) || a == b;
}

}  // namespace

std::optional<std::size_t> metric_index(std::string_view name) {
  for (std::size_t i = 0; i < kMetricNames.size(); ++i)
    if (kMetricNames[i] == name) return i;
  return std::nullopt;
}

std::optional<double> FeatureVector::get(std::string_view name) const {
  for (const auto& [k, v] : values)
    if (k == name) return v;
  return std::nullopt;
}

int bus_factor(const std::map<std::string, std::int64_t>& author_commit_counts, double threshold) {
  if (!(threshold > 0.0 && threshold <= 1.0)) {
    fail(ErrorKind::InvalidThreshold, "bus factor threshold must be in (0, 1], got " +
                                          std::to_string(threshold));
  }
  std::vector<std::int64_t> counts;
  std::int64_t total = 0;
  for (const auto& [author, n] : author_commit_counts) {
    if (n < 0) fail(ErrorKind::InvalidThreshold, "negative commit count for " + author);
    counts.push_back(n);
    total += n;
  }
  if (total == 0) return 0;
  std::sort(counts.begin(), counts.end(), std::greater<>());
  std::int64_t covered = 0;
  int authors = 0;
  for (auto n : counts) {
    covered += n;
    ++authors;
    if (static_cast<double>(covered) >= threshold * static_cast<double>(total)) break;
  }
  return authors;
}

int new_contributor_count(const ProjectEventLog& log, int recency_days, bool exclude_bots) {
  if (recency_days <= 0) fail(ErrorKind::Precondition, "recency_days must be positive");
  const Timestamp cutoff = log.window_end - std::chrono::days{recency_days};
  int n = 0;
  for (const auto& [id, first] : first_contributions(log, exclude_bots))
    if (first >= cutoff) ++n;
  return n;
}

double avg_time_to_first_response(const std::vector<IssueRecord>& issues) {
  double sum = 0.0;
  int qualifying = 0;
  for (const auto& is : issues) {
    const std::string author = normalize_identity(is.author_id);
    std::optional<Timestamp> first;
    for (const auto& c : is.comments) {
      if (normalize_identity(c.author_id) == author) continue;
      if (!first || c.timestamp < *first) first = c.timestamp;
    }
    if (first) {
      sum += hours_between(is.created_at, *first);
      ++qualifying;
    }
  }
  return qualifying == 0 ? 0.0 : sum / qualifying;
}

FeatureVector compute_features(const ProjectEventLog& log, const FeatureOptions& options) {
  std::map<std::string, double> m;

  m["commits"] = static_cast<double>(log.commits.size());

  const double pr_count = static_cast<double>(log.pull_requests.size());
  double pr_total_files = 0, pr_total_commits = 0, pr_total_comments = 0;
  double review_hours = 0;
  int closed_prs = 0;
  for (const auto& pr : log.pull_requests) {
    pr_total_files += static_cast<double>(std::set<std::string>(pr.files.begin(), pr.files.end()).size());
    pr_total_commits += static_cast<double>(pr.commit_shas.size());
    pr_total_comments += static_cast<double>(pr.comments.size() + pr.review_comments.size());
    if (pr.closed_at) {
      review_hours += hours_between(pr.created_at, *pr.closed_at);
      ++closed_prs;
    }
  }
  m["pr_count"] = pr_count;
  m["pr_total_files"] = pr_total_files;
  m["pr_total_commits"] = pr_total_commits;
  m["pr_average_commits"] = pr_count > 0 ? pr_total_commits / pr_count : 0.0;
  m["pr_total_comments"] = pr_total_comments;
  m["pr_review_duration_in_hours"] = closed_prs > 0 ? review_hours / closed_prs : 0.0;

  double issue_hours = 0, issue_comments = 0;
  std::vector<double> per_issue;
  for (const auto& is : log.issues) {
    issue_hours += hours_between(is.created_at, is.closed_at.value_or(log.window_end));
    issue_comments += static_cast<double>(is.comments.size());
    per_issue.push_back(static_cast<double>(is.comments.size()));
  }
  const double n_issues = static_cast<double>(log.issues.size());
  m["total_issue_duration"] = issue_hours;
  m["total_comment_count_issue"] = issue_comments;
  m["avg_comment_count_issue"] = n_issues > 0 ? issue_comments / n_issues : 0.0;
  m["comments_per_issue"] = median(per_issue);
  m["avg_ttfr_hours"] = avg_time_to_first_response(log.issues);

  m["contributor_count"] =
      static_cast<double>(first_contributions(log, options.exclude_bots).size());
  m["new_contributor_count"] =
      new_contributor_count(log, options.recency_days, options.exclude_bots);

  std::map<std::string, std::int64_t> by_author;
  for (const auto& c : log.commits) {
    const std::string id = normalize_identity(c.author_id);
    if (options.exclude_bots && is_bot_identity(id)) continue;
    ++by_author[id];
  }
  m["committer_count"] = static_cast<double>(by_author.size());
  m["bus_factor"] = bus_factor(by_author, options.bus_factor_threshold);

  m["release_count"] = static_cast<double>(log.releases.size());
  m["fork_count"] = static_cast<double>(log.fork_count);
  m["watchers_count"] = static_cast<double>(log.watchers_count);
  m["stars_count"] = static_cast<double>(log.stars_count);
  m["dependency_count"] = static_cast<double>(log.dependencies.size());

  FeatureVector fv;
  fv.repo_id = log.repo_id;
  for (auto name : kMetricNames) fv.values.emplace_back(std::string(name), m.at(std::string(name)));
  return fv;
}

bool operator==(const FeatureTable& a, const FeatureTable& b) {
  if (a.column_names != b.column_names || a.repo_ids != b.repo_ids || a.labels != b.labels ||
      a.values.rows() != b.values.rows() || a.values.cols() != b.values.cols()) {
    return false;
  }
  for (std::size_t i = 0; i < a.values.data().size(); ++i)
    if (!same_value(a.values.data()[i], b.values.data()[i])) return false;
  return true;
}

FeatureTable features_to_table(const std::vector<FeatureVector>& rows) {
  FeatureTable table;
  if (rows.empty()) {
    for (auto name : kMetricNames) table.column_names.emplace_back(name);
    table.values = Matrix(0, kMetricNames.size());
    return table;
  }
  std::set<std::string> reference;
  for (const auto& [k, v] : rows.front().values) reference.insert(k);
  // Canonical metrics first in canonical order, then any extras by name.
  for (auto name : kMetricNames)
    if (reference.contains(std::string(name))) table.column_names.emplace_back(name);
  for (const auto& k : reference)
    if (!metric_index(k)) table.column_names.push_back(k);

  table.values = Matrix(rows.size(), table.column_names.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    std::set<std::string> names;
    for (const auto& [k, v] : rows[r].values) names.insert(k);
    if (names != reference || names.size() != rows[r].values.size()) {
      fail(ErrorKind::ColumnMismatch,
           "feature row " + rows[r].repo_id + " has a different metric set than " + rows.front().repo_id);
    }
    for (std::size_t c = 0; c < table.column_names.size(); ++c)
      table.values(r, c) = *rows[r].get(table.column_names[c]);
    table.repo_ids.push_back(rows[r].repo_id);
    table.labels.push_back(rows[r].label);
  }
  return table;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

std::string feature_csv_string(const FeatureTable& table) {
  std::ostringstream out;
  out << "repo_id";
  for (const auto& c : table.column_names) out << ',' << csv_field(c);
  out << ",label\n";
  for (std::size_t r = 0; r < table.size(); ++r) {
    out << csv_field(table.repo_ids[r]);
    for (std::size_t c = 0; c < table.column_names.size(); ++c) out << ',' << format_double(table.values(r, c));
    out << ',';
    if (table.labels[r]) out << stage_name(*table.labels[r]);
    out << '\n';
  }
  return out.str();
}

void write_feature_csv(const FeatureTable& table, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::IoError, "cannot write " + path.string());
  out << feature_csv_string(table);
}

FeatureTable parse_feature_csv(const std::string& text, const std::string& source) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  FeatureTable table;
  std::optional<std::size_t> label_col;
  std::size_t id_col = 0;
  std::vector<std::size_t> value_cols;
  std::vector<double> values;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    if (line_no == 1) {
      bool has_id = false;
      for (std::size_t i = 0; i < fields.size(); ++i) {
        if (fields[i] == "repo_id") {
          id_col = i;
          has_id = true;
        } else if (fields[i] == "label") {
          label_col = i;
        } else {
          value_cols.push_back(i);
          table.column_names.push_back(fields[i]);
        }
      }
      if (!has_id) fail(ErrorKind::SchemaError, source + ":1: header lacks a repo_id column");
      continue;
    }
    const std::size_t width = value_cols.size() + 1 + (label_col ? 1 : 0);
    if (fields.size() != width) {
      fail(ErrorKind::SchemaError, source + ":" + std::to_string(line_no) + ": expected " +
                                       std::to_string(width) + " fields, found " +
                                       std::to_string(fields.size()));
    }
    table.repo_ids.push_back(fields[id_col]);
    for (std::size_t c : value_cols) {
      const std::string& f = fields[c];
      if (f.empty() || f == "NA" || f == "nan") {
        values.push_back(std::numeric_limits<double>::quiet_NaN());
        continue;
      }
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
      if (ec != std::errc() || ptr != f.data() + f.size()) {
        fail(ErrorKind::SchemaError, source + ":" + std::to_string(line_no) + ": not a number: '" + f + "'");
      }
      values.push_back(v);
    }
    std::optional<LifecycleStage> label;
    if (label_col && !fields[*label_col].empty()) {
      label = parse_stage(fields[*label_col]);
      if (!label) {
        fail(ErrorKind::UnknownLabel, source + ":" + std::to_string(line_no) + ": unknown label '" +
                                          fields[*label_col] + "'");
      }
    }
    table.labels.push_back(label);
  }
  if (line_no == 0) fail(ErrorKind::SchemaError, source + ": empty feature table");
  table.values = Matrix(table.repo_ids.size(), table.column_names.size(), std::move(values));
  return table;
}

FeatureTable read_feature_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::MissingFile, "cannot open feature table " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_feature_csv(buf.str(), path.string());
}

void join_labels(FeatureTable& table, const std::filesystem::path& labels_csv) {
  std::ifstream in(labels_csv);
  if (!in) fail(ErrorKind::MissingFile, "cannot open labels file " + labels_csv.string());
  std::map<std::string, LifecycleStage> labels;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    if (line_no == 1 && fields.size() == 2 && fields[0] == "repo_id" && fields[1] == "label") continue;
    if (fields.size() != 2) {
      fail(ErrorKind::SchemaError, labels_csv.string() + ":" + std::to_string(line_no) +
                                       ": expected repo_id,label");
    }
    auto stage = parse_stage(fields[1]);
    if (!stage) {
      fail(ErrorKind::UnknownLabel, labels_csv.string() + ":" + std::to_string(line_no) +
                                        ": unknown label '" + fields[1] + "'");
    }
    labels[fields[0]] = *stage;
  }
  for (std::size_t r = 0; r < table.size(); ++r) {
    auto it = labels.find(table.repo_ids[r]);
    if (it != labels.end()) table.labels[r] = it->second;
  }
}

Dataset table_to_dataset(const FeatureTable& table) {
  Dataset ds;
  ds.column_names = table.column_names;
  ds.X = table.values;
  ds.row_ids = table.repo_ids;
  for (std::size_t r = 0; r < table.size(); ++r) {
    if (!table.labels[r]) fail(ErrorKind::UnlabeledRow, "row " + table.repo_ids[r] + " has no label");
    ds.y.push_back(stage_code(*table.labels[r]));
  }
  ds.check();
  return ds;
}

}  // namespace osslc
