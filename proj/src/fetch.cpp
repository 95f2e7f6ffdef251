#include "osslc/fetch.hpp"

#include <fstream>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "osslc/error.hpp"

namespace osslc {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string prefix;  // path prefix without trailing slash
};

Endpoint split_base_url(const std::string& base_url) {
  const auto scheme_end = base_url.find("://");
  if (scheme_end == std::string::npos) {
    fail(ErrorKind::ConfigError, "base URL must include a scheme: " + base_url);
  }
  const auto path_start = base_url.find('/', scheme_end + 3);
  Endpoint ep;
  ep.origin = base_url.substr(0, path_start);
  if (path_start != std::string::npos) ep.prefix = base_url.substr(path_start);
  while (!ep.prefix.empty() && ep.prefix.back() == '/') ep.prefix.pop_back();
  return ep;
}

class ApiClient {
 public:
  ApiClient(const std::string& base_url, const std::string& token, const FetchOptions& options)
      : endpoint_(split_base_url(base_url)), client_(endpoint_.origin), options_(options) {
    client_.set_bearer_token_auth(token);
    client_.set_connection_timeout(options.timeout);
    client_.set_read_timeout(options.timeout);
  }

  json get(const std::string& path, const httplib::Params& params) {
    const std::string full = endpoint_.prefix + path;
    double last_retry_after = 0.0;
    bool rate_limited = false;
    std::string last_problem;
    for (int attempt = 0; attempt <= options_.max_retries; ++attempt) {
      if (attempt > 0) {
        auto delay = options_.base_backoff * (1 << (attempt - 1));
        const auto hinted = std::chrono::milliseconds(static_cast<long>(last_retry_after * 1000));
        if (rate_limited && hinted > delay) delay = hinted;
        std::this_thread::sleep_for(delay);
      }
      auto res = client_.Get(full, params, httplib::Headers{});
      if (!res) {
        rate_limited = false;
        last_problem = "connection error: " + httplib::to_string(res.error());
        continue;
      }
      if (res->status == 401 || res->status == 403) {
        fail(ErrorKind::AuthError, "server refused credentials (HTTP " +
                                       std::to_string(res->status) + ") for " + full);
      }
      if (res->status == 429) {
        rate_limited = true;
        last_retry_after = 0.0;
        if (res->has_header("Retry-After")) {
          try {
            last_retry_after = std::stod(res->get_header_value("Retry-After"));
          } catch (const std::exception&) {
          }
        }
        last_problem = "rate limited";
        continue;
      }
      if (res->status >= 500) {
        rate_limited = false;
        last_problem = "HTTP " + std::to_string(res->status);
        continue;
      }
      if (res->status != 200) {
        fail(ErrorKind::PartialData, "HTTP " + std::to_string(res->status) + " for " + full);
      }
      try {
        return json::parse(res->body);
      } catch (const json::exception& e) {
        fail(ErrorKind::PartialData, "malformed JSON from " + full + ": " + e.what());
      }
    }
    if (rate_limited) {
      throw RateLimitedError("rate limit persisted after " + std::to_string(options_.max_retries) +
                                 " retries for " + full,
                             last_retry_after);
    }
    fail(ErrorKind::PartialData, "giving up on " + full + " after " +
                                     std::to_string(options_.max_retries) + " retries (" +
                                     last_problem + ")");
  }

  // Pages through a listing until a short page.
  std::vector<json> list(const std::string& path, const std::string& until) {
    std::vector<json> rows;
    for (int page = 1;; ++page) {
      httplib::Params params{{"page", std::to_string(page)},
                             {"per_page", std::to_string(options_.per_page)},
                             {"until", until}};
      json body;
      try {
        body = get(path, params);
      } catch (const Error& e) {
        if (e.kind() == ErrorKind::PartialData) {
          throw e.annotated("page " + std::to_string(page) + " of " + path);
        }
        throw;
      }
      if (!body.is_array()) {
        fail(ErrorKind::PartialData, "expected a JSON array from " + path);
      }
      for (auto& row : body) rows.push_back(std::move(row));
      if (static_cast<int>(body.size()) < options_.per_page) break;
    }
    return rows;
  }

 private:
  Endpoint endpoint_;
  httplib::Client client_;
  FetchOptions options_;
};

void write_lines(const fs::path& path, const std::vector<json>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::IoError, "cannot write " + path.string());
  for (const auto& r : rows) out << r.dump() << "\n";
}

// Removes a directory tree on scope exit unless released.
class ScopedRemoval {
 public:
  explicit ScopedRemoval(fs::path p) : path_(std::move(p)) {}
  ~ScopedRemoval() {
    if (!path_.empty()) {
      std::error_code ec;
      fs::remove_all(path_, ec);
    }
  }
  void release() { path_.clear(); }

 private:
  fs::path path_;
};

}  // namespace

ProjectEventLog fetch_project(const std::string& base_url, const std::string& repo_id,
                              const std::string& auth_token, Timestamp window_end,
                              const fs::path& out_dir, const FetchOptions& options) {
  if (fs::exists(out_dir) && !fs::is_empty(out_dir)) {
    fail(ErrorKind::IoError, "output directory is not empty: " + out_dir.string());
  }
  ApiClient api(base_url, auth_token, options);
  const std::string base = "/repos/" + repo_id;
  const std::string until = format_rfc3339(window_end);

  fs::path staging = out_dir;
  staging += ".partial";
  fs::remove_all(staging);
  fs::create_directories(staging);
  ScopedRemoval cleanup_staging(staging);

  json meta = api.get(base, {});
  if (!meta.is_object()) fail(ErrorKind::PartialData, "expected a JSON object from " + base);
  meta["window_end"] = until;
  if (!meta.contains("repo_id")) meta["repo_id"] = repo_id;
  {
    std::ofstream out(staging / kMetaFile, std::ios::binary);
    out << meta.dump(2) << "\n";
  }
  write_lines(staging / kCommitsFile, api.list(base + "/commits", until));
  write_lines(staging / kPullRequestsFile, api.list(base + "/pulls", until));
  write_lines(staging / kIssuesFile, api.list(base + "/issues", until));
  write_lines(staging / kReleasesFile, api.list(base + "/releases", until));
  {
    std::ofstream out(staging / kDependenciesFile, std::ios::binary);
    for (const auto& d : api.list(base + "/dependencies", until)) {
      if (!d.is_string()) fail(ErrorKind::PartialData, "dependency entries must be strings");
      out << d.get<std::string>() << "\n";
    }
  }

  // Validate before publishing.
  ProjectEventLog log = load_archive(staging);
  if (fs::exists(out_dir)) fs::remove(out_dir);
  if (out_dir.has_parent_path()) fs::create_directories(out_dir.parent_path());
  fs::rename(staging, out_dir);
  cleanup_staging.release();
  return log;
}

}  // namespace osslc
