#pragma once

#include <chrono>
#include <filesystem>
#include <string>

#include "osslc/ingest.hpp"

namespace osslc {

struct FetchOptions {
  int max_retries = 5;
  std::chrono::milliseconds base_backoff{500};
  int per_page = 100;
  std::chrono::seconds timeout{30};
};

/// Downloads one repository from a hosting-platform REST API and returns it
/// through load_archive, so fetched and local data share one validation path.
///
/// Endpoints, relative to `base_url` (`repo_id` is "org/name"):
///   GET /repos/{repo_id}                 meta object (repo_id, window_start,
///                                        stars_count, fork_count, watchers_count)
///   GET /repos/{repo_id}/commits         JSON arrays of archive rows,
///   GET /repos/{repo_id}/pulls           paged with ?page=N&per_page=M;
///   GET /repos/{repo_id}/issues          a short page ends the listing.
///   GET /repos/{repo_id}/releases        `until` carries window_end.
///   GET /repos/{repo_id}/dependencies
///
/// Requests carry `Authorization: Bearer <token>`. 429 and 5xx responses are
/// retried with exponential backoff (at most `max_retries` times).
///
/// Errors: AuthError on 401/403; RateLimitedError when 429 persists; PartialData
/// when a listing cannot be completed. On any failure nothing is left at
/// `out_dir`.
ProjectEventLog fetch_project(const std::string& base_url, const std::string& repo_id,
                              const std::string& auth_token, Timestamp window_end,
                              const std::filesystem::path& out_dir,
                              const FetchOptions& options = {});

}  // namespace osslc
