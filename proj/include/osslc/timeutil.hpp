#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <string_view>

namespace osslc {

using Timestamp = std::chrono::sys_seconds;

// Parses RFC 3339 timestamps ("2023-12-31T23:59:59Z", optional fractional
// seconds which are truncated, optional numeric offset). Returns nullopt on
// malformed input.
std::optional<Timestamp> parse_rfc3339(std::string_view text);

// Formats as "YYYY-MM-DDTHH:MM:SSZ".
std::string format_rfc3339(Timestamp t);

double hours_between(Timestamp from, Timestamp to);

}  // namespace osslc
