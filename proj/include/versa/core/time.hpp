#pragma once

#include <chrono>
#include <functional>
#include <string>
#include <string_view>

namespace versa {

using Timestamp = std::chrono::sys_time<std::chrono::microseconds>;
using Clock = std::function<Timestamp()>;

Timestamp now_utc();

// RFC 3339 in UTC with microsecond precision: 2026-01-02T03:04:05.000006Z
std::string format_rfc3339(Timestamp t);

// Accepts the format above plus second-only and numeric-offset variants.
// Throws std::invalid_argument on malformed input.
Timestamp parse_rfc3339(std::string_view text);

Clock system_clock();

// Deterministic clock for reproducible runs: start, start+step, start+2*step...
Clock stepping_clock(Timestamp start, std::chrono::microseconds step);

}  // namespace versa
