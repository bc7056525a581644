#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace versa::text {

inline constexpr std::string_view kTruncationMarker = "[...output truncated...]";

// Replaces invalid UTF-8 sequences with U+FFFD.
std::string sanitize_utf8(std::string_view in);

// sanitize_utf8 plus removal of C0 controls other than \n and \t (and \r, DEL).
std::string clean_text(std::string_view in);

bool is_valid_utf8(std::string_view in);

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);
std::vector<std::string> split_lines(std::string_view s);
std::string join(const std::vector<std::string>& parts, std::string_view sep);
std::vector<std::string> split(std::string_view s, char sep);  // keeps empty fields
bool starts_with(std::string_view s, std::string_view prefix);
bool ends_with(std::string_view s, std::string_view suffix);

// Keeps the head of `s` (cut at a UTF-8 boundary) so that the result,
// including the trailing marker, fits in `budget` bytes. Returns `s`
// unchanged when it already fits.
std::string truncate_tail(std::string_view s, std::size_t budget, bool* truncated = nullptr);

std::size_t count_occurrences(std::string_view haystack, std::string_view needle);

}  // namespace versa::text
