#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "versa/core/events.hpp"
#include "versa/runtime/shell.hpp"

namespace versa::runtime {

// 1-based inclusive line range; end == -1 means "to end of file".
struct LineRange {
  long start = 1;
  long end = -1;
};

// File operations confined to a root directory. Paths may be absolute (must
// lie under the root) or relative to a base directory. Symlinks are resolved
// before the check, and dangling symlinks are refused outright.
class SandboxFs {
 public:
  explicit SandboxFs(std::filesystem::path root, std::size_t output_budget = kOutputByteBudget);

  const std::filesystem::path& root() const { return root_; }

  // Throws SecurityError if the path leaves the root.
  std::filesystem::path resolve(std::string_view path, const std::filesystem::path& base) const;

  // Plain-text view with the exact file text (or the selected lines).
  events::FileView read(std::string_view path, const std::filesystem::path& base,
                        std::optional<LineRange> range = std::nullopt) const;

  // Creates parent directories; replaces the file atomically. Returns an ack line.
  std::string write(std::string_view path, const std::filesystem::path& base, std::string_view content) const;

  // Replaces the single occurrence of old_snippet. Returns a unified-diff-style summary.
  std::string edit(std::string_view path, const std::filesystem::path& base, std::string_view old_snippet,
                   std::string_view new_snippet) const;

  // Raw bytes, for converters.
  std::string read_bytes(const std::filesystem::path& resolved) const;

 private:
  std::filesystem::path root_;
  std::size_t output_budget_;
};

// 1-based line numbers of every (possibly overlapping) occurrence of needle.
std::vector<std::size_t> occurrence_lines(std::string_view haystack, std::string_view needle);

// Lines of `text` with their terminators stripped; a trailing newline does
// not start an extra empty line.
std::vector<std::string_view> split_lines_exact(std::string_view text);

// Minimal single-hunk diff between two versions of a file.
std::string diff_summary(std::string_view path, std::string_view before, std::string_view after,
                         std::size_t context = 2);

}  // namespace versa::runtime
