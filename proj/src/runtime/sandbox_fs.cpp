#include "versa/runtime/sandbox_fs.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <fstream>
#include <sstream>

#include "versa/core/bytes.hpp"
#include "versa/core/text.hpp"
#include "versa/runtime/errors.hpp"

namespace versa::runtime {

namespace fs = std::filesystem;

namespace {

bool within(const fs::path& root, const fs::path& p) {
  auto r = root.begin(), q = p.begin();
  for (; r != root.end(); ++r, ++q) {
    if (r->empty()) continue;  // trailing separator component
    if (q == p.end() || *r != *q) return false;
  }
  return true;
}

std::vector<std::size_t> line_starts(std::string_view text) {
  std::vector<std::size_t> starts{0};
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] == '\n' && i + 1 < text.size()) starts.push_back(i + 1);
  }
  if (text.empty()) starts.clear();
  return starts;
}

std::size_t line_of(std::string_view text, std::size_t offset) {
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<long>(offset), '\n'));
}

void write_atomic(const fs::path& target, std::string_view content) {
  fs::path tmp = target;
  tmp += ".versa-tmp-" + random_hex(6);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw RuntimeError(ErrorCode::unprocessable, "cannot write " + target.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw RuntimeError(ErrorCode::unprocessable, "write failed for " + target.string());
    }
  }
  std::error_code ec;
  if (fs::exists(target, ec)) fs::permissions(tmp, fs::status(target).permissions(), ec);
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw RuntimeError(ErrorCode::unprocessable, "cannot replace " + target.string() + ": " + ec.message());
  }
}

}  // namespace

SandboxFs::SandboxFs(fs::path root, std::size_t output_budget) : output_budget_(output_budget) {
  std::error_code ec;
  root_ = fs::canonical(root, ec);
  if (ec || !fs::is_directory(root_)) throw std::invalid_argument("sandbox root is not a directory: " + root.string());
}

fs::path SandboxFs::resolve(std::string_view path, const fs::path& base) const {
  if (path.empty()) throw RuntimeError(ErrorCode::bad_request, "path is empty");
  if (path.find('\0') != std::string_view::npos) throw SecurityError("path contains a NUL byte");
  fs::path p(path);
  if (p.is_relative()) p = base / p;
  std::error_code ec;
  fs::path resolved = fs::weakly_canonical(p, ec);
  if (ec) throw RuntimeError(ErrorCode::unprocessable, "cannot resolve path " + std::string(path) + ": " + ec.message());
  if (!within(root_, resolved)) {
    throw SecurityError("path is outside the sandbox (" + root_.string() + "): " + std::string(path));
  }
  if (fs::is_symlink(fs::symlink_status(resolved, ec))) {
    throw SecurityError("path is a dangling symlink: " + std::string(path));
  }
  return resolved;
}

std::string SandboxFs::read_bytes(const fs::path& resolved) const {
  std::error_code ec;
  if (!fs::exists(resolved, ec)) throw RuntimeError(ErrorCode::unprocessable, "no such file: " + resolved.string());
  if (fs::is_directory(resolved, ec)) {
    throw RuntimeError(ErrorCode::unprocessable,
                       resolved.string() + " is a directory; list it with execute_bash (ls) instead");
  }
  std::ifstream in(resolved, std::ios::binary);
  if (!in) throw RuntimeError(ErrorCode::unprocessable, "cannot open " + resolved.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

events::FileView SandboxFs::read(std::string_view path, const fs::path& base, std::optional<LineRange> range) const {
  fs::path resolved = resolve(path, base);
  std::string raw = read_bytes(resolved);
  if (raw.find('\0') != std::string::npos) {
    throw RuntimeError(ErrorCode::unprocessable,
                       resolved.string() + " looks like a binary file; use str_replace_editor view to convert it, "
                                           "or inspect it with shell tools");
  }
  std::string text = text::is_valid_utf8(raw) ? std::move(raw) : text::sanitize_utf8(raw);

  events::FileView view;
  view.path = resolved.string();
  auto starts = line_starts(text);
  view.line_count = starts.size();
  if (!range) {
    view.text = std::move(text);
    return view;
  }
  const long n = static_cast<long>(starts.size());
  long first = range->start, last = range->end == -1 ? n : range->end;
  if (first < 1 || (n > 0 && first > n) || (n == 0 && first != 1)) {
    throw RuntimeError(ErrorCode::unprocessable, "view_range start " + std::to_string(first) +
                                                     " is outside the file (1.." + std::to_string(n) + ")");
  }
  if (last < first || last > n) {
    throw RuntimeError(ErrorCode::unprocessable, "view_range end " + std::to_string(range->end) +
                                                     " must be -1 or between " + std::to_string(first) + " and " +
                                                     std::to_string(n));
  }
  if (n > 0) {
    std::size_t from = starts[static_cast<std::size_t>(first - 1)];
    std::size_t to = last < n ? starts[static_cast<std::size_t>(last)] : text.size();
    view.text = text.substr(from, to - from);
  }
  view.first_line = static_cast<std::size_t>(first);
  return view;
}

std::string SandboxFs::write(std::string_view path, const fs::path& base, std::string_view content) const {
  fs::path resolved = resolve(path, base);
  std::error_code ec;
  if (fs::is_directory(resolved, ec)) throw RuntimeError(ErrorCode::unprocessable, resolved.string() + " is a directory");
  const bool existed = fs::exists(resolved, ec);
  fs::create_directories(resolved.parent_path(), ec);
  if (ec) throw RuntimeError(ErrorCode::unprocessable, "cannot create " + resolved.parent_path().string() + ": " + ec.message());
  write_atomic(resolved, content);
  return (existed ? "Overwrote " : "Created ") + resolved.string() + " (" + std::to_string(content.size()) + " bytes)";
}

std::string SandboxFs::edit(std::string_view path, const fs::path& base, std::string_view old_snippet,
                            std::string_view new_snippet) const {
  if (old_snippet.empty()) throw RuntimeError(ErrorCode::bad_request, "old_str must not be empty");
  fs::path resolved = resolve(path, base);
  std::string before = read_bytes(resolved);
  auto lines = occurrence_lines(before, old_snippet);
  if (lines.empty()) {
    throw EditError("no match: old_str was not found verbatim in " + resolved.string() +
                    "; view the file and copy the exact text, including whitespace");
  }
  if (lines.size() > 1) {
    std::vector<std::string> nums;
    for (auto l : lines) nums.push_back(std::to_string(l));
    throw EditError("ambiguous edit: old_str occurs " + std::to_string(lines.size()) + " times in " +
                    resolved.string() + " (lines " + text::join(nums, ", ") +
                    "); include more surrounding context to make it unique");
  }
  std::string after = before;
  after.replace(before.find(old_snippet), old_snippet.size(), new_snippet);
  write_atomic(resolved, after);
  return diff_summary(resolved.string(), before, after);
}

std::vector<std::size_t> occurrence_lines(std::string_view haystack, std::string_view needle) {
  std::vector<std::size_t> out;
  if (needle.empty()) return out;
  for (auto pos = haystack.find(needle); pos != std::string_view::npos; pos = haystack.find(needle, pos + 1)) {
    out.push_back(line_of(haystack, pos));
  }
  return out;
}

std::vector<std::string_view> split_lines_exact(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (start < text.size()) {
    auto nl = text.find('\n', start);
    if (nl == std::string_view::npos) {
      out.push_back(text.substr(start));
      break;
    }
    out.push_back(text.substr(start, nl - start));
    start = nl + 1;
  }
  return out;
}

std::string diff_summary(std::string_view path, std::string_view before, std::string_view after, std::size_t context) {
  auto a = split_lines_exact(before), b = split_lines_exact(after);
  std::size_t prefix = 0;
  while (prefix < a.size() && prefix < b.size() && a[prefix] == b[prefix]) ++prefix;
  std::size_t suffix = 0;
  while (suffix < a.size() - prefix && suffix < b.size() - prefix &&
         a[a.size() - 1 - suffix] == b[b.size() - 1 - suffix]) {
    ++suffix;
  }
  std::size_t ctx_before = std::min(context, prefix);
  std::size_t ctx_after = std::min(context, suffix);
  std::size_t start = prefix - ctx_before;
  std::size_t a_len = a.size() - prefix - suffix + ctx_before + ctx_after;
  std::size_t b_len = b.size() - prefix - suffix + ctx_before + ctx_after;

  std::string out = "--- " + std::string(path) + "\n+++ " + std::string(path) + "\n";
  out += "@@ -" + std::to_string(start + 1) + "," + std::to_string(a_len) + " +" + std::to_string(start + 1) + "," +
         std::to_string(b_len) + " @@\n";
  for (std::size_t i = start; i < prefix; ++i) out += " " + std::string(a[i]) + "\n";
  for (std::size_t i = prefix; i < a.size() - suffix; ++i) out += "-" + std::string(a[i]) + "\n";
  for (std::size_t i = prefix; i < b.size() - suffix; ++i) out += "+" + std::string(b[i]) + "\n";
  for (std::size_t i = a.size() - suffix; i < a.size() - suffix + ctx_after; ++i) out += " " + std::string(a[i]) + "\n";
  return out;
}

}  // namespace versa::runtime
