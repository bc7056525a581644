#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace versa::tools {

class ArchiveError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Read-only view over an in-memory zip file (stored and deflate entries).
class ZipReader {
 public:
  struct Entry {
    std::string name;
    std::uint16_t method = 0;
    std::uint32_t compressed_size = 0;
    std::uint32_t size = 0;
    std::uint32_t local_offset = 0;
  };

  // Throws ArchiveError if `data` is not a readable zip. The bytes must
  // outlive the reader.
  explicit ZipReader(std::string_view data);

  const std::vector<Entry>& entries() const { return entries_; }
  bool contains(std::string_view name) const;
  std::string read(std::string_view name) const;                    // throws if missing
  std::optional<std::string> try_read(std::string_view name) const;

 private:
  std::string_view data_;
  std::vector<Entry> entries_;
};

bool looks_like_zip(std::string_view data);

// Writes a zip with deflated entries; used to build spreadsheet and document fixtures.
class ZipWriter {
 public:
  void add(std::string name, std::string_view content);
  std::string finish() const;

 private:
  std::vector<std::pair<std::string, std::string>> files_;
};

// zlib helpers. `raw` selects headerless deflate; `gzip` expects a gzip wrapper.
std::string inflate_bytes(std::string_view data, bool raw, std::size_t limit = std::size_t{1} << 30);
std::string gunzip_bytes(std::string_view data, std::size_t limit = std::size_t{1} << 30);
std::string deflate_raw(std::string_view data);

}  // namespace versa::tools
