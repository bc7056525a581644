#include "versa/tools/zip.hpp"

#include <zlib.h>

#include <cstring>

namespace versa::tools {

namespace {

constexpr std::uint32_t kLocalSig = 0x04034b50;
constexpr std::uint32_t kCentralSig = 0x02014b50;
constexpr std::uint32_t kEndSig = 0x06054b50;

std::uint16_t u16(std::string_view d, std::size_t at) {
  if (at + 2 > d.size()) throw ArchiveError("zip: truncated record");
  return static_cast<std::uint16_t>(static_cast<unsigned char>(d[at]) | static_cast<unsigned char>(d[at + 1]) << 8);
}

std::uint32_t u32(std::string_view d, std::size_t at) {
  return static_cast<std::uint32_t>(u16(d, at)) | static_cast<std::uint32_t>(u16(d, at + 2)) << 16;
}

void put16(std::string& out, std::uint16_t v) {
  out += static_cast<char>(v & 0xff);
  out += static_cast<char>(v >> 8);
}

void put32(std::string& out, std::uint32_t v) {
  put16(out, static_cast<std::uint16_t>(v & 0xffff));
  put16(out, static_cast<std::uint16_t>(v >> 16));
}

std::string run_inflate(std::string_view data, int window_bits, std::size_t limit) {
  z_stream zs{};
  if (inflateInit2(&zs, window_bits) != Z_OK) throw ArchiveError("inflateInit failed");
  zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(data.data()));
  zs.avail_in = static_cast<uInt>(data.size());
  std::string out;
  char buf[65536];
  int rc = Z_OK;
  while (rc != Z_STREAM_END) {
    zs.next_out = reinterpret_cast<Bytef*>(buf);
    zs.avail_out = sizeof buf;
    rc = inflate(&zs, Z_NO_FLUSH);
    if (rc == Z_BUF_ERROR && zs.avail_in == 0) break;  // truncated input: keep what we have
    if (rc != Z_OK && rc != Z_STREAM_END) {
      inflateEnd(&zs);
      throw ArchiveError(std::string("inflate failed: ") + (zs.msg ? zs.msg : "corrupt data"));
    }
    out.append(buf, sizeof buf - zs.avail_out);
    if (out.size() > limit) {
      inflateEnd(&zs);
      throw ArchiveError("decompressed data exceeds limit");
    }
    if (zs.avail_in == 0 && rc != Z_STREAM_END && zs.avail_out != 0) break;
  }
  inflateEnd(&zs);
  return out;
}

}  // namespace

std::string inflate_bytes(std::string_view data, bool raw, std::size_t limit) {
  return run_inflate(data, raw ? -MAX_WBITS : MAX_WBITS, limit);
}

std::string gunzip_bytes(std::string_view data, std::size_t limit) { return run_inflate(data, 16 + MAX_WBITS, limit); }

std::string deflate_raw(std::string_view data) {
  z_stream zs{};
  if (deflateInit2(&zs, Z_BEST_COMPRESSION, Z_DEFLATED, -MAX_WBITS, 8, Z_DEFAULT_STRATEGY) != Z_OK) {
    throw ArchiveError("deflateInit failed");
  }
  zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(data.data()));
  zs.avail_in = static_cast<uInt>(data.size());
  std::string out(deflateBound(&zs, static_cast<uLong>(data.size())), '\0');
  zs.next_out = reinterpret_cast<Bytef*>(out.data());
  zs.avail_out = static_cast<uInt>(out.size());
  deflate(&zs, Z_FINISH);
  out.resize(zs.total_out);
  deflateEnd(&zs);
  return out;
}

bool looks_like_zip(std::string_view data) { return data.size() >= 4 && u32(data, 0) == kLocalSig; }

ZipReader::ZipReader(std::string_view data) : data_(data) {
  if (data.size() < 22) throw ArchiveError("zip: file too small");
  std::size_t eocd = std::string_view::npos;
  const std::size_t lowest = data.size() > 22 + 65535 ? data.size() - 22 - 65535 : 0;
  for (std::size_t at = data.size() - 22 + 1; at-- > lowest;) {
    if (u32(data, at) == kEndSig) {
      eocd = at;
      break;
    }
  }
  if (eocd == std::string_view::npos) throw ArchiveError("zip: end of central directory not found");
  const std::uint16_t count = u16(data, eocd + 10);
  std::size_t at = u32(data, eocd + 16);
  if (at == 0xffffffff) throw ArchiveError("zip: zip64 archives are not supported");
  for (std::uint16_t i = 0; i < count; ++i) {
    if (u32(data, at) != kCentralSig) throw ArchiveError("zip: corrupt central directory");
    Entry e;
    e.method = u16(data, at + 10);
    e.compressed_size = u32(data, at + 20);
    e.size = u32(data, at + 24);
    const std::uint16_t name_len = u16(data, at + 28);
    const std::uint16_t extra_len = u16(data, at + 30);
    const std::uint16_t comment_len = u16(data, at + 32);
    e.local_offset = u32(data, at + 42);
    if (at + 46 + name_len > data.size()) throw ArchiveError("zip: truncated entry name");
    e.name = std::string(data.substr(at + 46, name_len));
    entries_.push_back(std::move(e));
    at += 46 + name_len + extra_len + comment_len;
  }
}

bool ZipReader::contains(std::string_view name) const {
  for (const auto& e : entries_) {
    if (e.name == name) return true;
  }
  return false;
}

std::optional<std::string> ZipReader::try_read(std::string_view name) const {
  for (const auto& e : entries_) {
    if (e.name != name) continue;
    if (u32(data_, e.local_offset) != kLocalSig) throw ArchiveError("zip: bad local header for " + e.name);
    std::size_t start = e.local_offset + 30 + u16(data_, e.local_offset + 26) + u16(data_, e.local_offset + 28);
    if (start + e.compressed_size > data_.size()) throw ArchiveError("zip: truncated data for " + e.name);
    std::string_view raw = data_.substr(start, e.compressed_size);
    if (e.method == 0) return std::string(raw);
    if (e.method == 8) return inflate_bytes(raw, true);
    throw ArchiveError("zip: unsupported compression method " + std::to_string(e.method) + " for " + e.name);
  }
  return std::nullopt;
}

std::string ZipReader::read(std::string_view name) const {
  auto r = try_read(name);
  if (!r) throw ArchiveError("zip: missing entry " + std::string(name));
  return *r;
}

void ZipWriter::add(std::string name, std::string_view content) { files_.emplace_back(std::move(name), content); }

std::string ZipWriter::finish() const {
  std::string out, central;
  for (const auto& [name, content] : files_) {
    const std::uint32_t crc =
        static_cast<std::uint32_t>(crc32(0, reinterpret_cast<const Bytef*>(content.data()), static_cast<uInt>(content.size())));
    const std::string packed = deflate_raw(content);
    const auto offset = static_cast<std::uint32_t>(out.size());
    put32(out, kLocalSig);
    put16(out, 20);
    put16(out, 0);
    put16(out, 8);
    put16(out, 0);
    put16(out, 0x21);  // 1980-01-01, fixed for reproducible bytes
    put32(out, crc);
    put32(out, static_cast<std::uint32_t>(packed.size()));
    put32(out, static_cast<std::uint32_t>(content.size()));
    put16(out, static_cast<std::uint16_t>(name.size()));
    put16(out, 0);
    out += name;
    out += packed;

    put32(central, kCentralSig);
    put16(central, 20);
    put16(central, 20);
    put16(central, 0);
    put16(central, 8);
    put16(central, 0);
    put16(central, 0x21);
    put32(central, crc);
    put32(central, static_cast<std::uint32_t>(packed.size()));
    put32(central, static_cast<std::uint32_t>(content.size()));
    put16(central, static_cast<std::uint16_t>(name.size()));
    put16(central, 0);
    put16(central, 0);
    put16(central, 0);
    put16(central, 0);
    put32(central, 0);
    put32(central, offset);
    central += name;
  }
  const auto cd_offset = static_cast<std::uint32_t>(out.size());
  out += central;
  put32(out, kEndSig);
  put16(out, 0);
  put16(out, 0);
  put16(out, static_cast<std::uint16_t>(files_.size()));
  put16(out, static_cast<std::uint16_t>(files_.size()));
  put32(out, static_cast<std::uint32_t>(central.size()));
  put32(out, cd_offset);
  put16(out, 0);
  return out;
}

}  // namespace versa::tools
