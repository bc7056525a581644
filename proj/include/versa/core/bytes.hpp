#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace versa {

using Bytes = std::vector<std::uint8_t>;

inline Bytes to_bytes(std::string_view s) { return Bytes(s.begin(), s.end()); }

inline std::string to_string(std::span<const std::uint8_t> b) {
  return std::string(b.begin(), b.end());
}

std::string base64_encode(std::span<const std::uint8_t> data);

// Throws std::invalid_argument on characters outside the standard alphabet.
Bytes base64_decode(std::string_view text);

std::string sha256_hex(std::string_view data);

// Hex string of `n` bytes from the OS CSPRNG.
std::string random_hex(std::size_t n);

}  // namespace versa
