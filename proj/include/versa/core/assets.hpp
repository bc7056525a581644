#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace versa::assets {

// Root of the versioned text assets (prompts, runtime helpers). Honors
// VERSA_ASSET_DIR, falling back to the directory baked in at build time.
std::filesystem::path root();

// Reads assets/<relative>. Throws std::runtime_error if missing.
std::string load(std::string_view relative);

std::string read_file(const std::filesystem::path& path);

}  // namespace versa::assets
