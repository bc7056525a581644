#include "versa/core/assets.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace versa::assets {

std::filesystem::path root() {
  if (const char* env = std::getenv("VERSA_ASSET_DIR"); env && *env) return env;
  return VERSA_DEFAULT_ASSET_DIR;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string load(std::string_view relative) { return read_file(root() / std::filesystem::path(relative)); }

}  // namespace versa::assets
