#pragma once

#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <string>

namespace versa::testing {

struct TempDir {
  std::filesystem::path path;

  explicit TempDir(const std::string& prefix = "versa-test") {
    static std::atomic<int> counter{0};
    path = std::filesystem::temp_directory_path() /
           (prefix + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
};

}  // namespace versa::testing
