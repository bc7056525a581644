#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "versa/core/events.hpp"

namespace versa::runtime {

inline constexpr int kTimeoutExitCode = 124;
inline constexpr std::size_t kOutputByteBudget = 65536;

struct ExecResult {
  events::ExecOutput output;
  bool truncated = false;  // stdout or stderr was cut to the byte budget
};

struct ProcessOptions {
  std::filesystem::path workdir;
  std::map<std::string, std::string> env;
  std::vector<std::string> launcher;  // argv prefix, e.g. a container exec wrapper
  std::size_t output_budget = kOutputByteBudget;
};

// A long-lived bash process. cwd, exports, functions and aliases persist
// across run() calls. Not thread-safe; callers serialize.
class ShellSession {
 public:
  explicit ShellSession(ProcessOptions opts);
  ~ShellSession();
  ShellSession(const ShellSession&) = delete;
  ShellSession& operator=(const ShellSession&) = delete;

  // On timeout, processes started by this command are killed and the result
  // has timed_out=true, exit_code=124. If the shell itself does not recover,
  // it is restarted and stderr says so.
  ExecResult run(std::string_view command, double timeout_s);

  bool alive();
  void restart();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace versa::runtime
