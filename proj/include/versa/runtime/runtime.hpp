#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "versa/core/json.hpp"
#include "versa/runtime/protocol.hpp"
#include "versa/runtime/shell.hpp"

namespace versa::runtime {

enum class SandboxMode { local, container };

std::string_view to_string(SandboxMode mode);
SandboxMode parse_sandbox_mode(std::string_view s);  // "container" | "local-chroot"

struct RuntimeConfig {
  std::filesystem::path sandbox_root;
  SandboxMode mode = SandboxMode::local;
  // Container mode: argv prefix for every sandboxed process. "{root}",
  // "{workdir}" and "{session}" are substituted per session.
  std::vector<std::string> launcher;
  std::string python = "python3";
  std::chrono::seconds idle_timeout{30 * 60};
  std::chrono::seconds reap_interval{60};
  std::size_t output_budget = kOutputByteBudget;
  std::size_t idempotency_capacity = 4096;
  std::map<std::string, std::string> env;  // added to every session

  void validate() const;
  // Keys: sandbox, sandbox_root, launcher, python, idle_timeout_s, env.
  static RuntimeConfig from_json(const json& j);
};

// Wire-level tool names served by the runtime.
inline constexpr const char* kRuntimeTools[] = {"run_shell", "run_code",   "read_file", "view_file",
                                                "write_file", "edit_file", "open_session", "close_session",
                                                "health"};

// The service core: sessions, per-session serialization, idempotency cache,
// idle reaping. Transport-agnostic; the TCP server and the in-process
// endpoint both call handle().
class Runtime {
 public:
  explicit Runtime(RuntimeConfig config);
  ~Runtime();
  Runtime(const Runtime&) = delete;
  Runtime& operator=(const Runtime&) = delete;

  // Never throws for request-level problems; those become error responses.
  Response handle(const Request& request);
  // Parses one wire line and returns the serialized response line (no newline).
  std::string handle_line(std::string_view line);

  std::size_t active_sessions() const;
  std::size_t reap_idle();  // also runs periodically on a background thread
  const RuntimeConfig& config() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace versa::runtime
