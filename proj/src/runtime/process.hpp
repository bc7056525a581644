#pragma once

#include <sys/types.h>

#include <chrono>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace versa::runtime::detail {

struct ChildProcess {
  pid_t pid = -1;
  int in = -1;   // write end of the child's stdin
  int out = -1;  // read end of the child's stdout
  int err = -1;  // read end of the child's stderr, -1 if merged into a log file

  bool running() const { return pid > 0; }
};

struct SpawnOptions {
  std::vector<std::string> argv;
  std::map<std::string, std::string> env;
  std::filesystem::path cwd;
  std::filesystem::path stderr_log;  // when set, stderr goes here instead of a pipe
};

// fork/exec in a new session (so the child leads its own process group).
ChildProcess spawn(const SpawnOptions& opts);

// SIGKILL the whole process group, reap, close fds. Safe on a dead child.
void terminate(ChildProcess& child);

// Returns the exit status if the child has exited (reaping it), -1 otherwise.
int poll_exit(ChildProcess& child);

// poll_exit, retried for up to `max`.
int wait_exit(ChildProcess& child, std::chrono::milliseconds max);

// All transitive children of `root`, read from /proc.
std::set<pid_t> descendants(pid_t root);

void write_all(int fd, std::string_view data);

// Reads what is available on fd into `out`. Returns false on EOF.
bool read_some(int fd, std::string& out);

// Milliseconds left until deadline, clamped to [0, INT_MAX].
int millis_until(std::chrono::steady_clock::time_point deadline);

// Environment for sandboxed children: a small host allowlist plus overrides.
std::map<std::string, std::string> base_environment(const std::filesystem::path& home);

}  // namespace versa::runtime::detail
