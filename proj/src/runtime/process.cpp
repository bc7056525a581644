#include "process.hpp"

#include <fcntl.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <climits>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <string_view>

#include "versa/runtime/errors.hpp"

namespace versa::runtime::detail {

namespace {

[[noreturn]] void fail(const std::string& what) {
  throw RuntimeError(ErrorCode::internal, what + ": " + std::strerror(errno));
}

void make_pipe(int fds[2]) {
  if (::pipe2(fds, O_CLOEXEC) != 0) fail("pipe");
}

void close_fd(int& fd) {
  if (fd >= 0) ::close(fd);
  fd = -1;
}

}  // namespace

ChildProcess spawn(const SpawnOptions& opts) {
  if (opts.argv.empty()) throw std::invalid_argument("spawn: empty argv");
  static std::once_flag ignore_sigpipe;
  std::call_once(ignore_sigpipe, [] { ::signal(SIGPIPE, SIG_IGN); });
  int in[2], out[2], err[2] = {-1, -1};
  make_pipe(in);
  make_pipe(out);
  int log_fd = -1;
  if (opts.stderr_log.empty()) {
    make_pipe(err);
  } else {
    log_fd = ::open(opts.stderr_log.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0600);
    if (log_fd < 0) fail("open " + opts.stderr_log.string());
  }

  // Prepare everything the child needs before fork: no allocation after it.
  std::vector<std::string> env_strings;
  for (const auto& [k, v] : opts.env) env_strings.push_back(k + "=" + v);
  std::vector<char*> envp, argv;
  for (auto& s : env_strings) envp.push_back(s.data());
  envp.push_back(nullptr);
  std::vector<std::string> args = opts.argv;
  for (auto& s : args) argv.push_back(s.data());
  argv.push_back(nullptr);
  std::string cwd = opts.cwd.string();

  pid_t pid = ::fork();
  if (pid < 0) fail("fork");
  if (pid == 0) {
    ::setsid();
    ::dup2(in[0], 0);
    ::dup2(out[1], 1);
    ::dup2(log_fd >= 0 ? log_fd : err[1], 2);
    signal(SIGPIPE, SIG_DFL);
    signal(SIGINT, SIG_DFL);
    if (!cwd.empty() && ::chdir(cwd.c_str()) != 0) _exit(127);
    ::execvpe(argv[0], argv.data(), envp.data());
    _exit(127);
  }
  ::close(in[0]);
  ::close(out[1]);
  if (err[1] >= 0) ::close(err[1]);
  if (log_fd >= 0) ::close(log_fd);
  return ChildProcess{pid, in[1], out[0], err[0]};
}

void terminate(ChildProcess& child) {
  close_fd(child.in);
  close_fd(child.out);
  close_fd(child.err);
  if (child.pid > 0) {
    ::kill(-child.pid, SIGKILL);
    ::kill(child.pid, SIGKILL);
    int status = 0;
    while (::waitpid(child.pid, &status, 0) < 0 && errno == EINTR) {
    }
  }
  child.pid = -1;
}

int poll_exit(ChildProcess& child) {
  if (child.pid <= 0) return 0;
  int status = 0;
  pid_t r = ::waitpid(child.pid, &status, WNOHANG);
  if (r != child.pid) return -1;
  child.pid = -1;
  if (WIFEXITED(status)) return WEXITSTATUS(status);
  if (WIFSIGNALED(status)) return 128 + WTERMSIG(status);
  return 0;
}

int wait_exit(ChildProcess& child, std::chrono::milliseconds max) {
  auto until = std::chrono::steady_clock::now() + max;
  for (;;) {
    int status = poll_exit(child);
    if (status >= 0 || std::chrono::steady_clock::now() >= until) return status;
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
}

std::set<pid_t> descendants(pid_t root) {
  std::multimap<pid_t, pid_t> children;
  std::error_code ec;
  for (const auto& entry : std::filesystem::directory_iterator("/proc", ec)) {
    const std::string name = entry.path().filename().string();
    if (name.empty() || name.find_first_not_of("0123456789") != std::string::npos) continue;
    std::ifstream in(entry.path() / "stat");
    std::string stat;
    if (!std::getline(in, stat)) continue;
    // Format: pid (comm) state ppid ...; comm may contain spaces and parens.
    auto close = stat.rfind(')');
    if (close == std::string::npos) continue;
    std::istringstream rest(stat.substr(close + 1));
    char state = 0;
    pid_t ppid = 0;
    rest >> state >> ppid;
    children.emplace(ppid, static_cast<pid_t>(std::stol(name)));
  }
  std::set<pid_t> out;
  std::vector<pid_t> frontier{root};
  while (!frontier.empty()) {
    pid_t p = frontier.back();
    frontier.pop_back();
    auto [lo, hi] = children.equal_range(p);
    for (auto it = lo; it != hi; ++it) {
      if (out.insert(it->second).second) frontier.push_back(it->second);
    }
  }
  return out;
}

void write_all(int fd, std::string_view data) {
  while (!data.empty()) {
    ssize_t n = ::write(fd, data.data(), data.size());
    if (n < 0) {
      if (errno == EINTR) continue;
      fail("write to child");
    }
    data.remove_prefix(static_cast<std::size_t>(n));
  }
}

bool read_some(int fd, std::string& out) {
  char buf[65536];
  for (;;) {
    ssize_t n = ::read(fd, buf, sizeof buf);
    if (n > 0) {
      out.append(buf, static_cast<std::size_t>(n));
      return true;
    }
    if (n == 0) return false;
    if (errno == EINTR) continue;
    if (errno == EAGAIN) return true;
    return false;
  }
}

int millis_until(std::chrono::steady_clock::time_point deadline) {
  auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now()).count();
  if (left < 0) return 0;
  if (left > INT_MAX) return INT_MAX;
  return static_cast<int>(left);
}

std::map<std::string, std::string> base_environment(const std::filesystem::path& home) {
  std::map<std::string, std::string> env;
  for (const char* key : {"PATH", "LANG", "LC_ALL", "TZ", "http_proxy", "https_proxy", "HTTP_PROXY", "HTTPS_PROXY",
                          "no_proxy", "NO_PROXY"}) {
    if (const char* v = std::getenv(key)) env[key] = v;
  }
  if (!env.count("PATH")) env["PATH"] = "/usr/local/bin:/usr/bin:/bin";
  if (!env.count("LANG")) env["LANG"] = "C.UTF-8";
  env["HOME"] = home.string();
  env["TERM"] = "dumb";
  env["PAGER"] = "cat";
  env["GIT_PAGER"] = "cat";
  env["PYTHONUNBUFFERED"] = "1";
  env["PYTHONDONTWRITEBYTECODE"] = "1";
  return env;
}

}  // namespace versa::runtime::detail
