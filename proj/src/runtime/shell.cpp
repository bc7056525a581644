#include "versa/runtime/shell.hpp"

#include <poll.h>
#include <signal.h>

#include <chrono>

#include "process.hpp"
#include "versa/core/bytes.hpp"
#include "versa/core/text.hpp"
#include "versa/runtime/errors.hpp"

namespace versa::runtime {

namespace {

using SteadyClock = std::chrono::steady_clock;

constexpr std::size_t kCaptureCap = 1 << 20;
constexpr std::size_t kTailKeep = 4096;
constexpr auto kKillGrace = std::chrono::seconds(2);

// Accumulates one stream, bounding memory while keeping the head (for the
// observation) and a tail window (for finding the end marker).
struct Capture {
  std::string data;
  bool overflow = false;
  std::size_t head_keep;

  explicit Capture(std::size_t budget) : head_keep(budget + 1024) {}

  void trim() {
    if (data.size() <= kCaptureCap) return;
    data = data.substr(0, head_keep) + data.substr(data.size() - kTailKeep);
    overflow = true;
  }
};

std::string finish_text(const std::string& raw, bool overflow, std::size_t budget, bool& truncated) {
  // An overflowed capture still holds more than `budget` head bytes, so it is always cut here.
  bool cut = false;
  std::string text = text::truncate_tail(text::sanitize_utf8(raw), budget, &cut);
  truncated = truncated || cut || overflow;
  return text;
}

}  // namespace

struct ShellSession::Impl {
  ProcessOptions opts;
  detail::ChildProcess child;

  void start() {
    detail::SpawnOptions so;
    so.argv = opts.launcher;
    for (const char* a : {"bash", "--noprofile", "--norc"}) so.argv.emplace_back(a);
    so.env = opts.env;
    so.cwd = opts.workdir;
    child = detail::spawn(so);
  }

  void stop() { detail::terminate(child); }
};

ShellSession::ShellSession(ProcessOptions opts) : impl_(std::make_unique<Impl>()) {
  impl_->opts = std::move(opts);
  impl_->start();
}

ShellSession::~ShellSession() { impl_->stop(); }

bool ShellSession::alive() { return impl_->child.running() && detail::poll_exit(impl_->child) == -1; }

void ShellSession::restart() {
  impl_->stop();
  impl_->start();
}

ExecResult ShellSession::run(std::string_view command, double timeout_s) {
  if (!(timeout_s > 0)) throw RuntimeError(ErrorCode::bad_request, "timeout_s must be positive");
  if (!alive()) restart();
  auto& child = impl_->child;
  const std::size_t budget = impl_->opts.output_budget;

  const std::string nonce = random_hex(8);
  const std::string end_marker = "__VERSA_END_" + nonce + "__";
  std::string src(command);
  std::erase(src, '\0');
  if (!src.empty() && src.back() != '\n') src += '\n';
  std::string script;
  script += "IFS= read -r -d '' __versa_src <<'__VERSA_EOF_" + nonce + "' || true\n";
  script += src;
  script += "__VERSA_EOF_" + nonce + "\n";
  script += "builtin eval \"$__versa_src\" </dev/null\n";
  script += "__versa_rc=$?\n";
  script += "builtin printf '%s %d\\n' '" + end_marker + "' \"$__versa_rc\"\n";
  script += "builtin printf '%s\\n' '" + end_marker + "' >&2\n";

  const auto before = detail::descendants(child.pid);
  const auto started = SteadyClock::now();
  Capture out(budget), err(budget);
  bool out_done = false, err_done = false, died = false, timed_out = false;
  int exit_code = 0;

  try {
    detail::write_all(child.in, script);
  } catch (const RuntimeError&) {
    died = true;
  }

  auto find_out_marker = [&] {
    auto pos = out.data.find(end_marker);
    if (pos == std::string::npos) return false;
    auto nl = out.data.find('\n', pos);
    if (nl == std::string::npos) return false;
    exit_code = std::atoi(out.data.c_str() + pos + end_marker.size());
    out.data.resize(pos);
    return true;
  };
  auto find_err_marker = [&] {
    auto pos = err.data.find(end_marker + "\n");
    if (pos == std::string::npos) return false;
    err.data.resize(pos);
    return true;
  };

  auto deadline = started + std::chrono::duration_cast<SteadyClock::duration>(std::chrono::duration<double>(timeout_s));
  while (!died && !(out_done && err_done)) {
    int wait_ms = detail::millis_until(deadline);
    if (wait_ms == 0) {
      if (timed_out) break;  // grace period over too
      timed_out = true;
      for (pid_t p : detail::descendants(child.pid)) {
        if (!before.count(p)) ::kill(p, SIGKILL);
      }
      deadline = SteadyClock::now() + kKillGrace;
      continue;
    }
    pollfd fds[2] = {{out_done ? -1 : child.out, POLLIN, 0}, {err_done ? -1 : child.err, POLLIN, 0}};
    int n = ::poll(fds, 2, wait_ms);
    if (n < 0) {
      if (errno == EINTR) continue;
      died = true;
      break;
    }
    if (!out_done && (fds[0].revents & (POLLIN | POLLHUP | POLLERR))) {
      if (!detail::read_some(child.out, out.data)) died = true;
      out_done = find_out_marker();
      out.trim();
    }
    if (!err_done && (fds[1].revents & (POLLIN | POLLHUP | POLLERR))) {
      if (!detail::read_some(child.err, err.data)) died = true;
      err_done = find_err_marker();
      err.trim();
    }
  }

  ExecResult result;
  auto& o = result.output;
  o.duration_ms = std::chrono::duration_cast<std::chrono::milliseconds>(SteadyClock::now() - started).count();
  o.stdout_text = finish_text(out.data, out.overflow, budget, result.truncated);
  o.stderr_text = finish_text(err.data, err.overflow, budget, result.truncated);
  o.exit_code = exit_code;

  const bool recovered = out_done && err_done;
  if (timed_out) {
    o.timed_out = true;
    o.exit_code = kTimeoutExitCode;
  }
  if (!recovered) {
    int status = detail::wait_exit(child, std::chrono::milliseconds(500));
    if (!timed_out) o.exit_code = status >= 0 ? status : 1;
    restart();
    if (!o.stderr_text.empty() && o.stderr_text.back() != '\n') o.stderr_text += '\n';
    o.stderr_text += timed_out ? "[command did not stop after timeout; shell restarted, cwd and environment reset]\n"
                               : "[shell exited; a new shell was started, cwd and environment reset]\n";
  }
  return result;
}

}  // namespace versa::runtime
