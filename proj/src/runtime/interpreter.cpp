#include "versa/runtime/interpreter.hpp"

#include <poll.h>
#include <signal.h>

#include <chrono>

#include "process.hpp"
#include "versa/core/assets.hpp"
#include "versa/core/json.hpp"
#include "versa/core/text.hpp"
#include "versa/runtime/errors.hpp"

namespace versa::runtime {

namespace {

using SteadyClock = std::chrono::steady_clock;
constexpr auto kInterruptGrace = std::chrono::seconds(3);

}  // namespace

struct InterpreterSession::Impl {
  ProcessOptions opts;
  std::string python;
  std::string driver;
  detail::ChildProcess child;
  std::string pending;  // bytes read past the last response line
  std::int64_t next_id = 1;
  bool err_open = true;

  void start() {
    detail::SpawnOptions so;
    so.argv = opts.launcher;
    so.argv.push_back(python);
    so.argv.push_back("-u");
    so.argv.push_back("-c");
    so.argv.push_back(driver);
    so.env = opts.env;
    so.cwd = opts.workdir;
    child = detail::spawn(so);
    pending.clear();
    err_open = true;
  }

  void stop() { detail::terminate(child); }

  // Reads until a full line is available or the deadline passes. nullopt on
  // timeout or EOF (eof is set).
  std::optional<std::string> read_line(SteadyClock::time_point deadline, bool& eof) {
    for (;;) {
      auto nl = pending.find('\n');
      if (nl != std::string::npos) {
        std::string line = pending.substr(0, nl);
        pending.erase(0, nl + 1);
        return line;
      }
      int wait_ms = detail::millis_until(deadline);
      if (wait_ms == 0) return std::nullopt;
      pollfd fds[2] = {{child.out, POLLIN, 0}, {err_open ? child.err : -1, POLLIN, 0}};
      int n = ::poll(fds, 2, wait_ms);
      if (n < 0) {
        if (errno == EINTR) continue;
        eof = true;
        return std::nullopt;
      }
      if (fds[1].revents & (POLLIN | POLLHUP)) {
        std::string discard;  // interpreter-level noise outside of cells
        if (!detail::read_some(child.err, discard)) err_open = false;
      }
      if (fds[0].revents & (POLLIN | POLLHUP | POLLERR)) {
        if (!detail::read_some(child.out, pending)) {
          eof = true;
          return std::nullopt;
        }
      }
    }
  }

  // Waits for the response with `id`, skipping stale ones.
  std::optional<json> await(std::int64_t id, SteadyClock::time_point deadline, bool& eof) {
    while (auto line = read_line(deadline, eof)) {
      json j = json::parse(*line, nullptr, false);
      if (j.is_object() && j.value("id", std::int64_t{-1}) == id) return j;
    }
    return std::nullopt;
  }
};

InterpreterSession::InterpreterSession(ProcessOptions opts, std::string python) : impl_(std::make_unique<Impl>()) {
  impl_->opts = std::move(opts);
  impl_->python = std::move(python);
  impl_->driver = assets::load("runtime/pyrepl.py");
  impl_->start();
}

InterpreterSession::~InterpreterSession() { impl_->stop(); }

void InterpreterSession::restart() {
  impl_->stop();
  impl_->start();
}

ExecResult InterpreterSession::run(std::string_view source, double timeout_s) {
  if (!(timeout_s > 0)) throw RuntimeError(ErrorCode::bad_request, "timeout_s must be positive");
  auto& im = *impl_;
  if (!im.child.running() || detail::poll_exit(im.child) != -1) restart();

  const std::int64_t id = im.next_id++;
  const auto started = SteadyClock::now();
  bool eof = false;
  try {
    detail::write_all(im.child.in, json{{"id", id}, {"code", std::string(source)}}.dump() + "\n");
  } catch (const RuntimeError&) {
    eof = true;
  }

  auto deadline = started + std::chrono::duration_cast<SteadyClock::duration>(std::chrono::duration<double>(timeout_s));
  std::optional<json> resp;
  bool timed_out = false;
  if (!eof) resp = im.await(id, deadline, eof);
  if (!resp && !eof) {
    timed_out = true;
    ::kill(im.child.pid, SIGINT);
    resp = im.await(id, SteadyClock::now() + kInterruptGrace, eof);
  }

  ExecResult result;
  auto& o = result.output;
  o.duration_ms = std::chrono::duration_cast<std::chrono::milliseconds>(SteadyClock::now() - started).count();

  if (!resp) {
    int status = eof ? detail::wait_exit(im.child, std::chrono::milliseconds(500)) : -1;
    restart();
    if (!timed_out) {
      throw InterpreterCrashed("interpreter crashed" +
                               (status >= 0 ? " (exit status " + std::to_string(status) + ")" : std::string()) +
                               "; it was restarted and all previous variables and imports are lost");
    }
    o.timed_out = true;
    o.exit_code = kTimeoutExitCode;
    o.stderr_text = "[interpreter did not respond to interrupt after timeout; restarted, previous state lost]\n";
    return result;
  }

  bool cut_out = false, cut_err = false;
  o.stdout_text = text::truncate_tail(resp->value("stdout", ""), im.opts.output_budget, &cut_out);
  o.stderr_text = text::truncate_tail(resp->value("stderr", ""), im.opts.output_budget, &cut_err);
  result.truncated = cut_out || cut_err || resp->value("truncated", false);
  if (timed_out) {
    o.timed_out = true;
    o.exit_code = kTimeoutExitCode;
  } else {
    o.exit_code = resp->value("status", "") == "ok" ? 0 : 1;
  }
  return result;
}

}  // namespace versa::runtime
