#include "versa/runtime/runtime.hpp"

#include <atomic>
#include <condition_variable>
#include <deque>
#include <future>
#include <mutex>
#include <thread>
#include <unordered_map>

#include "process.hpp"
#include "versa/core/bytes.hpp"
#include "versa/core/text.hpp"
#include "versa/runtime/interpreter.hpp"
#include "versa/runtime/sandbox_fs.hpp"
#include "versa/tools/convert.hpp"

namespace versa::runtime {

namespace fs = std::filesystem;
using events::ObservationBody;
using events::ObservationKind;
using SteadyClock = std::chrono::steady_clock;

std::string_view to_string(SandboxMode mode) { return mode == SandboxMode::container ? "container" : "local-chroot"; }

SandboxMode parse_sandbox_mode(std::string_view s) {
  if (s == "container") return SandboxMode::container;
  if (s == "local-chroot" || s == "local") return SandboxMode::local;
  throw std::invalid_argument("unknown sandbox mode '" + std::string(s) + "' (expected container or local-chroot)");
}

void RuntimeConfig::validate() const {
  if (sandbox_root.empty()) throw std::invalid_argument("sandbox_root is required");
  if (mode == SandboxMode::container && launcher.empty()) {
    throw std::invalid_argument("container mode needs a launcher command in the runtime config");
  }
  if (output_budget == 0) throw std::invalid_argument("output_budget must be positive");
}

RuntimeConfig RuntimeConfig::from_json(const json& j) {
  RuntimeConfig c;
  if (j.contains("sandbox")) c.mode = parse_sandbox_mode(j["sandbox"].get<std::string>());
  if (j.contains("sandbox_root")) c.sandbox_root = j["sandbox_root"].get<std::string>();
  if (j.contains("launcher")) c.launcher = j["launcher"].get<std::vector<std::string>>();
  if (j.contains("python")) c.python = j["python"].get<std::string>();
  if (j.contains("idle_timeout_s")) c.idle_timeout = std::chrono::seconds(j["idle_timeout_s"].get<long>());
  if (j.contains("env")) c.env = j["env"].get<std::map<std::string, std::string>>();
  return c;
}

namespace {

struct Session {
  std::string id;
  fs::path workdir;
  ProcessOptions proc;
  std::unique_ptr<ShellSession> shell;
  std::unique_ptr<InterpreterSession> interp;
  std::mutex mutex;
  std::atomic<int> in_flight{0};
  std::atomic<SteadyClock::rep> last_used{0};

  void touch() { last_used = SteadyClock::now().time_since_epoch().count(); }
  SteadyClock::time_point idle_since() const {
    return SteadyClock::time_point(SteadyClock::duration(last_used.load()));
  }
};

std::string require_string(const json& args, const char* key) {
  if (!args.contains(key)) throw RuntimeError(ErrorCode::bad_request, std::string("missing required argument: ") + key);
  if (!args[key].is_string()) throw RuntimeError(ErrorCode::bad_request, std::string("argument must be a string: ") + key);
  return args[key].get<std::string>();
}

std::string substitute(std::string s, const std::map<std::string, std::string>& vars) {
  for (const auto& [key, value] : vars) {
    for (auto pos = s.find(key); pos != std::string::npos; pos = s.find(key, pos + value.size())) {
      s.replace(pos, key.size(), value);
    }
  }
  return s;
}

}  // namespace

struct Runtime::Impl {
  RuntimeConfig config;
  std::unique_ptr<SandboxFs> fs;

  mutable std::mutex sessions_mutex;
  std::unordered_map<std::string, std::shared_ptr<Session>> sessions;

  std::mutex cache_mutex;
  std::unordered_map<std::string, std::shared_future<Response>> cache;
  std::deque<std::string> cache_order;

  std::mutex reaper_mutex;
  std::condition_variable reaper_cv;
  bool stopping = false;
  std::thread reaper;

  std::shared_ptr<Session> find(const std::string& id) {
    std::lock_guard lock(sessions_mutex);
    auto it = sessions.find(id);
    if (it == sessions.end()) {
      throw SessionError("unknown or expired session '" + id + "'; open a new session");
    }
    return it->second;
  }

  json open_session(const json& args) {
    fs::path workdir = fs->root();
    if (args.contains("workdir")) {
      workdir = fs->resolve(require_string(args, "workdir"), fs->root());
      std::error_code ec;
      fs::create_directories(workdir, ec);
      if (ec) throw RuntimeError(ErrorCode::unprocessable, "cannot create workdir: " + ec.message());
    }
    auto s = std::make_shared<Session>();
    s->id = "s-" + random_hex(8);
    s->workdir = workdir;
    s->proc.workdir = workdir;
    s->proc.output_budget = config.output_budget;
    s->proc.env = detail::base_environment(workdir);
    for (const auto& [k, v] : config.env) s->proc.env[k] = v;
    if (args.contains("env")) {
      if (!args["env"].is_object()) throw RuntimeError(ErrorCode::bad_request, "env must be an object of strings");
      for (const auto& [k, v] : args["env"].items()) {
        if (!v.is_string()) throw RuntimeError(ErrorCode::bad_request, "env value for " + k + " must be a string");
        s->proc.env[k] = v.get<std::string>();
      }
    }
    if (config.mode == SandboxMode::container) {
      std::map<std::string, std::string> vars{
          {"{root}", fs->root().string()}, {"{workdir}", workdir.string()}, {"{session}", s->id}};
      for (const auto& part : config.launcher) s->proc.launcher.push_back(substitute(part, vars));
    }
    s->touch();
    {
      std::lock_guard lock(sessions_mutex);
      sessions.emplace(s->id, s);
    }
    return {{"session_id", s->id}, {"workdir", workdir.string()}};
  }

  json close_session(const std::string& id) {
    std::shared_ptr<Session> victim;
    {
      std::lock_guard lock(sessions_mutex);
      auto it = sessions.find(id);
      if (it == sessions.end()) throw SessionError("unknown or expired session '" + id + "'");
      victim = std::move(it->second);
      sessions.erase(it);
    }
    std::lock_guard lock(victim->mutex);  // let an in-flight call finish first
    victim->shell.reset();
    victim->interp.reset();
    return {{"closed", id}};
  }

  ObservationBody run_tool(Session& s, const Request& req) {
    const json& args = req.arguments;
    if (req.tool == "run_shell") {
      if (!s.shell) s.shell = std::make_unique<ShellSession>(s.proc);
      auto r = s.shell->run(require_string(args, "command"), req.timeout_s);
      auto body = ObservationBody::exec(ObservationKind::shell_output, r.output);
      body.truncated = r.truncated;
      return body;
    }
    if (req.tool == "run_code") {
      if (!s.interp) s.interp = std::make_unique<InterpreterSession>(s.proc, config.python);
      try {
        auto r = s.interp->run(require_string(args, "code"), req.timeout_s);
        auto body = ObservationBody::exec(ObservationKind::code_output, r.output);
        body.truncated = r.truncated;
        return body;
      } catch (const InterpreterCrashed& e) {
        return ObservationBody::error(e.what());
      }
    }
    if (req.tool == "read_file") {
      std::optional<LineRange> range;
      if (args.contains("view_range") && !args["view_range"].is_null()) {
        const json& vr = args["view_range"];
        if (!vr.is_array() || vr.size() != 2 || !vr[0].is_number_integer() || !vr[1].is_number_integer()) {
          throw RuntimeError(ErrorCode::bad_request, "view_range must be [start_line, end_line] (end -1 for EOF)");
        }
        range = LineRange{vr[0].get<long>(), vr[1].get<long>()};
      }
      auto view = fs->read(require_string(args, "path"), s.workdir, range);
      return events::truncate_observation(ObservationBody::file(std::move(view)), config.output_budget);
    }
    if (req.tool == "view_file") {
      auto resolved = fs->resolve(require_string(args, "path"), s.workdir);
      auto bytes = fs->read_bytes(resolved);
      try {
        auto view = tools::view_file_bytes(resolved.string(), bytes);
        return events::truncate_observation(ObservationBody::file(std::move(view)), config.output_budget);
      } catch (const tools::ConversionError& e) {
        throw RuntimeError(ErrorCode::unprocessable, e.what());
      }
    }
    if (req.tool == "write_file") {
      auto ack = fs->write(require_string(args, "path"), s.workdir, require_string(args, "content"));
      return ObservationBody::text(ObservationKind::system_note, ack);
    }
    if (req.tool == "edit_file") {
      auto diff = fs->edit(require_string(args, "path"), s.workdir, require_string(args, "old_str"),
                           require_string(args, "new_str"));
      return events::truncate_observation(ObservationBody::text(ObservationKind::system_note, diff),
                                          config.output_budget);
    }
    throw RuntimeError(ErrorCode::unknown_tool, "unknown tool '" + req.tool + "'");
  }

  Response execute(const Request& req) {
    bool known = false;
    for (const char* t : kRuntimeTools) known = known || req.tool == t;
    if (!known) {
      std::vector<std::string> names(std::begin(kRuntimeTools), std::end(kRuntimeTools));
      throw RuntimeError(ErrorCode::unknown_tool,
                         "unknown tool '" + req.tool + "'; available: " + text::join(names, ", "));
    }
    if (req.tool == "health") {
      std::lock_guard lock(sessions_mutex);
      return Response::control(req.call_id, {{"status", "ok"}, {"active_sessions", sessions.size()}});
    }
    if (req.tool == "open_session") return Response::control(req.call_id, open_session(req.arguments));
    if (req.tool == "close_session") return Response::control(req.call_id, close_session(req.session_id));

    auto session = find(req.session_id);
    ++session->in_flight;
    session->touch();
    struct Release {
      Session& s;
      ~Release() {
        s.touch();
        --s.in_flight;
      }
    } release{*session};
    std::lock_guard lock(session->mutex);
    return Response::success(req.call_id, run_tool(*session, req));
  }

  Response guarded(const Request& req) {
    try {
      return execute(req);
    } catch (const RuntimeError& e) {
      return Response::failure(req.call_id, e.code(), e.what());
    } catch (const std::exception& e) {
      return Response::failure(req.call_id, ErrorCode::internal, e.what());
    }
  }

  Response handle(const Request& req) {
    std::promise<Response> promise;
    std::shared_future<Response> existing;
    {
      std::lock_guard lock(cache_mutex);
      auto it = cache.find(req.call_id);
      if (it != cache.end()) {
        existing = it->second;
      } else {
        cache.emplace(req.call_id, promise.get_future().share());
        cache_order.push_back(req.call_id);
        while (cache_order.size() > config.idempotency_capacity) {
          auto victim = cache.find(cache_order.front());
          if (victim != cache.end() &&
              victim->second.wait_for(std::chrono::seconds(0)) != std::future_status::ready) {
            break;  // oldest is still running; keep it
          }
          if (victim != cache.end()) cache.erase(victim);
          cache_order.pop_front();
        }
      }
    }
    if (existing.valid()) return existing.get();
    Response r = guarded(req);
    promise.set_value(r);
    return r;
  }

  std::size_t reap_idle() {
    std::vector<std::shared_ptr<Session>> victims;
    auto cutoff = SteadyClock::now() - config.idle_timeout;
    {
      std::lock_guard lock(sessions_mutex);
      for (auto it = sessions.begin(); it != sessions.end();) {
        if (it->second->in_flight == 0 && it->second->idle_since() < cutoff) {
          victims.push_back(std::move(it->second));
          it = sessions.erase(it);
        } else {
          ++it;
        }
      }
    }
    return victims.size();  // processes die with the sessions here
  }
};

Runtime::Runtime(RuntimeConfig config) : impl_(std::make_unique<Impl>()) {
  config.validate();
  std::error_code ec;
  fs::create_directories(config.sandbox_root, ec);
  impl_->fs = std::make_unique<SandboxFs>(config.sandbox_root, config.output_budget);
  config.sandbox_root = impl_->fs->root();
  impl_->config = std::move(config);
  impl_->reaper = std::thread([im = impl_.get()] {
    std::unique_lock lock(im->reaper_mutex);
    while (!im->stopping) {
      im->reaper_cv.wait_for(lock, im->config.reap_interval);
      if (im->stopping) break;
      lock.unlock();
      im->reap_idle();
      lock.lock();
    }
  });
}

Runtime::~Runtime() {
  {
    std::lock_guard lock(impl_->reaper_mutex);
    impl_->stopping = true;
  }
  impl_->reaper_cv.notify_all();
  impl_->reaper.join();
}

Response Runtime::handle(const Request& request) { return impl_->handle(request); }

std::string Runtime::handle_line(std::string_view line) {
  json j = json::parse(line, nullptr, false);
  Request req;
  try {
    if (j.is_discarded()) throw RuntimeError(ErrorCode::bad_request, "request is not valid JSON");
    req = request_from_json(j);
  } catch (const RuntimeError& e) {
    std::string call_id = j.is_object() && j.contains("call_id") && j["call_id"].is_string() ? j["call_id"].get<std::string>() : "";
    return to_json(Response::failure(call_id, e.code(), e.what())).dump(-1, ' ', false, json::error_handler_t::replace);
  }
  return to_json(handle(req)).dump(-1, ' ', false, json::error_handler_t::replace);
}

std::size_t Runtime::active_sessions() const {
  std::lock_guard lock(impl_->sessions_mutex);
  return impl_->sessions.size();
}

std::size_t Runtime::reap_idle() { return impl_->reap_idle(); }

const RuntimeConfig& Runtime::config() const { return impl_->config; }

}  // namespace versa::runtime
