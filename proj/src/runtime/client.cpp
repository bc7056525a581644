#include "versa/runtime/client.hpp"

#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <fcntl.h>
#include <thread>

#include "versa/core/bytes.hpp"
#include "versa/runtime/runtime.hpp"

namespace versa::runtime {

namespace {

using Clock = std::chrono::steady_clock;

int millis_left(Clock::time_point deadline) {
  auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now()).count();
  return left <= 0 ? 0 : static_cast<int>(std::min<long long>(left, 1 << 30));
}

}  // namespace

std::string new_call_id() { return "c-" + random_hex(12); }

Response InProcessEndpoint::call(const Request& request) { return runtime_.handle(request); }

RemoteEndpoint::RemoteEndpoint(std::string host, std::uint16_t port, RetryPolicy retry)
    : host_(std::move(host)), port_(port), retry_(retry) {}

RemoteEndpoint::~RemoteEndpoint() { disconnect(); }

void RemoteEndpoint::disconnect() {
  if (fd_ >= 0) close(fd_);
  fd_ = -1;
  buffer_.clear();
}

void RemoteEndpoint::connect_socket() {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  hints.ai_flags = AI_NUMERICSERV;
  addrinfo* res = nullptr;
  std::string port = std::to_string(port_);
  if (int rc = getaddrinfo(host_.c_str(), port.c_str(), &hints, &res); rc != 0) {
    throw TransportError("cannot resolve " + host_ + ": " + gai_strerror(rc));
  }
  std::string error = "no address";
  for (addrinfo* ai = res; ai && fd_ < 0; ai = ai->ai_next) {
    int fd = socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC | SOCK_NONBLOCK, ai->ai_protocol);
    if (fd < 0) continue;
    int rc = ::connect(fd, ai->ai_addr, ai->ai_addrlen);
    if (rc != 0 && errno == EINPROGRESS) {
      pollfd p{fd, POLLOUT, 0};
      rc = poll(&p, 1, static_cast<int>(retry_.connect_timeout.count()));
      if (rc == 1) {
        int err = 0;
        socklen_t len = sizeof err;
        getsockopt(fd, SOL_SOCKET, SO_ERROR, &err, &len);
        errno = err;
        rc = err == 0 ? 0 : -1;
      } else {
        errno = rc == 0 ? ETIMEDOUT : errno;
        rc = -1;
      }
    }
    if (rc == 0) {
      fcntl(fd, F_SETFL, fcntl(fd, F_GETFL) & ~O_NONBLOCK);
      int one = 1;
      setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
      fd_ = fd;
    } else {
      error = std::strerror(errno);
      close(fd);
    }
  }
  freeaddrinfo(res);
  if (fd_ < 0) throw TransportError("cannot connect to runtime at " + host_ + ":" + port + ": " + error);
}

Response RemoteEndpoint::attempt(const std::string& line, const Request& request) {
  if (fd_ < 0) connect_socket();
  std::string_view data = line;
  while (!data.empty()) {
    ssize_t n = send(fd_, data.data(), data.size(), MSG_NOSIGNAL);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) throw TransportError(std::string("send failed: ") + std::strerror(errno));
    data.remove_prefix(static_cast<std::size_t>(n));
  }
  if (drop_after_send_ > 0) {
    --drop_after_send_;
    disconnect();
    throw TransportError("connection dropped after send");
  }
  auto deadline = Clock::now() + std::chrono::duration_cast<Clock::duration>(
                                     std::chrono::duration<double>(request.timeout_s) + retry_.response_grace);
  for (;;) {
    if (auto nl = buffer_.find('\n'); nl != std::string::npos) {
      std::string reply = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      json j = json::parse(reply, nullptr, false);
      if (j.is_discarded()) throw TransportError("runtime sent malformed JSON");
      Response r = response_from_json(j);
      if (r.call_id != request.call_id && !r.call_id.empty()) continue;  // stale reply from an earlier attempt
      return r;
    }
    pollfd p{fd_, POLLIN, 0};
    int rc = poll(&p, 1, millis_left(deadline));
    if (rc == 0) throw TransportError("timed out waiting for the runtime's reply");
    if (rc < 0) {
      if (errno == EINTR) continue;
      throw TransportError(std::string("poll failed: ") + std::strerror(errno));
    }
    char chunk[65536];
    ssize_t n = read(fd_, chunk, sizeof chunk);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) throw TransportError("runtime closed the connection");
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

Response RemoteEndpoint::call(const Request& request) {
  std::lock_guard lock(mutex_);
  const std::string line = to_json(request).dump(-1, ' ', false, json::error_handler_t::replace) + "\n";
  std::string last_error;
  auto backoff = retry_.backoff;
  for (int i = 0; i < std::max(1, retry_.attempts); ++i) {
    try {
      return attempt(line, request);
    } catch (const TransportError& e) {
      last_error = e.what();
      disconnect();
    }
    if (i + 1 < retry_.attempts) {
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
  }
  throw TransportError("runtime at " + host_ + ":" + std::to_string(port_) + " unreachable after " +
                       std::to_string(std::max(1, retry_.attempts)) + " attempts: " + last_error);
}

SessionClient::SessionClient(Endpoint& endpoint, json open_args) : endpoint_(endpoint) {
  Request req;
  req.call_id = new_call_id();
  req.tool = "open_session";
  req.arguments = std::move(open_args);
  Response r = endpoint_.call(req);
  if (!r.ok) {
    throw RuntimeError(r.error ? r.error->code : ErrorCode::internal,
                       "could not open a runtime session: " + (r.error ? r.error->message : std::string("unknown")));
  }
  session_id_ = r.result.at("session_id").get<std::string>();
  workdir_ = r.result.at("workdir").get<std::string>();
}

SessionClient::~SessionClient() {
  try {
    close();
  } catch (const std::exception&) {
  }
}

Response SessionClient::call(const std::string& tool, json arguments, double timeout_s) {
  Request req;
  req.call_id = new_call_id();
  req.session_id = session_id_;
  req.tool = tool;
  req.arguments = std::move(arguments);
  req.timeout_s = timeout_s;
  return endpoint_.call(req);
}

events::ObservationBody SessionClient::observe(const std::string& tool, json arguments, double timeout_s) {
  Response r = call(tool, std::move(arguments), timeout_s);
  if (r.ok && r.observation) return *r.observation;
  if (r.ok) return events::ObservationBody::text(events::ObservationKind::system_note, r.result.dump());
  return events::ObservationBody::error(r.error ? r.error->message : "runtime call failed");
}

void SessionClient::close() {
  if (closed_) return;
  closed_ = true;
  Request req;
  req.call_id = new_call_id();
  req.session_id = session_id_;
  req.tool = "close_session";
  endpoint_.call(req);
}

}  // namespace versa::runtime
