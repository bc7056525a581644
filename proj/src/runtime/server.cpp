#include "versa/runtime/server.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <list>
#include <mutex>
#include <stdexcept>

namespace versa::runtime {

namespace {

constexpr std::size_t kMaxLine = std::size_t{64} << 20;

bool send_all(int fd, std::string_view data) {
  while (!data.empty()) {
    ssize_t n = send(fd, data.data(), data.size(), MSG_NOSIGNAL);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) return false;
    data.remove_prefix(static_cast<std::size_t>(n));
  }
  return true;
}

}  // namespace

BindAddress parse_bind(std::string_view s) {
  BindAddress b;
  auto colon = s.rfind(':');
  std::string_view port = colon == std::string_view::npos ? s : s.substr(colon + 1);
  if (colon != std::string_view::npos && colon > 0) b.host = std::string(s.substr(0, colon));
  if (!port.empty()) {
    int p = 0;
    for (char c : port) {
      if (c < '0' || c > '9') throw std::invalid_argument("bad port in bind address '" + std::string(s) + "'");
      p = p * 10 + (c - '0');
      if (p > 65535) throw std::invalid_argument("port out of range in '" + std::string(s) + "'");
    }
    b.port = static_cast<std::uint16_t>(p);
  }
  return b;
}

struct Server::Connections {
  std::mutex mu;
  std::list<std::pair<int, std::thread>> live;
};

Server::Server(Runtime& runtime, BindAddress bind)
    : runtime_(runtime), host_(bind.host), conns_(std::make_unique<Connections>()) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  hints.ai_flags = AI_PASSIVE | AI_NUMERICSERV;
  addrinfo* res = nullptr;
  std::string port = std::to_string(bind.port);
  if (int rc = getaddrinfo(bind.host.c_str(), port.c_str(), &hints, &res); rc != 0) {
    throw std::runtime_error("cannot resolve bind address " + bind.host + ": " + gai_strerror(rc));
  }
  std::string last_error = "no usable address";
  for (addrinfo* ai = res; ai; ai = ai->ai_next) {
    int fd = socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC, ai->ai_protocol);
    if (fd < 0) continue;
    int one = 1;
    setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    if (::bind(fd, ai->ai_addr, ai->ai_addrlen) == 0 && listen(fd, 64) == 0) {
      listen_fd_ = fd;
      break;
    }
    last_error = std::strerror(errno);
    close(fd);
  }
  freeaddrinfo(res);
  if (listen_fd_ < 0) throw std::runtime_error("cannot bind " + bind.host + ":" + port + ": " + last_error);
  sockaddr_storage addr{};
  socklen_t len = sizeof addr;
  getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.ss_family == AF_INET6 ? reinterpret_cast<sockaddr_in6*>(&addr)->sin6_port
                                           : reinterpret_cast<sockaddr_in*>(&addr)->sin_port);
}

Server::~Server() { stop(); }

void Server::start() {
  acceptor_ = std::thread([this] { accept_loop(); });
}

void Server::serve_forever() { accept_loop(); }

void Server::stop() {
  if (stopping_.exchange(true)) return;
  if (listen_fd_ >= 0) shutdown(listen_fd_, SHUT_RDWR);
  if (acceptor_.joinable()) acceptor_.join();
  if (listen_fd_ >= 0) close(listen_fd_);
  listen_fd_ = -1;
  std::list<std::pair<int, std::thread>> live;
  {
    std::lock_guard lock(conns_->mu);
    for (auto& [fd, t] : conns_->live) shutdown(fd, SHUT_RDWR);
    live.swap(conns_->live);
  }
  for (auto& [fd, t] : live) {
    if (t.joinable()) t.join();
  }
}

void Server::accept_loop() {
  while (!stopping_) {
    pollfd p{listen_fd_, POLLIN, 0};
    int ready = poll(&p, 1, 200);
    if (ready <= 0) continue;
    int fd = accept4(listen_fd_, nullptr, nullptr, SOCK_CLOEXEC);
    if (fd < 0) continue;
    int one = 1;
    setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    std::lock_guard lock(conns_->mu);
    // Reap finished connection threads.
    for (auto it = conns_->live.begin(); it != conns_->live.end();) {
      if (it->first < 0) {
        it->second.join();
        it = conns_->live.erase(it);
      } else {
        ++it;
      }
    }
    conns_->live.emplace_back(fd, std::thread());
    auto slot = std::prev(conns_->live.end());
    slot->second = std::thread([this, fd, slot] {
      std::string buffer;
      char chunk[65536];
      bool open = true;
      while (open && !stopping_) {
        ssize_t n = read(fd, chunk, sizeof chunk);
        if (n < 0 && errno == EINTR) continue;
        if (n <= 0) break;
        buffer.append(chunk, static_cast<std::size_t>(n));
        for (auto nl = buffer.find('\n'); nl != std::string::npos; nl = buffer.find('\n')) {
          std::string line = buffer.substr(0, nl);
          buffer.erase(0, nl + 1);
          if (line.empty() || line == "\r") continue;
          std::string reply = runtime_.handle_line(line) + "\n";
          if (!send_all(fd, reply)) {
            open = false;
            break;
          }
        }
        if (buffer.size() > kMaxLine) {
          send_all(fd, to_json(Response::failure("", ErrorCode::bad_request, "request line too long")).dump() + "\n");
          break;
        }
      }
      close(fd);
      std::lock_guard lock(conns_->mu);
      slot->first = -1;
    });
  }
}

}  // namespace versa::runtime
