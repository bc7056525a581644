#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <string>
#include <thread>

#include "versa/runtime/runtime.hpp"

namespace versa::runtime {

struct BindAddress {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;  // 0 picks a free port
};

// "host:port", ":port" or "port".
BindAddress parse_bind(std::string_view s);

// Newline-delimited JSON over TCP, one thread per connection. Requests on
// one connection are answered in order.
class Server {
 public:
  Server(Runtime& runtime, BindAddress bind);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  std::uint16_t port() const { return port_; }
  const std::string& host() const { return host_; }

  void start();          // accept loop on a background thread
  void serve_forever();  // accept loop on the calling thread
  void stop();

 private:
  struct Connections;

  Runtime& runtime_;
  std::string host_;
  std::uint16_t port_ = 0;
  int listen_fd_ = -1;
  std::atomic<bool> stopping_{false};
  std::thread acceptor_;
  std::unique_ptr<Connections> conns_;

  void accept_loop();
};

}  // namespace versa::runtime
