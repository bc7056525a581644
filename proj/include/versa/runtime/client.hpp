#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <mutex>
#include <string>

#include "versa/runtime/protocol.hpp"

namespace versa::runtime {

class Runtime;

// Where tool calls go: the service in this process or one over TCP.
class Endpoint {
 public:
  virtual ~Endpoint() = default;
  // Tool and protocol failures come back as error responses; only an
  // unreachable service throws (TransportError).
  virtual Response call(const Request& request) = 0;
};

class InProcessEndpoint : public Endpoint {
 public:
  explicit InProcessEndpoint(Runtime& runtime) : runtime_(runtime) {}
  Response call(const Request& request) override;

 private:
  Runtime& runtime_;
};

struct RetryPolicy {
  int attempts = 4;
  std::chrono::milliseconds backoff{100};  // doubled after each failure
  std::chrono::milliseconds connect_timeout{3000};
  std::chrono::seconds response_grace{30};  // added to the call's own timeout
};

// Retransmits the same call_id after a transport failure, so the service
// executes each call at most once.
class RemoteEndpoint : public Endpoint {
 public:
  RemoteEndpoint(std::string host, std::uint16_t port, RetryPolicy retry = {});
  ~RemoteEndpoint() override;
  Response call(const Request& request) override;

  // Test hook: the next N sends drop the connection right after writing.
  void drop_after_send(int n) { drop_after_send_ = n; }

 private:
  std::string host_;
  std::uint16_t port_;
  RetryPolicy retry_;
  std::mutex mutex_;
  int fd_ = -1;
  std::string buffer_;
  int drop_after_send_ = 0;

  void connect_socket();
  void disconnect();
  Response attempt(const std::string& line, const Request& request);
};

// One runtime session seen from the agent side.
class SessionClient {
 public:
  SessionClient(Endpoint& endpoint, json open_args = json::object());
  ~SessionClient();
  SessionClient(const SessionClient&) = delete;
  SessionClient& operator=(const SessionClient&) = delete;

  const std::string& session_id() const { return session_id_; }
  const std::string& workdir() const { return workdir_; }
  Endpoint& endpoint() { return endpoint_; }

  Response call(const std::string& tool, json arguments, double timeout_s = kDefaultCallTimeoutS);
  // Error responses become error observations.
  events::ObservationBody observe(const std::string& tool, json arguments, double timeout_s = kDefaultCallTimeoutS);

  void close();

 private:
  Endpoint& endpoint_;
  std::string session_id_;
  std::string workdir_;
  bool closed_ = false;
};

std::string new_call_id();

}  // namespace versa::runtime
