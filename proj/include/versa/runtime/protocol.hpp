#pragma once

#include <optional>
#include <string>

#include "versa/core/events.hpp"
#include "versa/core/json.hpp"
#include "versa/runtime/errors.hpp"

namespace versa::runtime {

inline constexpr double kDefaultCallTimeoutS = 120.0;

// One newline-delimited JSON request on the wire.
struct Request {
  std::string call_id;
  std::string session_id;
  std::string tool;
  json arguments = json::object();
  double timeout_s = kDefaultCallTimeoutS;
};

struct ErrorInfo {
  ErrorCode code = ErrorCode::internal;
  std::string message;
};

struct Response {
  std::string call_id;
  bool ok = false;
  std::optional<events::ObservationBody> observation;  // tool calls
  json result;                                         // control calls (open_session, health)
  std::optional<ErrorInfo> error;

  static Response success(std::string call_id, events::ObservationBody obs);
  static Response control(std::string call_id, json result);
  static Response failure(std::string call_id, ErrorCode code, std::string message);
};

json to_json(const Request& r);
// Throws RuntimeError(bad_request) naming the offending field.
Request request_from_json(const json& j);

json to_json(const Response& r);
Response response_from_json(const json& j);

}  // namespace versa::runtime
