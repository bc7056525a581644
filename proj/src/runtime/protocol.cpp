#include "versa/runtime/protocol.hpp"

#include "versa/core/trajectory.hpp"

namespace versa::runtime {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::bad_request: return "bad_request";
    case ErrorCode::forbidden: return "forbidden";
    case ErrorCode::unknown_tool: return "unknown_tool";
    case ErrorCode::edit_conflict: return "edit_conflict";
    case ErrorCode::session_gone: return "session_gone";
    case ErrorCode::unprocessable: return "unprocessable";
    case ErrorCode::internal: return "internal";
  }
  return "internal";
}

namespace {

ErrorCode code_from_int(int v) {
  switch (v) {
    case 400: return ErrorCode::bad_request;
    case 403: return ErrorCode::forbidden;
    case 404: return ErrorCode::unknown_tool;
    case 409: return ErrorCode::edit_conflict;
    case 410: return ErrorCode::session_gone;
    case 422: return ErrorCode::unprocessable;
    default: return ErrorCode::internal;
  }
}

[[noreturn]] void bad(const std::string& what) { throw RuntimeError(ErrorCode::bad_request, what); }

}  // namespace

Response Response::success(std::string call_id, events::ObservationBody obs) {
  Response r;
  r.call_id = std::move(call_id);
  r.ok = true;
  r.observation = std::move(obs);
  return r;
}

Response Response::control(std::string call_id, json result) {
  Response r;
  r.call_id = std::move(call_id);
  r.ok = true;
  r.result = std::move(result);
  return r;
}

Response Response::failure(std::string call_id, ErrorCode code, std::string message) {
  Response r;
  r.call_id = std::move(call_id);
  r.error = ErrorInfo{code, std::move(message)};
  return r;
}

json to_json(const Request& r) {
  return {{"call_id", r.call_id},
          {"session_id", r.session_id},
          {"tool", r.tool},
          {"arguments", r.arguments},
          {"timeout_s", r.timeout_s}};
}

Request request_from_json(const json& j) {
  if (!j.is_object()) bad("request must be a JSON object");
  Request r;
  if (!j.contains("call_id") || !j["call_id"].is_string() || j["call_id"].get<std::string>().empty()) {
    bad("request needs a non-empty string call_id");
  }
  r.call_id = j["call_id"].get<std::string>();
  if (!j.contains("tool") || !j["tool"].is_string()) bad("request needs a string tool");
  r.tool = j["tool"].get<std::string>();
  if (j.contains("session_id")) {
    if (!j["session_id"].is_string()) bad("session_id must be a string");
    r.session_id = j["session_id"].get<std::string>();
  }
  if (j.contains("arguments")) {
    if (!j["arguments"].is_object()) bad("arguments must be an object");
    r.arguments = j["arguments"];
  }
  if (j.contains("timeout_s")) {
    if (!j["timeout_s"].is_number() || !(j["timeout_s"].get<double>() > 0)) bad("timeout_s must be a positive number");
    r.timeout_s = j["timeout_s"].get<double>();
  }
  return r;
}

json to_json(const Response& r) {
  json j = {{"call_id", r.call_id}, {"ok", r.ok}};
  if (r.observation) j["observation"] = events::to_json(*r.observation);
  if (!r.result.is_null()) j["result"] = r.result;
  if (r.error) j["error"] = {{"code", static_cast<int>(r.error->code)}, {"message", r.error->message}};
  return j;
}

Response response_from_json(const json& j) {
  Response r;
  r.call_id = j.value("call_id", "");
  r.ok = j.value("ok", false);
  if (j.contains("observation")) r.observation = events::observation_from_json(j["observation"]);
  if (j.contains("result")) r.result = j["result"];
  if (j.contains("error")) {
    const json& e = j["error"];
    r.error = ErrorInfo{code_from_int(e.value("code", 500)), e.value("message", "")};
  }
  return r;
}

}  // namespace versa::runtime
