#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace versa::runtime {

// Wire-level error codes, HTTP-flavoured.
enum class ErrorCode : int {
  bad_request = 400,
  forbidden = 403,       // sandbox confinement
  unknown_tool = 404,
  edit_conflict = 409,   // no match / ambiguous edit
  session_gone = 410,
  unprocessable = 422,   // missing file, bad range, binary file...
  internal = 500,
};

std::string_view to_string(ErrorCode code);

class RuntimeError : public std::runtime_error {
 public:
  RuntimeError(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

class SecurityError : public RuntimeError {
 public:
  explicit SecurityError(const std::string& what) : RuntimeError(ErrorCode::forbidden, what) {}
};

class EditError : public RuntimeError {
 public:
  explicit EditError(const std::string& what) : RuntimeError(ErrorCode::edit_conflict, what) {}
};

class SessionError : public RuntimeError {
 public:
  explicit SessionError(const std::string& what) : RuntimeError(ErrorCode::session_gone, what) {}
};

// The interpreter died mid-call; it has been restarted with a fresh namespace.
class InterpreterCrashed : public RuntimeError {
 public:
  explicit InterpreterCrashed(const std::string& what) : RuntimeError(ErrorCode::internal, what) {}
};

// Could not reach the runtime service at all. Distinct from any tool error.
class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace versa::runtime
