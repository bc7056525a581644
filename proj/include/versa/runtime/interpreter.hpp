#pragma once

#include <memory>
#include <string>
#include <string_view>

#include "versa/runtime/shell.hpp"

namespace versa::runtime {

// A persistent Python interpreter. Top-level bindings survive across run()
// calls; the repr of a trailing expression is printed like a notebook cell.
class InterpreterSession {
 public:
  InterpreterSession(ProcessOptions opts, std::string python = "python3");
  ~InterpreterSession();
  InterpreterSession(const InterpreterSession&) = delete;
  InterpreterSession& operator=(const InterpreterSession&) = delete;

  // exit_code 0 on success, 1 on an exception (traceback in stderr), 124 on
  // timeout. Throws InterpreterCrashed if the process died; by then a fresh
  // interpreter is already running.
  ExecResult run(std::string_view source, double timeout_s);

  void restart();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace versa::runtime
