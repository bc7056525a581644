#pragma once

#include <ostream>

namespace versa::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFatal = 1;
inline constexpr int kExitStepLimit = 2;
inline constexpr int kExitUsage = 64;

// Entry point of the `versa` executable.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace versa::cli
