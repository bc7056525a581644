#pragma once

#include <atomic>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "versa/core/events.hpp"
#include "versa/llm/gateway.hpp"
#include "versa/tools/registry.hpp"

namespace versa::agent {

struct AgentConfig {
  std::size_t k = 1;
  int tau = 10;
  int max_steps = 100;
  double temperature = 0.0;
  std::size_t token_budget_axtree = 20000;
  std::size_t output_byte_budget = events::kDefaultObservationByteBudget;
  std::vector<std::string> provider_chain{"tavily", "exa", "brave"};
  llm::BackendSpec backend;
  bool loop_nudge = false;  // extension: nudge after 3 identical actions in a row
  int max_output_tokens = 4096;

  void validate() const;  // tau >= 1, max_steps >= 1
};

inline constexpr int kWebQaMaxSteps = 60;
inline constexpr int kLoopNudgeThreshold = 3;

enum class RunStatus { finished, step_limit, fatal_error };

std::string_view to_string(RunStatus s);

struct RunResult {
  RunStatus status = RunStatus::fatal_error;
  std::optional<std::string> final_message;
  std::optional<std::string> extracted_answer;
  int steps_used = 0;
  events::EventStream stream;
  llm::Usage usage_totals;
  std::optional<std::string> error;
  std::vector<std::string> warnings;
};

// Planning prompt goes in before step i when i > 1 and (i - 1) mod tau == 0.
bool planning_due(int step, int tau);

std::string planning_prompt();
std::string loop_nudge_prompt();
std::string system_prompt();

class Controller {
 public:
  // All references must outlive the controller.
  Controller(AgentConfig config, llm::Gateway& gateway, const tools::Registry& registry, tools::ToolContext& tools,
             Clock clock = system_clock());

  RunResult run(std::string_view task);

  // Checked before each step; a set flag ends the run as fatal_error.
  void set_cancel_flag(const std::atomic<bool>* flag) { cancel_ = flag; }

 private:
  std::optional<llm::LLMResponse> decide(const events::EventStream& stream, std::string_view task, RunResult& result);

  AgentConfig config_;
  llm::Gateway& gateway_;
  const tools::Registry& registry_;
  tools::ToolContext& tools_;
  Clock clock_;
  std::vector<tools::ToolSchema> schemas_;
  const std::atomic<bool>* cancel_ = nullptr;
};

// Fills extracted_answer from the task and the final message. Backend
// failures leave it empty and add a warning.
RunResult resolve_answer(RunResult result, std::string_view task, llm::Gateway& gateway);

}  // namespace versa::agent
