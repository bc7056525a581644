#include "versa/agent/controller.hpp"

#include <stdexcept>

#include "versa/core/assets.hpp"
#include "versa/core/condenser.hpp"
#include "versa/llm/prompt.hpp"

namespace versa::agent {

using events::ActionBody;
using events::MessageBody;
using events::ObservationBody;
using events::Source;

void AgentConfig::validate() const {
  if (tau < 1) throw std::invalid_argument("tau must be >= 1");
  if (max_steps < 1) throw std::invalid_argument("max_steps must be >= 1");
  if (output_byte_budget == 0) throw std::invalid_argument("output_byte_budget must be positive");
  if (token_budget_axtree == 0) throw std::invalid_argument("token_budget_axtree must be positive");
  if (temperature < 0) throw std::invalid_argument("temperature must be >= 0");
}

std::string_view to_string(RunStatus s) {
  switch (s) {
    case RunStatus::finished: return "finished";
    case RunStatus::step_limit: return "step_limit";
    case RunStatus::fatal_error: return "fatal_error";
  }
  return "?";
}

bool planning_due(int step, int tau) { return step > 1 && (step - 1) % tau == 0; }

std::string planning_prompt() { return assets::load("prompts/planning.v1.txt"); }
std::string loop_nudge_prompt() { return assets::load("prompts/loop_nudge.v1.txt"); }
std::string system_prompt() { return assets::load("prompts/system.v1.txt"); }

Controller::Controller(AgentConfig config, llm::Gateway& gateway, const tools::Registry& registry,
                       tools::ToolContext& tools, Clock clock)
    : config_(std::move(config)),
      gateway_(gateway),
      registry_(registry),
      tools_(tools),
      clock_(std::move(clock)),
      schemas_(registry.schemas()) {
  config_.validate();
}

namespace {

// Reduced view for the overflow retry: one browsing observation, halved text budgets.
events::CondensedView shrink(events::CondensedView view, std::size_t byte_budget) {
  for (auto& e : view.events) {
    if (auto* obs = std::get_if<ObservationBody>(&e.body); obs && !obs->is_browser()) {
      *obs = events::truncate_observation(std::move(*obs), byte_budget / 2);
    }
  }
  return view;
}

void add_usage(llm::Usage& total, const llm::Usage& u) {
  total.input_tokens += u.input_tokens;
  total.output_tokens += u.output_tokens;
}

}  // namespace

std::optional<llm::LLMResponse> Controller::decide(const events::EventStream& stream, std::string_view task,
                                                   RunResult& result) {
  const std::string system = system_prompt();
  llm::LLMRequest req;
  req.tools = schemas_;
  req.temperature = config_.temperature;
  req.max_output_tokens = config_.max_output_tokens;

  auto view = events::condense(stream, {config_.k, std::string(events::kDefaultPlaceholder)});
  req.turns = llm::build_prompt(view, task, system);
  try {
    return gateway_.complete(req);
  } catch (const llm::ContextOverflowError& e) {
    result.warnings.push_back(std::string("context overflow, retrying with k=1 and halved budgets: ") + e.what());
  }
  auto reduced = shrink(events::condense(view, {1, std::string(events::kDefaultPlaceholder)}), config_.output_byte_budget);
  req.turns = llm::build_prompt(reduced, task, system);
  try {
    return gateway_.complete(req);
  } catch (const llm::ContextOverflowError& e) {
    result.error = std::string("context overflow after reduced retry: ") + e.what();
    return std::nullopt;
  }
}

RunResult Controller::run(std::string_view task) {
  RunResult result;
  result.stream = events::EventStream(clock_);
  auto& stream = result.stream;
  stream.append(MessageBody{std::string(task)}, Source::user);

  std::optional<ActionBody> previous;
  int streak = 0;

  for (int step = 1; step <= config_.max_steps; ++step) {
    if (cancel_ && cancel_->load()) {
      result.status = RunStatus::fatal_error;
      result.error = "interrupted";
      stream.seal();
      return result;
    }
    if (planning_due(step, config_.tau)) stream.append(MessageBody{planning_prompt()}, Source::system);

    std::optional<llm::LLMResponse> response;
    try {
      response = decide(stream, task, result);
    } catch (const std::exception& e) {
      result.error = e.what();
    }
    if (!response) {
      result.status = RunStatus::fatal_error;
      stream.seal();
      return result;
    }
    result.steps_used = step;
    add_usage(result.usage_totals, response->usage);

    const bool finish_call = response->tool_call && response->tool_call->tool == tools::kFinishTool;
    if (response->finish || finish_call) {
      std::string message = response->finish ? *response->finish
                                              : response->tool_call->arguments.value("message", std::string());
      stream.append(ActionBody{std::string(tools::kFinishTool), {{"message", message}}, response->thought},
                    Source::agent);
      result.final_message = std::move(message);
      result.status = RunStatus::finished;
      stream.seal();
      return result;
    }

    ActionBody action{response->tool_call->tool, response->tool_call->arguments, response->thought};
    auto action_event = stream.append(action, Source::agent);
    ObservationBody obs = registry_.dispatch(*response->tool_call, tools_);
    if (!obs.is_browser()) obs = events::truncate_observation(std::move(obs), config_.output_byte_budget);
    stream.append(std::move(obs), Source::environment, action_event.seq);

    bool same = previous && previous->tool == action.tool && previous->arguments == action.arguments;
    streak = same ? streak + 1 : 1;
    previous = std::move(action);
    if (config_.loop_nudge && streak % kLoopNudgeThreshold == 0) {
      stream.append(MessageBody{loop_nudge_prompt()}, Source::system);
    }
  }
  result.status = RunStatus::step_limit;
  stream.seal();
  return result;
}

RunResult resolve_answer(RunResult result, std::string_view task, llm::Gateway& gateway) {
  if (result.status != RunStatus::finished || !result.final_message) {
    result.warnings.push_back("answer extraction skipped: run did not finish");
    return result;
  }
  try {
    result.extracted_answer = llm::extract_final_answer(task, *result.final_message, gateway);
  } catch (const std::exception& e) {
    result.extracted_answer.reset();
    result.warnings.push_back(std::string("answer extraction failed: ") + e.what());
  }
  return result;
}

}  // namespace versa::agent
