#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "versa/core/condenser.hpp"
#include "versa/llm/gateway.hpp"

namespace versa::llm {

// system, user task, then one assistant turn per action and one tool turn per
// observation in seq order. Message events become user turns; a leading user
// message identical to `task` is not repeated.
std::vector<ChatTurn> build_prompt(const events::CondensedView& view, std::string_view task,
                                   std::string_view system_prompt);

std::string render_action(const events::ActionBody& action);

// Text shown to the model for an observation (image parts excluded).
std::string render_observation_text(const events::ObservationBody& obs);

std::string render_browser_text(const events::BrowserObservation& page);

}  // namespace versa::llm
