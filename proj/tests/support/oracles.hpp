#pragma once

#include <map>
#include <string>
#include <vector>

#include "versa/core/condenser.hpp"

namespace versa::testing {

// Single forward scan: remember where every browser_state observation sits,
// then overwrite all but the last k of those positions.
std::vector<events::Event> condense_oracle(const std::vector<events::Event>& stream, std::size_t k,
                                           const std::string& placeholder);

// Recount of action tool names, as percentages of all actions.
std::map<std::string, double> histogram_oracle(const std::vector<std::vector<events::Event>>& trajectories);

}  // namespace versa::testing
