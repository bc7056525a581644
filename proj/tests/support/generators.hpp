#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "versa/core/events.hpp"

namespace versa::testing {

struct StreamShape {
  std::size_t max_length = 50;
  double browser_share = 0.35;  // fraction of observations that are browser_state
  bool with_images = true;
};

// Random but well-formed stream: contiguous seqs, observations caused by
// earlier actions, every observation kind represented over many draws.
std::vector<events::Event> random_stream(std::mt19937_64& rng, const StreamShape& shape = {});

events::BrowserObservation random_browser_observation(std::mt19937_64& rng, bool with_image);

// Synthetic trajectory made only of action events drawn from `tools`.
std::vector<events::Event> random_tool_trajectory(std::mt19937_64& rng, const std::vector<std::string>& tools,
                                                  std::size_t max_calls);

}  // namespace versa::testing
