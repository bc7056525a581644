#pragma once

#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "versa/browser/driver.hpp"
#include "versa/core/events.hpp"

namespace versa::browser {

struct SessionOptions {
  int width = 1280;
  int height = 720;
  std::size_t axtree_token_budget = kDefaultAxtreeTokenBudget;
};

// One browser context per agent session. Actions are serialized.
class BrowserSession {
 public:
  BrowserSession(std::unique_ptr<BrowserDriver> driver, SessionOptions options = {});

  // Applies the action and returns a fresh observation. Action failures end
  // up in last_action_error; only BrowserCrashed propagates.
  events::BrowserObservation execute_action(const BrowserAction& action);

  events::BrowserObservation build_observation();
  events::BrowserObservation build_observation(std::size_t token_budget);

  // Every distinct URL the session has shown, in order of first visit.
  std::vector<std::string> visited_urls() const;
  std::optional<events::BrowserObservation> last_observation() const;
  const SessionOptions& options() const { return options_; }

 private:
  events::BrowserObservation observe_locked(std::size_t token_budget, std::optional<std::string> error);

  mutable std::mutex mutex_;
  std::unique_ptr<BrowserDriver> driver_;
  SessionOptions options_;
  std::optional<events::BrowserObservation> last_;
  std::vector<std::string> visited_;
};

// Builds the observation from a raw page state: marks drawn host-side, tree
// serialized under the budget, bids missing from the payload stripped.
events::BrowserObservation make_observation(const PageState& state, std::size_t token_budget);

}  // namespace versa::browser
