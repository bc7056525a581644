#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

#include "versa/core/json.hpp"

namespace versa::browser {

enum class Verb {
  goto_url,
  click,
  fill,
  select_option,
  hover,
  press,
  scroll,
  go_back,
  go_forward,
  new_tab,
  close_tab,
  switch_tab,
  noop,
};

std::string_view to_string(Verb v);
std::optional<Verb> parse_verb(std::string_view s);
std::span<const Verb> all_verbs();
bool requires_bid(Verb v);

class ActionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct BrowserAction {
  Verb verb = Verb::noop;
  std::optional<std::string> bid;
  std::optional<std::string> url;    // goto, new_tab
  std::optional<std::string> text;   // fill
  std::optional<std::string> value;  // select_option
  std::optional<std::string> key;    // press, e.g. "Enter" or "Control+a"
  double dx = 0;                     // scroll
  double dy = 0;
  std::optional<int> tab;            // switch_tab

  bool operator==(const BrowserAction&) const = default;
};

// Throws ActionError naming the missing or malformed argument.
void validate(const BrowserAction& a);

// Accepts {"action": "click", "bid": "a3"} and friends; validates.
BrowserAction action_from_json(const json& j);
json to_json(const BrowserAction& a);

bool is_valid_bid(std::string_view bid);

}  // namespace versa::browser
