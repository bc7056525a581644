#include "versa/browser/action.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>

namespace versa::browser {

namespace {

constexpr std::array<std::pair<Verb, std::string_view>, 13> kVerbs{{
    {Verb::goto_url, "goto"},
    {Verb::click, "click"},
    {Verb::fill, "fill"},
    {Verb::select_option, "select_option"},
    {Verb::hover, "hover"},
    {Verb::press, "press"},
    {Verb::scroll, "scroll"},
    {Verb::go_back, "go_back"},
    {Verb::go_forward, "go_forward"},
    {Verb::new_tab, "new_tab"},
    {Verb::close_tab, "close_tab"},
    {Verb::switch_tab, "switch_tab"},
    {Verb::noop, "noop"},
}};

constexpr std::array<Verb, 13> kAll{Verb::goto_url, Verb::click,      Verb::fill,    Verb::select_option,
                                    Verb::hover,    Verb::press,      Verb::scroll,  Verb::go_back,
                                    Verb::go_forward, Verb::new_tab,  Verb::close_tab, Verb::switch_tab,
                                    Verb::noop};

std::optional<std::string> opt_string(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw ActionError(std::string("'") + key + "' must be a string");
  return it->get<std::string>();
}

double opt_number(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return 0;
  if (!it->is_number()) throw ActionError(std::string("'") + key + "' must be a number");
  return it->get<double>();
}

}  // namespace

std::string_view to_string(Verb v) {
  for (const auto& [verb, name] : kVerbs) {
    if (verb == v) return name;
  }
  return "noop";
}

std::optional<Verb> parse_verb(std::string_view s) {
  for (const auto& [verb, name] : kVerbs) {
    if (name == s) return verb;
  }
  return std::nullopt;
}

std::span<const Verb> all_verbs() { return kAll; }

bool requires_bid(Verb v) {
  return v == Verb::click || v == Verb::fill || v == Verb::select_option || v == Verb::hover;
}

bool is_valid_bid(std::string_view bid) {
  return !bid.empty() && bid.size() <= 32 &&
         std::all_of(bid.begin(), bid.end(), [](char c) { return std::isalnum(static_cast<unsigned char>(c)); });
}

void validate(const BrowserAction& a) {
  const std::string verb(to_string(a.verb));
  if (requires_bid(a.verb)) {
    if (!a.bid) throw ActionError(verb + " requires a bid");
  }
  if (a.bid && !is_valid_bid(*a.bid)) throw ActionError("bid must be alphanumeric, got '" + *a.bid + "'");
  if (a.verb == Verb::goto_url && (!a.url || a.url->empty())) throw ActionError("goto requires a url");
  if (a.verb == Verb::fill && !a.text) throw ActionError("fill requires text");
  if (a.verb == Verb::select_option && (!a.value || a.value->empty())) {
    throw ActionError("select_option requires a value");
  }
  if (a.verb == Verb::press && (!a.key || a.key->empty())) throw ActionError("press requires a key");
  if (a.verb == Verb::switch_tab && (!a.tab || *a.tab < 0)) throw ActionError("switch_tab requires a tab index >= 0");
  if (!std::isfinite(a.dx) || !std::isfinite(a.dy)) throw ActionError("scroll offsets must be finite");
}

BrowserAction action_from_json(const json& j) {
  if (!j.is_object()) throw ActionError("browser action must be an object");
  auto verb_name = opt_string(j, "action");
  if (!verb_name) throw ActionError("missing 'action'; expected one of goto, click, fill, select_option, hover, "
                                    "press, scroll, go_back, go_forward, new_tab, close_tab, switch_tab, noop");
  auto verb = parse_verb(*verb_name);
  if (!verb) throw ActionError("unknown browser action '" + *verb_name + "'");
  BrowserAction a;
  a.verb = *verb;
  a.bid = opt_string(j, "bid");
  a.url = opt_string(j, "url");
  a.text = opt_string(j, "text");
  a.value = opt_string(j, "value");
  a.key = opt_string(j, "key");
  a.dx = opt_number(j, "dx");
  a.dy = opt_number(j, "dy");
  if (auto it = j.find("tab"); it != j.end() && !it->is_null()) {
    if (!it->is_number_integer()) throw ActionError("'tab' must be an integer");
    a.tab = it->get<int>();
  }
  validate(a);
  return a;
}

json to_json(const BrowserAction& a) {
  json j{{"action", to_string(a.verb)}};
  if (a.bid) j["bid"] = *a.bid;
  if (a.url) j["url"] = *a.url;
  if (a.text) j["text"] = *a.text;
  if (a.value) j["value"] = *a.value;
  if (a.key) j["key"] = *a.key;
  if (a.verb == Verb::scroll) {
    j["dx"] = a.dx;
    j["dy"] = a.dy;
  }
  if (a.tab) j["tab"] = *a.tab;
  return j;
}

}  // namespace versa::browser
