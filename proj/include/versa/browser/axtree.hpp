#pragma once

#include <optional>
#include <string>
#include <vector>

#include "versa/core/events.hpp"

namespace versa::browser {

struct AxNode {
  std::string role;
  std::string name;
  std::optional<std::string> bid;
  std::vector<std::string> properties;  // "focused", "checked=true", "level=2"
  events::BBox bbox;                     // viewport-relative
  std::vector<AxNode> children;

  bool operator==(const AxNode&) const = default;
};

// One node per line, two spaces of indent per depth:
//   [a12] button 'Submit', focused
// With `clip`, only nodes whose box intersects it are written; kept nodes
// keep the indentation they have in the full serialization.
std::string serialize_axtree(const AxNode& root, const std::optional<events::BBox>& clip = std::nullopt);

struct SerializedTree {
  std::string text;
  bool truncated_to_viewport = false;
};

// Full tree if its estimated token count fits the budget, otherwise the
// viewport-clipped tree.
SerializedTree serialize_for_budget(const AxNode& root, const events::BBox& viewport, std::size_t token_budget);

inline constexpr std::size_t kDefaultAxtreeTokenBudget = 20000;

// Collects every bid in document order.
void collect_bids(const AxNode& root, std::vector<std::string>& out);

}  // namespace versa::browser
