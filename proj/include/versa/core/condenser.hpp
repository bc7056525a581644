#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "versa/core/events.hpp"

namespace versa::events {

inline constexpr std::string_view kDefaultPlaceholder =
    "Previous browser observation elided to save context. Re-browse if needed.";

struct CondenserConfig {
  std::size_t k = 1;
  std::string placeholder_text{kDefaultPlaceholder};

  void validate() const;  // throws std::invalid_argument on empty placeholder
};

// LLM-facing rewrite of a stream. Same length and order as the input; only
// browser_state observations outside the k most recent are replaced.
struct CondensedView {
  std::vector<Event> events;
  std::vector<Seq> masked_seqs;
};

CondensedView condense(std::span<const Event> events, const CondenserConfig& cfg);
CondensedView condense(const EventStream& stream, const CondenserConfig& cfg);
CondensedView condense(const CondensedView& view, const CondenserConfig& cfg);

}  // namespace versa::events
