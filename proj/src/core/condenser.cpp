#include "versa/core/condenser.hpp"

#include <algorithm>
#include <stdexcept>

namespace versa::events {

void CondenserConfig::validate() const {
  if (placeholder_text.empty()) throw std::invalid_argument("condenser placeholder_text must be non-empty");
}

CondensedView condense(std::span<const Event> events, const CondenserConfig& cfg) {
  cfg.validate();
  std::size_t browsing = 0;
  for (const auto& ev : events) {
    if (const auto* obs = ev.observation(); obs && obs->is_browser()) ++browsing;
  }
  const std::size_t to_mask = browsing > cfg.k ? browsing - cfg.k : 0;

  CondensedView view;
  view.events.reserve(events.size());
  std::size_t seen = 0;
  for (const auto& ev : events) {
    const auto* obs = ev.observation();
    if (obs && obs->is_browser() && seen++ < to_mask) {
      // The screenshot goes with the rest of the payload.
      ObservationBody placeholder = ObservationBody::text(ObservationKind::system_note, cfg.placeholder_text);
      placeholder.cause_seq = obs->cause_seq;
      view.events.push_back(Event{ev.seq, ev.source, ev.timestamp, std::move(placeholder)});
      view.masked_seqs.push_back(ev.seq);
    } else {
      view.events.push_back(ev);
    }
  }
  return view;
}

CondensedView condense(const EventStream& stream, const CondenserConfig& cfg) {
  auto events = stream.events();
  return condense(std::span<const Event>(events), cfg);
}

CondensedView condense(const CondensedView& view, const CondenserConfig& cfg) {
  CondensedView out = condense(std::span<const Event>(view.events), cfg);
  // Carry the earlier masks forward so the record of what was elided survives.
  std::vector<Seq> merged = view.masked_seqs;
  merged.insert(merged.end(), out.masked_seqs.begin(), out.masked_seqs.end());
  std::sort(merged.begin(), merged.end());
  merged.erase(std::unique(merged.begin(), merged.end()), merged.end());
  out.masked_seqs = std::move(merged);
  return out;
}

}  // namespace versa::events
