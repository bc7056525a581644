#include "versa/core/events.hpp"

#include <array>
#include <utility>

#include "versa/core/text.hpp"

namespace versa::events {

namespace {

constexpr std::array<std::string_view, 4> kSourceNames = {"agent", "environment", "user", "system"};
constexpr std::array<std::string_view, 7> kKindNames = {
    "shell_output", "code_output", "file_content", "browser_state", "search_results", "error", "system_note"};

template <typename Enum, std::size_t N>
Enum parse_enum(const std::array<std::string_view, N>& names, std::string_view s, const char* what) {
  for (std::size_t i = 0; i < N; ++i) {
    if (names[i] == s) return static_cast<Enum>(i);
  }
  throw std::invalid_argument(std::string("unknown ") + what + ": " + std::string(s));
}

bool has_marker(std::string_view s) { return s.find(text::kTruncationMarker) != std::string_view::npos; }

}  // namespace

std::string_view to_string(Source s) { return kSourceNames.at(static_cast<std::size_t>(s)); }
std::string_view to_string(ObservationKind k) { return kKindNames.at(static_cast<std::size_t>(k)); }
Source parse_source(std::string_view s) { return parse_enum<Source>(kSourceNames, s, "source"); }
ObservationKind parse_observation_kind(std::string_view s) {
  return parse_enum<ObservationKind>(kKindNames, s, "observation kind");
}

bool is_supported_image_mime(std::string_view mime) { return mime == "image/png" || mime == "image/jpeg"; }

ObservationBody ObservationBody::text(ObservationKind kind, std::string text) {
  ObservationBody b;
  b.kind = kind;
  b.content = TextContent{std::move(text)};
  return b;
}

ObservationBody ObservationBody::exec(ObservationKind kind, ExecOutput out) {
  ObservationBody b;
  b.kind = kind;
  b.content = std::move(out);
  return b;
}

ObservationBody ObservationBody::file(FileView view) {
  ObservationBody b;
  b.kind = ObservationKind::file_content;
  b.content = std::move(view);
  return b;
}

ObservationBody ObservationBody::browser(BrowserObservation obs) {
  ObservationBody b;
  b.kind = ObservationKind::browser_state;
  b.content = std::move(obs);
  return b;
}

ObservationBody ObservationBody::error(std::string message) {
  return text(ObservationKind::error, std::move(message));
}

void ObservationBody::validate() const {
  const bool is_browser_content = std::holds_alternative<BrowserObservation>(content);
  if (is_browser() != is_browser_content) {
    throw std::invalid_argument("browser_state observations must carry a BrowserObservation and vice versa");
  }
  switch (kind) {
    case ObservationKind::shell_output:
    case ObservationKind::code_output:
      if (!std::holds_alternative<ExecOutput>(content)) {
        throw std::invalid_argument(std::string(to_string(kind)) + " observation needs exec output");
      }
      break;
    case ObservationKind::file_content:
      if (!std::holds_alternative<FileView>(content)) {
        throw std::invalid_argument("file_content observation needs a file view");
      }
      break;
    case ObservationKind::search_results:
    case ObservationKind::error:
    case ObservationKind::system_note:
      if (!std::holds_alternative<TextContent>(content)) {
        throw std::invalid_argument(std::string(to_string(kind)) + " observation needs text content");
      }
      break;
    case ObservationKind::browser_state:
      break;
  }
  if (const auto* img = std::get_if<BrowserObservation>(&content)) {
    if (!img->screenshot.empty() && !is_supported_image_mime(img->screenshot.mime)) {
      throw std::invalid_argument("unsupported screenshot mime: " + img->screenshot.mime);
    }
  }
  if (truncated) {
    bool marked = std::visit(
        [](const auto& c) -> bool {
          using T = std::decay_t<decltype(c)>;
          if constexpr (std::is_same_v<T, TextContent>) {
            return has_marker(c.text);
          } else if constexpr (std::is_same_v<T, ExecOutput>) {
            return has_marker(c.stdout_text) || has_marker(c.stderr_text);
          } else if constexpr (std::is_same_v<T, FileView>) {
            return has_marker(c.text);
          } else {
            return has_marker(c.axtree_text);
          }
        },
        content);
    if (!marked) throw std::invalid_argument("truncated observation lacks the elision marker");
  }
}

EventStream::EventStream(Clock clock) : clock_(std::move(clock)) {}

EventStream::EventStream(const EventStream& other) {
  std::lock_guard lock(other.mutex_);
  clock_ = other.clock_;
  events_ = other.events_;
  tools_ = other.tools_;
  sealed_ = other.sealed_;
}

EventStream& EventStream::operator=(const EventStream& other) {
  if (this == &other) return *this;
  std::scoped_lock lock(mutex_, other.mutex_);
  clock_ = other.clock_;
  events_ = other.events_;
  tools_ = other.tools_;
  sealed_ = other.sealed_;
  return *this;
}

Event EventStream::append(EventBody body, Source source, std::optional<Seq> cause_seq) {
  std::lock_guard lock(mutex_);
  if (sealed_) throw StreamError("stream is sealed; no appends after the agent finished");
  const Seq next = events_.size();
  if (auto* obs = std::get_if<ObservationBody>(&body)) {
    if (cause_seq) obs->cause_seq = *cause_seq;
    if (obs->cause_seq >= next) {
      throw StreamError("dangling cause_seq " + std::to_string(obs->cause_seq) + " on a stream of " +
                        std::to_string(next) + " events");
    }
    if (!events_[obs->cause_seq].action()) {
      throw StreamError("cause_seq " + std::to_string(obs->cause_seq) + " does not refer to an action");
    }
    try {
      obs->validate();
    } catch (const std::invalid_argument& e) {
      throw StreamError(e.what());
    }
  } else if (cause_seq) {
    throw StreamError("cause_seq is only meaningful for observations");
  }
  if (const auto* act = std::get_if<ActionBody>(&body)) {
    if (tools_ && !tools_->contains(act->tool)) throw StreamError("unregistered tool: " + act->tool);
    if (!act->arguments.is_object()) throw StreamError("action arguments must be an object");
  }
  Event ev{next, source, clock_(), std::move(body)};
  events_.push_back(ev);
  return ev;
}

void EventStream::restrict_tools(std::set<std::string> names) {
  std::lock_guard lock(mutex_);
  tools_ = std::move(names);
}

void EventStream::seal() {
  std::lock_guard lock(mutex_);
  sealed_ = true;
}

bool EventStream::sealed() const {
  std::lock_guard lock(mutex_);
  return sealed_;
}

std::size_t EventStream::size() const {
  std::lock_guard lock(mutex_);
  return events_.size();
}

Event EventStream::at(std::size_t index) const {
  std::lock_guard lock(mutex_);
  return events_.at(index);
}

std::vector<Event> EventStream::events() const {
  std::lock_guard lock(mutex_);
  return events_;
}

EventStream EventStream::from_events(std::vector<Event> events, Clock clock) {
  for (std::size_t i = 0; i < events.size(); ++i) {
    if (events[i].seq != i) throw StreamError("event seqs must be contiguous from 0");
    if (const auto* obs = events[i].observation()) {
      if (obs->cause_seq >= i || !events[obs->cause_seq].action()) {
        throw StreamError("event " + std::to_string(i) + " has an invalid cause_seq");
      }
    }
  }
  EventStream s(std::move(clock));
  s.events_ = std::move(events);
  return s;
}

ObservationBody truncate_observation(ObservationBody body, std::size_t byte_budget) {
  if (body.is_browser()) return body;
  bool any = false;
  auto cut = [&](std::string& s) {
    bool t = false;
    s = text::truncate_tail(s, byte_budget, &t);
    any = any || t;
  };
  std::visit(
      [&](auto& c) {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, TextContent>) {
          cut(c.text);
        } else if constexpr (std::is_same_v<T, ExecOutput>) {
          cut(c.stdout_text);
          cut(c.stderr_text);
        } else if constexpr (std::is_same_v<T, FileView>) {
          cut(c.text);
        }
      },
      body.content);
  if (any) body.truncated = true;
  return body;
}

}  // namespace versa::events
