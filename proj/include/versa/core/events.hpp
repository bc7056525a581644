#pragma once

#include <cstdint>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "versa/core/bytes.hpp"
#include "versa/core/json.hpp"
#include "versa/core/time.hpp"

namespace versa::events {

using Seq = std::uint64_t;

enum class Source { agent, environment, user, system };

enum class ObservationKind {
  shell_output,
  code_output,
  file_content,
  browser_state,
  search_results,
  error,
  system_note,
};

std::string_view to_string(Source s);
std::string_view to_string(ObservationKind k);
Source parse_source(std::string_view s);
ObservationKind parse_observation_kind(std::string_view s);

struct Image {
  std::string mime;  // image/png or image/jpeg
  Bytes data;

  bool empty() const { return data.empty(); }
  bool operator==(const Image&) const = default;
};

bool is_supported_image_mime(std::string_view mime);

struct BBox {
  double x = 0;
  double y = 0;
  double width = 0;
  double height = 0;

  double right() const { return x + width; }
  double bottom() const { return y + height; }
  bool has_area() const { return width > 0 && height > 0; }
  // Open-interval overlap; boxes that only touch along an edge do not intersect.
  bool intersects(const BBox& other) const {
    return x < other.right() && other.x < right() && y < other.bottom() && other.y < bottom();
  }
  bool operator==(const BBox&) const = default;
};

struct MarkedElement {
  std::string bid;
  std::string role;
  std::string name;
  BBox bbox;  // viewport-relative CSS pixels
  bool visible = true;
  bool interactable = true;
  bool in_viewport = true;

  bool operator==(const MarkedElement&) const = default;
};

struct Viewport {
  int width = 1280;
  int height = 720;
  double scroll_x = 0;
  double scroll_y = 0;
  double page_height = 0;

  BBox rect() const { return {0, 0, static_cast<double>(width), static_cast<double>(height)}; }
  bool operator==(const Viewport&) const = default;
};

struct BrowserObservation {
  std::string url;
  std::string title;
  Image screenshot;  // Set-of-Marks annotated, viewport-sized
  std::vector<MarkedElement> elements;
  std::string axtree_text;
  bool axtree_truncated_to_viewport = false;
  Viewport viewport;
  std::optional<std::string> last_action_error;

  bool operator==(const BrowserObservation&) const = default;
};

struct TextContent {
  std::string text;
  bool operator==(const TextContent&) const = default;
};

struct ExecOutput {
  std::string stdout_text;
  std::string stderr_text;
  int exit_code = 0;
  std::int64_t duration_ms = 0;
  bool timed_out = false;

  bool operator==(const ExecOutput&) const = default;
};

enum class FileKind { plaintext, converted_markdown };

struct FileView {
  std::string path;
  FileKind kind = FileKind::plaintext;
  std::string text;
  std::size_t line_count = 0;
  std::size_t first_line = 1;  // 1-based number of text's first line when a range was requested
  std::string source_mime = "text/plain";
  std::vector<std::string> conversion_notes;
  std::optional<Image> image;  // set when the viewed file is itself an image

  bool operator==(const FileView&) const = default;
};

using ObservationContent = std::variant<TextContent, ExecOutput, FileView, BrowserObservation>;

struct ObservationBody {
  Seq cause_seq = 0;
  ObservationKind kind = ObservationKind::system_note;
  ObservationContent content;
  bool truncated = false;

  static ObservationBody text(ObservationKind kind, std::string text);
  static ObservationBody exec(ObservationKind kind, ExecOutput out);
  static ObservationBody file(FileView view);
  static ObservationBody browser(BrowserObservation obs);
  static ObservationBody error(std::string message);

  bool is_browser() const { return kind == ObservationKind::browser_state; }
  // Throws std::invalid_argument if kind and content disagree or a truncated
  // body carries no elision marker.
  void validate() const;

  bool operator==(const ObservationBody&) const = default;
};

struct ActionBody {
  std::string tool;
  json arguments = json::object();
  std::optional<std::string> thought;

  bool operator==(const ActionBody&) const = default;
};

// Free-form text that is neither a tool call nor its result: the task
// statement, planning prompts, controller notes.
struct MessageBody {
  std::string text;
  bool operator==(const MessageBody&) const = default;
};

using EventBody = std::variant<ActionBody, ObservationBody, MessageBody>;

struct Event {
  Seq seq = 0;
  Source source = Source::system;
  Timestamp timestamp{};
  EventBody body;

  const ActionBody* action() const { return std::get_if<ActionBody>(&body); }
  const ObservationBody* observation() const { return std::get_if<ObservationBody>(&body); }
  const MessageBody* message() const { return std::get_if<MessageBody>(&body); }

  bool operator==(const Event&) const = default;
};

class StreamError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Append-only history of one agent session. One writer; readers take
// snapshots.
class EventStream {
 public:
  explicit EventStream(Clock clock = system_clock());

  EventStream(const EventStream& other);
  EventStream& operator=(const EventStream& other);

  // For observations, `cause_seq` (if given) overrides body.cause_seq; either
  // way it must name an earlier action event.
  Event append(EventBody body, Source source, std::optional<Seq> cause_seq = std::nullopt);

  // Rejects ActionBody appends whose tool is not in `names`.
  void restrict_tools(std::set<std::string> names);

  void seal();
  bool sealed() const;

  std::size_t size() const;
  Event at(std::size_t index) const;
  std::vector<Event> events() const;

  static EventStream from_events(std::vector<Event> events, Clock clock = system_clock());

 private:
  mutable std::mutex mutex_;
  Clock clock_;
  std::vector<Event> events_;
  std::optional<std::set<std::string>> tools_;
  bool sealed_ = false;
};

// Applies the byte budget to every text field of a non-browsing observation.
ObservationBody truncate_observation(ObservationBody body, std::size_t byte_budget);

inline constexpr std::size_t kDefaultObservationByteBudget = 32768;

}  // namespace versa::events
