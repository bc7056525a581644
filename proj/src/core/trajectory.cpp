#include "versa/core/trajectory.hpp"

#include <fstream>
#include <sstream>

namespace versa::events {

namespace {

std::string_view file_kind_name(FileKind k) {
  return k == FileKind::plaintext ? "plaintext" : "converted_markdown";
}

FileKind parse_file_kind(std::string_view s) {
  if (s == "plaintext") return FileKind::plaintext;
  if (s == "converted_markdown") return FileKind::converted_markdown;
  throw std::invalid_argument("unknown file kind: " + std::string(s));
}

json bbox_json(const BBox& b) { return {{"x", b.x}, {"y", b.y}, {"width", b.width}, {"height", b.height}}; }

BBox bbox_from(const json& j) {
  return {j.at("x").get<double>(), j.at("y").get<double>(), j.at("width").get<double>(),
          j.at("height").get<double>()};
}

json content_json(const ObservationContent& content) {
  return std::visit(
      [](const auto& c) -> json {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, TextContent>) {
          return {{"text", c.text}};
        } else if constexpr (std::is_same_v<T, ExecOutput>) {
          return {{"stdout", c.stdout_text},
                  {"stderr", c.stderr_text},
                  {"exit_code", c.exit_code},
                  {"duration_ms", c.duration_ms},
                  {"timed_out", c.timed_out}};
        } else if constexpr (std::is_same_v<T, FileView>) {
          json j = {{"path", c.path},
                    {"file_kind", file_kind_name(c.kind)},
                    {"text", c.text},
                    {"line_count", c.line_count},
                    {"first_line", c.first_line},
                    {"source_mime", c.source_mime},
                    {"conversion_notes", c.conversion_notes}};
          if (c.image) j["image"] = to_json(*c.image);
          return j;
        } else {
          return to_json(c);
        }
      },
      content);
}

ObservationContent content_from(ObservationKind kind, const json& j) {
  switch (kind) {
    case ObservationKind::browser_state:
      return browser_observation_from_json(j);
    case ObservationKind::shell_output:
    case ObservationKind::code_output:
      return ExecOutput{j.at("stdout").get<std::string>(), j.at("stderr").get<std::string>(),
                        j.at("exit_code").get<int>(), j.at("duration_ms").get<std::int64_t>(),
                        j.at("timed_out").get<bool>()};
    case ObservationKind::file_content: {
      FileView v;
      v.path = j.at("path").get<std::string>();
      v.kind = parse_file_kind(j.at("file_kind").get<std::string>());
      v.text = j.at("text").get<std::string>();
      v.line_count = j.at("line_count").get<std::size_t>();
      v.first_line = j.value("first_line", std::size_t{1});
      v.source_mime = j.at("source_mime").get<std::string>();
      v.conversion_notes = j.value("conversion_notes", std::vector<std::string>{});
      if (j.contains("image")) v.image = image_from_json(j.at("image"));
      return v;
    }
    default:
      return TextContent{j.at("text").get<std::string>()};
  }
}

}  // namespace

TrajectoryParseError::TrajectoryParseError(std::size_t line, const std::string& what)
    : std::runtime_error("trajectory line " + std::to_string(line) + ": " + what), line_(line) {}

json to_json(const Image& image) { return {{"mime", image.mime}, {"image_b64", base64_encode(image.data)}}; }

Image image_from_json(const json& j) {
  Image img;
  img.mime = j.at("mime").get<std::string>();
  img.data = base64_decode(j.at("image_b64").get<std::string>());
  return img;
}

json to_json(const BrowserObservation& obs) {
  json elements = json::array();
  for (const auto& e : obs.elements) {
    elements.push_back({{"bid", e.bid},
                        {"role", e.role},
                        {"name", e.name},
                        {"bbox", bbox_json(e.bbox)},
                        {"visible", e.visible},
                        {"interactable", e.interactable},
                        {"in_viewport", e.in_viewport}});
  }
  json j = {{"url", obs.url},
            {"title", obs.title},
            {"screenshot", to_json(obs.screenshot)},
            {"elements", std::move(elements)},
            {"axtree_text", obs.axtree_text},
            {"axtree_truncated_to_viewport", obs.axtree_truncated_to_viewport},
            {"viewport",
             {{"width", obs.viewport.width},
              {"height", obs.viewport.height},
              {"scroll_x", obs.viewport.scroll_x},
              {"scroll_y", obs.viewport.scroll_y},
              {"page_height", obs.viewport.page_height}}}};
  if (obs.last_action_error) j["last_action_error"] = *obs.last_action_error;
  return j;
}

BrowserObservation browser_observation_from_json(const json& j) {
  BrowserObservation obs;
  obs.url = j.at("url").get<std::string>();
  obs.title = j.at("title").get<std::string>();
  obs.screenshot = image_from_json(j.at("screenshot"));
  for (const auto& e : j.at("elements")) {
    obs.elements.push_back(MarkedElement{e.at("bid").get<std::string>(), e.at("role").get<std::string>(),
                                         e.at("name").get<std::string>(), bbox_from(e.at("bbox")),
                                         e.at("visible").get<bool>(), e.at("interactable").get<bool>(),
                                         e.value("in_viewport", true)});
  }
  obs.axtree_text = j.at("axtree_text").get<std::string>();
  obs.axtree_truncated_to_viewport = j.at("axtree_truncated_to_viewport").get<bool>();
  const auto& vp = j.at("viewport");
  obs.viewport = Viewport{vp.at("width").get<int>(), vp.at("height").get<int>(), vp.at("scroll_x").get<double>(),
                          vp.at("scroll_y").get<double>(), vp.at("page_height").get<double>()};
  if (j.contains("last_action_error")) obs.last_action_error = j.at("last_action_error").get<std::string>();
  return obs;
}

json to_json(const ObservationBody& body) {
  return {{"type", "observation"},
          {"cause_seq", body.cause_seq},
          {"kind", to_string(body.kind)},
          {"truncated", body.truncated},
          {"content", content_json(body.content)}};
}

ObservationBody observation_from_json(const json& j) {
  ObservationBody body;
  body.cause_seq = j.value("cause_seq", Seq{0});
  body.kind = parse_observation_kind(j.at("kind").get<std::string>());
  body.truncated = j.value("truncated", false);
  body.content = content_from(body.kind, j.at("content"));
  body.validate();
  return body;
}

json to_json(const Event& event) {
  json body = std::visit(
      [](const auto& b) -> json {
        using T = std::decay_t<decltype(b)>;
        if constexpr (std::is_same_v<T, ActionBody>) {
          json j = {{"type", "action"}, {"tool", b.tool}, {"arguments", b.arguments}};
          if (b.thought) j["thought"] = *b.thought;
          return j;
        } else if constexpr (std::is_same_v<T, ObservationBody>) {
          return to_json(b);
        } else {
          return {{"type", "message"}, {"text", b.text}};
        }
      },
      event.body);
  return {{"seq", event.seq},
          {"source", to_string(event.source)},
          {"timestamp", format_rfc3339(event.timestamp)},
          {"body", std::move(body)}};
}

Event event_from_json(const json& j) {
  Event ev;
  ev.seq = j.at("seq").get<Seq>();
  ev.source = parse_source(j.at("source").get<std::string>());
  ev.timestamp = parse_rfc3339(j.at("timestamp").get<std::string>());
  const auto& body = j.at("body");
  const auto type = body.at("type").get<std::string>();
  if (type == "action") {
    ActionBody a;
    a.tool = body.at("tool").get<std::string>();
    a.arguments = body.at("arguments");
    if (!a.arguments.is_object()) throw std::invalid_argument("action arguments must be an object");
    if (body.contains("thought")) a.thought = body.at("thought").get<std::string>();
    ev.body = std::move(a);
  } else if (type == "observation") {
    ev.body = observation_from_json(body);
  } else if (type == "message") {
    ev.body = MessageBody{body.at("text").get<std::string>()};
  } else {
    throw std::invalid_argument("unknown body.type: " + type);
  }
  return ev;
}

std::string serialize_stream(std::span<const Event> events) {
  std::string out = json{{"format", kTrajectoryFormat}, {"version", kTrajectoryVersion}}.dump();
  out += '\n';
  for (const auto& ev : events) {
    out += to_json(ev).dump();
    out += '\n';
  }
  return out;
}

std::string serialize_stream(const EventStream& stream) {
  auto events = stream.events();
  return serialize_stream(std::span<const Event>(events));
}

std::vector<Event> deserialize_stream(std::string_view document) {
  std::vector<Event> events;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  bool saw_header = false;
  while (pos < document.size()) {
    std::size_t nl = document.find('\n', pos);
    std::string_view line =
        document.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? document.size() : nl + 1;
    try {
      json j = json::parse(line);
      if (!saw_header) {
        if (j.value("format", "") != kTrajectoryFormat) throw std::invalid_argument("missing trajectory header");
        if (j.value("version", 0) != kTrajectoryVersion) {
          throw std::invalid_argument("unsupported trajectory version");
        }
        saw_header = true;
      } else {
        Event ev = event_from_json(j);
        if (ev.seq != events.size()) {
          throw std::invalid_argument("expected seq " + std::to_string(events.size()) + ", got " +
                                      std::to_string(ev.seq));
        }
        if (const auto* obs = ev.observation()) {
          if (obs->cause_seq >= ev.seq || !events[obs->cause_seq].action()) {
            throw std::invalid_argument("cause_seq does not refer to an earlier action");
          }
        }
        events.push_back(std::move(ev));
      }
    } catch (const TrajectoryParseError&) {
      throw;
    } catch (const std::exception& e) {
      throw TrajectoryParseError(line_no, e.what());
    }
    ++line_no;
  }
  if (!saw_header) throw TrajectoryParseError(0, "missing trajectory header");
  return events;
}

void write_trajectory(const std::filesystem::path& path, std::span<const Event> events) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write trajectory: " + path.string());
  out << serialize_stream(events);
}

std::vector<Event> read_trajectory(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open trajectory: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return deserialize_stream(ss.str());
}

}  // namespace versa::events
