#include "support/generators.hpp"

namespace versa::testing {

using namespace versa::events;

namespace {

std::string random_text(std::mt19937_64& rng, std::size_t max_len) {
  static constexpr std::string_view kChars =
      "abcdefghijklmnopqrstuvwxyz ABCDEFGHIJ0123456789\n\t\"\\{}[]<>/é漢🙂";
  std::uniform_int_distribution<std::size_t> len(0, max_len);
  std::uniform_int_distribution<std::size_t> pick(0, kChars.size() - 1);
  std::string s;
  const std::size_t n = len(rng);
  for (std::size_t i = 0; i < n; ++i) {
    char c = kChars[pick(rng)];
    // Keep multibyte characters whole: only emit ASCII from the table, plus
    // the occasional full non-ASCII code point.
    if (static_cast<unsigned char>(c) < 0x80) {
      s.push_back(c);
    } else if (pick(rng) % 3 == 0) {
      s += "é漢🙂";
    }
  }
  return s;
}

Bytes random_bytes(std::mt19937_64& rng, std::size_t max_len) {
  std::uniform_int_distribution<std::size_t> len(1, max_len);
  std::uniform_int_distribution<int> byte(0, 255);
  Bytes b(len(rng));
  for (auto& x : b) x = static_cast<std::uint8_t>(byte(rng));
  return b;
}

double random_coord(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> d(-50.0, 1400.0);
  return d(rng);
}

}  // namespace

BrowserObservation random_browser_observation(std::mt19937_64& rng, bool with_image) {
  BrowserObservation obs;
  obs.url = "http://fixture.test/" + std::to_string(rng() % 1000);
  obs.title = random_text(rng, 12);
  if (with_image) obs.screenshot = Image{rng() % 2 ? "image/png" : "image/jpeg", random_bytes(rng, 64)};
  const std::size_t n = rng() % 5;
  for (std::size_t i = 0; i < n; ++i) {
    obs.elements.push_back(MarkedElement{"a" + std::to_string(i), i % 2 ? "button" : "link", random_text(rng, 8),
                                         BBox{random_coord(rng), random_coord(rng), 10.0 + static_cast<double>(i),
                                              0.5 + static_cast<double>(rng() % 40)},
                                         rng() % 4 != 0, rng() % 3 != 0, rng() % 2 == 0});
  }
  obs.axtree_text = random_text(rng, 40);
  obs.axtree_truncated_to_viewport = rng() % 2 == 0;
  obs.viewport = Viewport{1280, 720, 0.0, static_cast<double>(rng() % 900) / 3.0, 2000.25};
  if (rng() % 3 == 0) obs.last_action_error = random_text(rng, 10);
  return obs;
}

std::vector<Event> random_stream(std::mt19937_64& rng, const StreamShape& shape) {
  std::uniform_int_distribution<std::size_t> len(0, shape.max_length);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::size_t n = len(rng);
  std::vector<Event> out;
  std::vector<Seq> actions;
  const Timestamp base = parse_rfc3339("2025-05-01T12:00:00Z");
  static const std::vector<std::string> kTools = {"execute_bash", "execute_code", "str_replace_editor",
                                                  "browse", "search_web"};
  for (std::size_t i = 0; i < n; ++i) {
    Event ev;
    ev.seq = i;
    ev.timestamp = base + std::chrono::microseconds(static_cast<long long>(i) * 1'000'123);
    const double roll = unit(rng);
    if (i == 0 || roll < 0.1) {
      ev.source = i == 0 ? Source::user : Source::system;
      ev.body = MessageBody{random_text(rng, 30)};
    } else if (actions.empty() || roll < 0.45) {
      ActionBody a;
      a.tool = kTools[rng() % kTools.size()];
      a.arguments = {{"arg", random_text(rng, 10)}, {"n", static_cast<int>(rng() % 100)}};
      if (rng() % 2) a.thought = random_text(rng, 20);
      ev.source = Source::agent;
      ev.body = std::move(a);
      actions.push_back(i);
    } else {
      ObservationBody obs;
      obs.cause_seq = actions[rng() % actions.size()];
      if (unit(rng) < shape.browser_share) {
        obs = ObservationBody::browser(random_browser_observation(rng, shape.with_images));
        obs.cause_seq = actions.back();
      } else {
        switch (rng() % 6) {
          case 0:
            obs.kind = ObservationKind::shell_output;
            obs.content = ExecOutput{random_text(rng, 30), random_text(rng, 10), static_cast<int>(rng() % 3),
                                     static_cast<std::int64_t>(rng() % 5000), rng() % 5 == 0};
            break;
          case 1:
            obs.kind = ObservationKind::code_output;
            obs.content = ExecOutput{random_text(rng, 30), "", 0, 12, false};
            break;
          case 2: {
            FileView v;
            v.path = "dir/file" + std::to_string(i) + ".txt";
            v.kind = rng() % 2 ? FileKind::plaintext : FileKind::converted_markdown;
            v.text = random_text(rng, 40);
            v.line_count = rng() % 10;
            v.first_line = 1 + rng() % 3;
            v.source_mime = "text/plain";
            if (rng() % 2) v.conversion_notes.push_back(random_text(rng, 10));
            if (shape.with_images && rng() % 3 == 0) v.image = Image{"image/png", random_bytes(rng, 32)};
            obs.kind = ObservationKind::file_content;
            obs.content = std::move(v);
            break;
          }
          case 3:
            obs.kind = ObservationKind::search_results;
            obs.content = TextContent{random_text(rng, 40)};
            break;
          case 4:
            obs.kind = ObservationKind::error;
            obs.content = TextContent{random_text(rng, 20)};
            break;
          default:
            obs.kind = ObservationKind::system_note;
            obs.content = TextContent{random_text(rng, 20)};
            break;
        }
      }
      ev.source = Source::environment;
      ev.body = std::move(obs);
    }
    out.push_back(std::move(ev));
  }
  return out;
}

std::vector<Event> random_tool_trajectory(std::mt19937_64& rng, const std::vector<std::string>& tools,
                                          std::size_t max_calls) {
  std::uniform_int_distribution<std::size_t> len(1, max_calls);
  const std::size_t n = len(rng);
  std::vector<Event> out;
  for (std::size_t i = 0; i < n; ++i) {
    ActionBody a;
    a.tool = tools[rng() % tools.size()];
    out.push_back(Event{i, Source::agent, Timestamp{}, std::move(a)});
  }
  return out;
}

}  // namespace versa::testing
