#include "versa/llm/prompt.hpp"

#include <cstdio>

#include "versa/core/text.hpp"

namespace versa::llm {

using namespace versa::events;

namespace {

std::string number_lines(std::string_view body, std::size_t first_line) {
  std::string out;
  std::size_t n = first_line;
  for (const auto& line : text::split_lines(body)) {
    char prefix[24];
    std::snprintf(prefix, sizeof prefix, "%6zu\t", n++);
    out += prefix;
    out += line;
    out += '\n';
  }
  return out;
}

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.0f", v);
  return buf;
}

std::string render_exec(std::string_view label, const ExecOutput& out) {
  std::string s(label);
  if (out.timed_out) {
    s += " (timed out, exit code " + std::to_string(out.exit_code) + "):\n";
  } else {
    s += " (exit code " + std::to_string(out.exit_code) + "):\n";
  }
  s += out.stdout_text;
  if (!out.stderr_text.empty()) {
    if (!s.ends_with('\n')) s += '\n';
    s += "--- stderr ---\n";
    s += out.stderr_text;
  }
  return s;
}

std::string render_file(const FileView& v) {
  std::string s = "File: " + v.path;
  if (v.kind == FileKind::plaintext) {
    s += " (" + std::to_string(v.line_count) + " lines)\n";
    s += number_lines(v.text, v.first_line);
    return s;
  }
  s += " (" + v.source_mime + " converted to markdown)\n";
  for (const auto& note : v.conversion_notes) s += "Note: " + note + "\n";
  s += v.text;
  return s;
}

}  // namespace

std::string render_action(const ActionBody& action) {
  std::string s;
  if (action.thought && !action.thought->empty()) {
    s += *action.thought;
    s += "\n\n";
  }
  s += render_fenced_tool_call(tools::ToolCall{action.tool, action.arguments});
  return s;
}

std::string render_browser_text(const BrowserObservation& page) {
  std::string s = "Browser page: " + page.title + "\nURL: " + page.url + "\n";
  s += "Viewport: " + std::to_string(page.viewport.width) + "x" + std::to_string(page.viewport.height) +
       ", scrolled to y=" + format_number(page.viewport.scroll_y) + " of page height " +
       format_number(page.viewport.page_height) + "\n";
  if (page.last_action_error) s += "Last action error: " + *page.last_action_error + "\n";
  s += page.axtree_truncated_to_viewport ? "Accessibility tree (truncated to the current viewport):\n"
                                         : "Accessibility tree:\n";
  s += page.axtree_text;
  if (!s.ends_with('\n')) s += '\n';
  s += "\nInteractable elements (ids match the boxes in the screenshot):\n";
  bool any = false;
  for (const auto& e : page.elements) {
    if (!e.interactable || !e.visible) continue;
    any = true;
    s += "[" + e.bid + "] " + e.role + " '" + e.name + "'";
    if (!e.in_viewport) s += " (outside viewport; scroll to reach)";
    s += '\n';
  }
  if (!any) s += "(none)\n";
  return s;
}

std::string render_observation_text(const ObservationBody& obs) {
  switch (obs.kind) {
    case ObservationKind::shell_output:
      return render_exec("Shell output", std::get<ExecOutput>(obs.content));
    case ObservationKind::code_output:
      return render_exec("Code output", std::get<ExecOutput>(obs.content));
    case ObservationKind::file_content:
      return render_file(std::get<FileView>(obs.content));
    case ObservationKind::browser_state:
      return render_browser_text(std::get<BrowserObservation>(obs.content));
    case ObservationKind::search_results:
      return std::get<TextContent>(obs.content).text;
    case ObservationKind::error:
      return "ERROR: " + std::get<TextContent>(obs.content).text;
    case ObservationKind::system_note:
      return std::get<TextContent>(obs.content).text;
  }
  return {};
}

std::vector<ChatTurn> build_prompt(const CondensedView& view, std::string_view task, std::string_view system_prompt) {
  std::vector<ChatTurn> turns;
  turns.push_back(ChatTurn{Role::system, {TextPart{std::string(system_prompt)}}});
  turns.push_back(ChatTurn{Role::user, {TextPart{std::string(task)}}});
  for (std::size_t i = 0; i < view.events.size(); ++i) {
    const Event& ev = view.events[i];
    if (const auto* msg = ev.message()) {
      if (i == 0 && ev.source == Source::user && msg->text == task) continue;
      turns.push_back(ChatTurn{Role::user, {TextPart{msg->text}}});
    } else if (const auto* act = ev.action()) {
      turns.push_back(ChatTurn{Role::assistant, {TextPart{render_action(*act)}}});
    } else {
      const auto& obs = *ev.observation();
      ChatTurn turn{Role::tool, {TextPart{render_observation_text(obs)}}};
      if (const auto* page = std::get_if<BrowserObservation>(&obs.content); page && !page->screenshot.empty()) {
        turn.parts.push_back(ImagePart{page->screenshot.mime, page->screenshot.data});
      } else if (const auto* file = std::get_if<FileView>(&obs.content); file && file->image) {
        turn.parts.push_back(ImagePart{file->image->mime, file->image->data});
      }
      turns.push_back(std::move(turn));
    }
  }
  return turns;
}

}  // namespace versa::llm
