#include "versa/tools/registry.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "versa/browser/session.hpp"
#include "versa/core/text.hpp"
#include "versa/runtime/client.hpp"
#include "versa/search/search.hpp"

namespace versa::tools {

using events::ObservationBody;
using events::ObservationKind;

namespace {

bool type_matches(ParamType t, const json& v) {
  switch (t) {
    case ParamType::string: return v.is_string();
    case ParamType::integer: return v.is_number_integer() || (v.is_number_float() && std::floor(v.get<double>()) == v.get<double>());
    case ParamType::number: return v.is_number();
    case ParamType::boolean: return v.is_boolean();
    case ParamType::object: return v.is_object();
    case ParamType::array: return v.is_array();
  }
  return false;
}

ParamSpec param(std::string name, ParamType type, bool required, std::string description,
                std::vector<std::string> allowed = {}) {
  return {std::move(name), type, required, std::move(description), std::move(allowed)};
}

runtime::SessionClient& need_runtime(ToolContext& ctx) {
  if (!ctx.runtime) throw std::runtime_error("no sandbox runtime is attached to this session");
  return *ctx.runtime;
}

ObservationBody run_bash(const json& args, ToolContext& ctx) {
  double timeout = args.contains("timeout") ? args["timeout"].get<double>() : ctx.timeout_s;
  return need_runtime(ctx).observe("run_shell", {{"command", args["command"]}}, timeout);
}

ObservationBody run_code(const json& args, ToolContext& ctx) {
  return need_runtime(ctx).observe("run_code", {{"code", args["code"]}}, ctx.timeout_s);
}

ObservationBody run_editor(const json& args, ToolContext& ctx) {
  const std::string cmd = args["command"];
  auto& rt = need_runtime(ctx);
  if (cmd == "view") {
    if (args.contains("view_range") && !args["view_range"].is_null()) {
      return rt.observe("read_file", {{"path", args["path"]}, {"view_range", args["view_range"]}}, ctx.timeout_s);
    }
    return rt.observe("view_file", {{"path", args["path"]}}, ctx.timeout_s);
  }
  if (cmd == "create") {
    if (!args.contains("file_text") || !args["file_text"].is_string()) {
      return ObservationBody::error("missing required parameter: file_text (needed by command 'create')");
    }
    return rt.observe("write_file", {{"path", args["path"]}, {"content", args["file_text"]}}, ctx.timeout_s);
  }
  for (const char* p : {"old_str", "new_str"}) {
    if (!args.contains(p) || !args[p].is_string()) {
      return ObservationBody::error(std::string("missing required parameter: ") + p +
                                    " (needed by command 'str_replace')");
    }
  }
  return rt.observe("edit_file", {{"path", args["path"]}, {"old_str", args["old_str"]}, {"new_str", args["new_str"]}},
                    ctx.timeout_s);
}

ObservationBody run_browse(const json& args, ToolContext& ctx) {
  if (!ctx.browser) return ObservationBody::error("no browser is attached to this session");
  browser::BrowserAction action;
  try {
    action = browser::action_from_json(args);
  } catch (const browser::ActionError& e) {
    return ObservationBody::error(std::string("invalid browse call: ") + e.what());
  }
  return ObservationBody::browser(ctx.browser->execute_action(action));
}

ObservationBody run_search(const json& args, ToolContext& ctx) {
  if (!ctx.search) return ObservationBody::error("no search provider is configured for this session");
  search::SearchQuery q;
  q.query = args["query"];
  if (args.contains("max_results")) q.max_results = args["max_results"].get<int>();
  try {
    return search::render_observation(ctx.search->search(q));
  } catch (const search::QueryError& e) {
    return ObservationBody::error(std::string("invalid search: ") + e.what());
  } catch (const search::AllProvidersFailed& e) {
    return ObservationBody::error(e.what());
  }
}

ObservationBody run_finish(const json& args, ToolContext&) {
  std::string message = args.value("message", "");
  return ObservationBody::text(ObservationKind::system_note,
                               message.empty() ? "Task finished." : "Task finished: " + message);
}

constexpr std::array<std::string_view, 8> kCategories{"bash",    "ipython", "edit_file",     "view_file",
                                                      "browser", "search_engine", "finish", "other"};

}  // namespace

void Registry::register_tool(ToolSchema schema, ToolHandler handler) {
  schema.validate();
  if (!handler) throw std::invalid_argument("tool " + schema.name + " has no handler");
  if (contains(schema.name)) throw std::invalid_argument("tool already registered: " + schema.name);
  tools_.push_back({std::move(schema), std::move(handler)});
}

bool Registry::contains(std::string_view name) const { return find(name) != nullptr; }

const ToolSchema* Registry::find(std::string_view name) const {
  for (const auto& e : tools_) {
    if (e.schema.name == name) return &e.schema;
  }
  return nullptr;
}

std::vector<ToolSchema> Registry::schemas() const {
  std::vector<ToolSchema> out;
  for (const auto& e : tools_) out.push_back(e.schema);
  return out;
}

std::vector<std::string> Registry::names() const {
  std::vector<std::string> out;
  for (const auto& e : tools_) out.push_back(e.schema.name);
  return out;
}

Registry Registry::without(std::string_view name) const {
  Registry r;
  for (const auto& e : tools_) {
    if (e.schema.name != name) r.tools_.push_back(e);
  }
  return r;
}

ObservationBody Registry::dispatch(const ToolCall& call, ToolContext& ctx) const {
  auto it = std::find_if(tools_.begin(), tools_.end(), [&](const Entry& e) { return e.schema.name == call.tool; });
  if (it == tools_.end()) {
    return ObservationBody::error("unknown tool '" + call.tool + "'; available tools: " + text::join(names(), ", "));
  }
  if (auto problem = check_arguments(it->schema, call.arguments)) {
    return ObservationBody::error(*problem + " (tool " + call.tool + ")");
  }
  try {
    auto obs = it->handler(call.arguments, ctx);
    obs.validate();
    return obs;
  } catch (const std::exception& e) {
    return ObservationBody::error(call.tool + " failed: " + e.what());
  } catch (...) {
    return ObservationBody::error(call.tool + " failed with an unknown error");
  }
}

std::map<std::string, std::set<Capability>> Registry::capability_matrix() const {
  std::map<std::string, std::set<Capability>> out;
  for (const auto& e : tools_) out[e.schema.name] = e.schema.capabilities;
  return out;
}

std::set<Capability> Registry::capability_union() const {
  std::set<Capability> out;
  for (const auto& e : tools_) out.insert(e.schema.capabilities.begin(), e.schema.capabilities.end());
  return out;
}

std::optional<std::string> check_arguments(const ToolSchema& schema, const json& arguments) {
  if (!arguments.is_object()) return "arguments must be a JSON object";
  for (const auto& p : schema.parameters) {
    auto it = arguments.find(p.name);
    if (it == arguments.end() || it->is_null()) {
      if (p.required) return "missing required parameter: " + p.name;
      continue;
    }
    if (!type_matches(p.type, *it)) {
      return "parameter '" + p.name + "' must be of type " + std::string(to_string(p.type));
    }
    if (!p.allowed_values.empty() &&
        std::find(p.allowed_values.begin(), p.allowed_values.end(), it->get<std::string>()) == p.allowed_values.end()) {
      return "parameter '" + p.name + "' must be one of: " + text::join(p.allowed_values, ", ");
    }
  }
  for (const auto& [key, value] : arguments.items()) {
    if (!schema.find_parameter(key)) {
      std::vector<std::string> known;
      for (const auto& p : schema.parameters) known.push_back(p.name);
      return "unknown parameter '" + key + "'; expected: " + text::join(known, ", ");
    }
  }
  return std::nullopt;
}

Registry default_registry() {
  Registry r;
  r.register_tool({std::string(kBashTool),
                   "Run a command in a persistent bash shell inside the sandbox. Working directory and "
                   "environment persist between calls. Long-running commands time out.",
                   {param("command", ParamType::string, true, "The shell command to run."),
                    param("timeout", ParamType::number, false, "Timeout in seconds (default 120).")},
                   {Capability::code_execution}},
                  run_bash);
  r.register_tool({std::string(kCodeTool),
                   "Run Python code in a persistent interpreter inside the sandbox. Variables persist; the value "
                   "of a final expression is printed.",
                   {param("code", ParamType::string, true, "Python source to execute.")},
                   {Capability::code_execution}},
                  run_code);
  r.register_tool({std::string(kEditorTool),
                   "View, create and edit files. 'view' shows text files with line numbers and converts PDFs, "
                   "spreadsheets, slides, documents, HTML and archives to markdown; images are shown as pixels. "
                   "'create' writes file_text to path. 'str_replace' replaces the single occurrence of old_str "
                   "with new_str.",
                   {param("command", ParamType::string, true, "One of view, create, str_replace.",
                          {"view", "create", "str_replace"}),
                    param("path", ParamType::string, true, "File path, absolute or relative to the workspace."),
                    param("file_text", ParamType::string, false, "Content for 'create'."),
                    param("old_str", ParamType::string, false, "Exact text to replace for 'str_replace'."),
                    param("new_str", ParamType::string, false, "Replacement text for 'str_replace'."),
                    param("view_range", ParamType::array, false,
                          "[start_line, end_line] for 'view' of a text file; end_line -1 means end of file.")},
                   {Capability::file_edit, Capability::view_multimodal}},
                  run_editor);
  std::vector<std::string> verbs;
  for (auto v : browser::all_verbs()) verbs.emplace_back(browser::to_string(v));
  r.register_tool({std::string(kBrowseTool),
                   "Interact with a web browser. Each observation has a screenshot with numbered boxes and an "
                   "accessibility tree; refer to elements by the bid shown in brackets, e.g. [a12].",
                   {param("action", ParamType::string, true, "The browser action.", verbs),
                    param("bid", ParamType::string, false, "Element id for click, fill, select_option, hover."),
                    param("url", ParamType::string, false, "URL for goto and new_tab."),
                    param("text", ParamType::string, false, "Text for fill."),
                    param("value", ParamType::string, false, "Option value or label for select_option."),
                    param("key", ParamType::string, false, "Key or combination for press, e.g. Enter, Control+a."),
                    param("dx", ParamType::number, false, "Horizontal scroll in pixels."),
                    param("dy", ParamType::number, false, "Vertical scroll in pixels."),
                    param("tab", ParamType::integer, false, "Tab index for switch_tab.")},
                   {Capability::browse_visual}},
                  run_browse);
  r.register_tool({std::string(kSearchTool),
                   "Search the web through a search API and return titles, URLs and snippets.",
                   {param("query", ParamType::string, true, "The search query."),
                    param("max_results", ParamType::integer, false, "Number of results, 1 to 20 (default 5).")},
                   {Capability::search_api}},
                  run_search);
  r.register_tool({std::string(kFinishTool),
                   "Finish the task. Put the final answer, or a short summary of what was done, in message.",
                   {param("message", ParamType::string, false, "Final answer or summary.")},
                   {}},
                  run_finish);
  return r;
}

std::string tool_category(const events::ActionBody& action) {
  const std::string& t = action.tool;
  if (t == kBashTool) return "bash";
  if (t == kCodeTool) return "ipython";
  if (t == kEditorTool) {
    auto cmd = action.arguments.is_object() ? action.arguments.value("command", "") : "";
    return cmd == "view" ? "view_file" : "edit_file";
  }
  if (t == kBrowseTool) return "browser";
  if (t == kSearchTool) return "search_engine";
  if (t == kFinishTool) return "finish";
  return "other";
}

std::span<const std::string_view> tool_categories() { return kCategories; }

}  // namespace versa::tools
