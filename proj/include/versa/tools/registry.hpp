#pragma once

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "versa/core/events.hpp"
#include "versa/tools/schema.hpp"

namespace versa::runtime {
class SessionClient;
}
namespace versa::browser {
class BrowserSession;
}
namespace versa::search {
class SearchService;
}

namespace versa::tools {

// Per-session resources a handler may use; any of them may be absent.
struct ToolContext {
  runtime::SessionClient* runtime = nullptr;
  browser::BrowserSession* browser = nullptr;
  search::SearchService* search = nullptr;
  double timeout_s = 120;
};

using ToolHandler = std::function<events::ObservationBody(const json& arguments, ToolContext& ctx)>;

class Registry {
 public:
  // Throws std::invalid_argument on an invalid schema or a duplicate name.
  void register_tool(ToolSchema schema, ToolHandler handler);

  bool contains(std::string_view name) const;
  const ToolSchema* find(std::string_view name) const;
  std::vector<ToolSchema> schemas() const;  // registration order
  std::vector<std::string> names() const;
  bool empty() const { return tools_.empty(); }

  // A copy without the named tool.
  Registry without(std::string_view name) const;

  // Validates the arguments, then runs the handler. Never throws: unknown
  // tools, bad arguments and handler failures become error observations.
  events::ObservationBody dispatch(const ToolCall& call, ToolContext& ctx) const;

  std::map<std::string, std::set<Capability>> capability_matrix() const;
  std::set<Capability> capability_union() const;

 private:
  struct Entry {
    ToolSchema schema;
    ToolHandler handler;
  };
  std::vector<Entry> tools_;
};

// nullopt when the arguments satisfy the schema, otherwise a message meant
// for the model, e.g. "missing required parameter: command".
std::optional<std::string> check_arguments(const ToolSchema& schema, const json& arguments);

// The six tools exposed to the model.
inline constexpr std::string_view kBashTool = "execute_bash";
inline constexpr std::string_view kCodeTool = "execute_code";
inline constexpr std::string_view kEditorTool = "str_replace_editor";
inline constexpr std::string_view kBrowseTool = "browse";
inline constexpr std::string_view kSearchTool = "search_web";
inline constexpr std::string_view kFinishTool = "finish";

Registry default_registry();

// Tool-usage category for analytics: bash, ipython, edit_file, view_file,
// browser, search_engine, finish, or other.
std::string tool_category(const events::ActionBody& action);
std::span<const std::string_view> tool_categories();

}  // namespace versa::tools
