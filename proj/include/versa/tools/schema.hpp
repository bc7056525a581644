#pragma once

#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "versa/core/json.hpp"

namespace versa::tools {

// Capability vocabulary for tool comparisons.
enum class Capability {
  code_execution,
  file_edit,
  browse_text,
  browse_visual,
  search_api,
  view_multimodal,
  view_plaintext,
};

std::string_view to_string(Capability c);
Capability parse_capability(std::string_view s);

enum class ParamType { string, integer, number, boolean, object, array };

std::string_view to_string(ParamType t);

struct ParamSpec {
  std::string name;
  ParamType type = ParamType::string;
  bool required = false;
  std::string description;
  std::vector<std::string> allowed_values;  // string enums only
};

struct ToolSchema {
  std::string name;
  std::string description;
  std::vector<ParamSpec> parameters;
  std::set<Capability> capabilities;

  const ParamSpec* find_parameter(std::string_view param) const;
  // JSON-Schema object for function-calling APIs.
  json parameters_json_schema() const;
  void validate() const;  // duplicate parameter names, empty name
};

struct ToolCall {
  std::string tool;
  json arguments = json::object();

  bool operator==(const ToolCall&) const = default;
};

}  // namespace versa::tools
