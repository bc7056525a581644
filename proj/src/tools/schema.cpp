#include "versa/tools/schema.hpp"

#include <array>
#include <stdexcept>

namespace versa::tools {

namespace {

constexpr std::array<std::string_view, 7> kCapabilityNames = {
    "code_execution", "file_edit", "browse_text", "browse_visual", "search_api", "view_multimodal", "view_plaintext"};

constexpr std::array<std::string_view, 6> kTypeNames = {"string", "integer", "number", "boolean", "object", "array"};

}  // namespace

std::string_view to_string(Capability c) { return kCapabilityNames.at(static_cast<std::size_t>(c)); }

Capability parse_capability(std::string_view s) {
  for (std::size_t i = 0; i < kCapabilityNames.size(); ++i) {
    if (kCapabilityNames[i] == s) return static_cast<Capability>(i);
  }
  throw std::invalid_argument("unknown capability: " + std::string(s));
}

std::string_view to_string(ParamType t) { return kTypeNames.at(static_cast<std::size_t>(t)); }

const ParamSpec* ToolSchema::find_parameter(std::string_view param) const {
  for (const auto& p : parameters) {
    if (p.name == param) return &p;
  }
  return nullptr;
}

json ToolSchema::parameters_json_schema() const {
  json props = json::object();
  json required = json::array();
  for (const auto& p : parameters) {
    json prop = {{"type", to_string(p.type)}, {"description", p.description}};
    if (!p.allowed_values.empty()) prop["enum"] = p.allowed_values;
    if (p.type == ParamType::array) prop["items"] = json::object();
    props[p.name] = std::move(prop);
    if (p.required) required.push_back(p.name);
  }
  return {{"type", "object"}, {"properties", std::move(props)}, {"required", std::move(required)}};
}

void ToolSchema::validate() const {
  if (name.empty()) throw std::invalid_argument("tool name must be non-empty");
  std::set<std::string> seen;
  for (const auto& p : parameters) {
    if (!seen.insert(p.name).second) {
      throw std::invalid_argument("duplicate parameter '" + p.name + "' in tool " + name);
    }
  }
}

}  // namespace versa::tools
