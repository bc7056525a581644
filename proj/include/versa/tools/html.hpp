#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace versa::tools::html {

// Mutable DOM produced by a forgiving HTML parser. Tag and attribute names
// are lower-cased; entities in text and attribute values are decoded.
struct Node {
  enum class Type { document, element, text };

  Type type = Type::element;
  std::string tag;
  std::vector<std::pair<std::string, std::string>> attrs;
  std::string text;  // text nodes only
  std::vector<std::unique_ptr<Node>> children;
  Node* parent = nullptr;

  bool is_element() const { return type == Type::element; }
  bool is_text() const { return type == Type::text; }
  bool is(std::string_view t) const { return is_element() && tag == t; }

  std::optional<std::string> attr(std::string_view name) const;
  bool has_attr(std::string_view name) const { return attr(name).has_value(); }
  void set_attr(std::string_view name, std::string value);

  Node& append(std::unique_ptr<Node> child);
  // Whitespace-collapsed text of all descendant text nodes.
  std::string inner_text() const;
  // First descendant element with this tag, depth-first.
  const Node* find(std::string_view tag) const;
  void find_all(std::string_view tag, std::vector<const Node*>& out) const;
  // Element with id=..., depth-first.
  Node* by_id(std::string_view id);
};

std::unique_ptr<Node> parse(std::string_view html);

std::string decode_entities(std::string_view s);

bool is_void_element(std::string_view tag);

// Collapses runs of whitespace to single spaces and trims the ends.
std::string collapse_whitespace(std::string_view s);

}  // namespace versa::tools::html
