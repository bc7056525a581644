#pragma once

#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace versa::tools::xml {

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Element node; text runs are children with an empty name.
struct Node {
  std::string name;  // qualified, e.g. "w:p"
  std::map<std::string, std::string> attrs;
  std::string text;  // only for text nodes
  std::vector<std::unique_ptr<Node>> children;

  bool is_text() const { return name.empty(); }
  // Local part of the name ("p" for "w:p").
  std::string_view local() const;
  std::string attr(std::string_view key, std::string_view fallback = "") const;
  // Attribute by local name, ignoring any prefix.
  std::string attr_local(std::string_view local_key, std::string_view fallback = "") const;

  const Node* child(std::string_view local_name) const;
  std::vector<const Node*> children_named(std::string_view local_name) const;
  // Depth-first search for descendants with this local name.
  void find_all(std::string_view local_name, std::vector<const Node*>& out) const;
  std::vector<const Node*> find_all(std::string_view local_name) const;
  // Concatenated text of all descendant text nodes.
  std::string inner_text() const;
};

// Parses a well-formed document (comments, CDATA, PIs, DOCTYPE skipped;
// predefined and numeric entities decoded). Returns the root element.
std::unique_ptr<Node> parse(std::string_view doc);

// Decodes &amp; &lt; &gt; &quot; &apos; and numeric references.
std::string decode_entities(std::string_view s);

std::string escape(std::string_view s);

void append_utf8(std::string& out, char32_t cp);

}  // namespace versa::tools::xml
