#include "versa/tools/xml.hpp"

#include <cctype>

namespace versa::tools::xml {

void append_utf8(std::string& out, char32_t cp) {
  if (cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) cp = 0xFFFD;
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else if (cp < 0x10000) {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    out += static_cast<char>(0xF0 | (cp >> 18));
    out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
}

std::string decode_entities(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '&') {
      out += s[i];
      continue;
    }
    auto semi = s.find(';', i);
    if (semi == std::string_view::npos || semi - i > 10) {
      out += '&';
      continue;
    }
    std::string_view ent = s.substr(i + 1, semi - i - 1);
    if (ent == "amp") out += '&';
    else if (ent == "lt") out += '<';
    else if (ent == "gt") out += '>';
    else if (ent == "quot") out += '"';
    else if (ent == "apos") out += '\'';
    else if (!ent.empty() && ent[0] == '#') {
      char32_t cp = 0;
      bool hex = ent.size() > 1 && (ent[1] == 'x' || ent[1] == 'X');
      bool ok = ent.size() > (hex ? 2u : 1u);
      for (std::size_t k = hex ? 2 : 1; ok && k < ent.size(); ++k) {
        char c = ent[k];
        if (hex && std::isxdigit(static_cast<unsigned char>(c))) {
          cp = cp * 16 + static_cast<char32_t>(std::isdigit(static_cast<unsigned char>(c)) ? c - '0' : (std::tolower(c) - 'a' + 10));
        } else if (!hex && std::isdigit(static_cast<unsigned char>(c))) {
          cp = cp * 10 + static_cast<char32_t>(c - '0');
        } else {
          ok = false;
        }
        if (cp > 0x10FFFF) ok = false;
      }
      if (!ok) {
        out += '&';
        continue;
      }
      append_utf8(out, cp);
    } else {
      out += '&';
      continue;
    }
    i = semi;
  }
  return out;
}

std::string escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string_view Node::local() const {
  std::string_view n = name;
  auto colon = n.find(':');
  return colon == std::string_view::npos ? n : n.substr(colon + 1);
}

std::string Node::attr(std::string_view key, std::string_view fallback) const {
  auto it = attrs.find(std::string(key));
  return it == attrs.end() ? std::string(fallback) : it->second;
}

std::string Node::attr_local(std::string_view local_key, std::string_view fallback) const {
  for (const auto& [k, v] : attrs) {
    auto colon = k.find(':');
    std::string_view l = colon == std::string::npos ? std::string_view(k) : std::string_view(k).substr(colon + 1);
    if (l == local_key) return v;
  }
  return std::string(fallback);
}

const Node* Node::child(std::string_view local_name) const {
  for (const auto& c : children) {
    if (!c->is_text() && c->local() == local_name) return c.get();
  }
  return nullptr;
}

std::vector<const Node*> Node::children_named(std::string_view local_name) const {
  std::vector<const Node*> out;
  for (const auto& c : children) {
    if (!c->is_text() && c->local() == local_name) out.push_back(c.get());
  }
  return out;
}

void Node::find_all(std::string_view local_name, std::vector<const Node*>& out) const {
  for (const auto& c : children) {
    if (c->is_text()) continue;
    if (c->local() == local_name) out.push_back(c.get());
    c->find_all(local_name, out);
  }
}

std::vector<const Node*> Node::find_all(std::string_view local_name) const {
  std::vector<const Node*> out;
  find_all(local_name, out);
  return out;
}

std::string Node::inner_text() const {
  if (is_text()) return text;
  std::string out;
  for (const auto& c : children) out += c->inner_text();
  return out;
}

namespace {

class Parser {
 public:
  explicit Parser(std::string_view doc) : d_(doc) {}

  std::unique_ptr<Node> run() {
    if (d_.substr(0, 3) == "\xEF\xBB\xBF") pos_ = 3;
    std::unique_ptr<Node> root;
    while (pos_ < d_.size()) {
      skip_ws();
      if (pos_ >= d_.size()) break;
      if (starts("<?")) skip_past("?>");
      else if (starts("<!--")) skip_past("-->");
      else if (starts("<!")) skip_doctype();
      else if (d_[pos_] == '<') {
        if (root) throw ParseError("xml: content after the root element");
        root = element();
      } else {
        throw ParseError("xml: text outside the root element at offset " + std::to_string(pos_));
      }
    }
    if (!root) throw ParseError("xml: no root element");
    return root;
  }

 private:
  std::string_view d_;
  std::size_t pos_ = 0;
  int depth_ = 0;

  bool starts(std::string_view s) const { return d_.substr(pos_, s.size()) == s; }

  void skip_ws() {
    while (pos_ < d_.size() && std::isspace(static_cast<unsigned char>(d_[pos_]))) ++pos_;
  }

  void skip_past(std::string_view end) {
    auto at = d_.find(end, pos_);
    if (at == std::string_view::npos) throw ParseError("xml: unterminated construct, expected " + std::string(end));
    pos_ = at + end.size();
  }

  void skip_doctype() {
    int bracket = 0;
    for (; pos_ < d_.size(); ++pos_) {
      if (d_[pos_] == '[') ++bracket;
      else if (d_[pos_] == ']') --bracket;
      else if (d_[pos_] == '>' && bracket <= 0) {
        ++pos_;
        return;
      }
    }
    throw ParseError("xml: unterminated DOCTYPE");
  }

  std::string name() {
    std::size_t start = pos_;
    while (pos_ < d_.size()) {
      char c = d_[pos_];
      if (std::isspace(static_cast<unsigned char>(c)) || c == '>' || c == '/' || c == '=') break;
      ++pos_;
    }
    if (start == pos_) throw ParseError("xml: expected a name at offset " + std::to_string(start));
    return std::string(d_.substr(start, pos_ - start));
  }

  std::unique_ptr<Node> element() {
    if (++depth_ > 512) throw ParseError("xml: nesting too deep");
    ++pos_;  // '<'
    auto node = std::make_unique<Node>();
    node->name = name();
    for (;;) {
      skip_ws();
      if (pos_ >= d_.size()) throw ParseError("xml: unterminated start tag <" + node->name + ">");
      if (starts("/>")) {
        pos_ += 2;
        --depth_;
        return node;
      }
      if (d_[pos_] == '>') {
        ++pos_;
        break;
      }
      std::string key = name();
      skip_ws();
      if (pos_ >= d_.size() || d_[pos_] != '=') throw ParseError("xml: attribute " + key + " lacks a value");
      ++pos_;
      skip_ws();
      if (pos_ >= d_.size() || (d_[pos_] != '"' && d_[pos_] != '\'')) throw ParseError("xml: unquoted attribute " + key);
      char q = d_[pos_++];
      auto end = d_.find(q, pos_);
      if (end == std::string_view::npos) throw ParseError("xml: unterminated attribute " + key);
      node->attrs[key] = decode_entities(d_.substr(pos_, end - pos_));
      pos_ = end + 1;
    }
    content(*node);
    --depth_;
    return node;
  }

  void add_text(Node& parent, std::string text) {
    if (text.empty()) return;
    if (!parent.children.empty() && parent.children.back()->is_text()) {
      parent.children.back()->text += text;
      return;
    }
    auto t = std::make_unique<Node>();
    t->text = std::move(text);
    parent.children.push_back(std::move(t));
  }

  void content(Node& parent) {
    while (pos_ < d_.size()) {
      if (starts("</")) {
        pos_ += 2;
        std::string closing = name();
        if (closing != parent.name) throw ParseError("xml: </" + closing + "> closes <" + parent.name + ">");
        skip_ws();
        if (pos_ >= d_.size() || d_[pos_] != '>') throw ParseError("xml: malformed end tag </" + closing);
        ++pos_;
        return;
      }
      if (starts("<!--")) {
        skip_past("-->");
      } else if (starts("<![CDATA[")) {
        auto end = d_.find("]]>", pos_);
        if (end == std::string_view::npos) throw ParseError("xml: unterminated CDATA");
        add_text(parent, std::string(d_.substr(pos_ + 9, end - pos_ - 9)));
        pos_ = end + 3;
      } else if (starts("<?")) {
        skip_past("?>");
      } else if (d_[pos_] == '<') {
        parent.children.push_back(element());
      } else {
        auto end = d_.find('<', pos_);
        if (end == std::string_view::npos) end = d_.size();
        add_text(parent, decode_entities(d_.substr(pos_, end - pos_)));
        pos_ = end;
      }
    }
    throw ParseError("xml: <" + parent.name + "> is never closed");
  }
};

}  // namespace

std::unique_ptr<Node> parse(std::string_view doc) { return Parser(doc).run(); }

}  // namespace versa::tools::xml
