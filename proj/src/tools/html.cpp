#include "versa/tools/html.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cstring>

#include "versa/tools/xml.hpp"

namespace versa::tools::html {

namespace {

struct NamedEntity {
  const char* name;
  char32_t cp;
};

constexpr std::array<NamedEntity, 48> kEntities{{
    {"amp", '&'},        {"lt", '<'},          {"gt", '>'},          {"quot", '"'},       {"apos", '\''},
    {"nbsp", 0xA0},      {"copy", 0xA9},       {"reg", 0xAE},        {"trade", 0x2122},   {"mdash", 0x2014},
    {"ndash", 0x2013},   {"hellip", 0x2026},   {"lsquo", 0x2018},    {"rsquo", 0x2019},   {"ldquo", 0x201C},
    {"rdquo", 0x201D},   {"laquo", 0xAB},      {"raquo", 0xBB},      {"middot", 0xB7},    {"bull", 0x2022},
    {"deg", 0xB0},       {"times", 0xD7},      {"divide", 0xF7},     {"euro", 0x20AC},    {"pound", 0xA3},
    {"yen", 0xA5},       {"cent", 0xA2},       {"sect", 0xA7},       {"para", 0xB6},      {"plusmn", 0xB1},
    {"frac12", 0xBD},    {"frac14", 0xBC},     {"frac34", 0xBE},     {"larr", 0x2190},    {"rarr", 0x2192},
    {"uarr", 0x2191},    {"darr", 0x2193},     {"auml", 0xE4},       {"ouml", 0xF6},      {"uuml", 0xFC},
    {"eacute", 0xE9},    {"egrave", 0xE8},     {"aacute", 0xE1},     {"szlig", 0xDF},     {"ccedil", 0xE7},
    {"shy", 0xAD},       {"zwj", 0x200D},      {"ensp", 0x2002},
}};

constexpr const char* kVoid[] = {"area", "base", "br",   "col",   "embed",  "hr",    "img",
                                 "input", "link", "meta", "param", "source", "track", "wbr"};

constexpr const char* kClosesParagraph[] = {"p",  "div", "ul", "ol", "table", "h1", "h2", "h3",      "h4",
                                            "h5", "h6",  "pre", "blockquote", "section", "article", "header",
                                            "footer", "nav", "form", "hr", "dl", "figure", "main", "aside"};

bool in(std::string_view tag, std::initializer_list<const char*> set) {
  return std::any_of(set.begin(), set.end(), [&](const char* s) { return tag == s; });
}

template <std::size_t N>
bool in(std::string_view tag, const char* const (&set)[N]) {
  return std::any_of(std::begin(set), std::end(set), [&](const char* s) { return tag == s; });
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

class Parser {
 public:
  explicit Parser(std::string_view src) : s_(src) {
    doc_ = std::make_unique<Node>();
    doc_->type = Node::Type::document;
    stack_.push_back(doc_.get());
  }

  std::unique_ptr<Node> run() {
    while (pos_ < s_.size()) {
      if (s_[pos_] == '<') {
        if (starts("<!--")) {
          auto end = s_.find("-->", pos_ + 4);
          pos_ = end == std::string_view::npos ? s_.size() : end + 3;
        } else if (starts("<!") || starts("<?")) {
          auto end = s_.find('>', pos_);
          pos_ = end == std::string_view::npos ? s_.size() : end + 1;
        } else if (starts("</")) {
          end_tag();
        } else if (pos_ + 1 < s_.size() && std::isalpha(static_cast<unsigned char>(s_[pos_ + 1]))) {
          start_tag();
        } else {
          text_until_tag();
        }
      } else {
        text_until_tag();
      }
    }
    return std::move(doc_);
  }

 private:
  std::string_view s_;
  std::size_t pos_ = 0;
  std::unique_ptr<Node> doc_;
  std::vector<Node*> stack_;

  bool starts(std::string_view p) const {
    if (s_.size() - pos_ < p.size()) return false;
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (std::tolower(static_cast<unsigned char>(s_[pos_ + i])) != std::tolower(static_cast<unsigned char>(p[i]))) {
        return false;
      }
    }
    return true;
  }

  Node* top() { return stack_.back(); }

  void add_text(std::string text) {
    if (text.empty()) return;
    Node* parent = top();
    if (!parent->children.empty() && parent->children.back()->is_text()) {
      parent->children.back()->text += text;
      return;
    }
    auto t = std::make_unique<Node>();
    t->type = Node::Type::text;
    t->text = std::move(text);
    parent->append(std::move(t));
  }

  void text_until_tag() {
    auto end = s_.find('<', pos_ + 1);
    if (end == std::string_view::npos) end = s_.size();
    add_text(decode_entities(s_.substr(pos_, end - pos_)));
    pos_ = end;
  }

  std::string read_name() {
    std::size_t start = pos_;
    while (pos_ < s_.size()) {
      char c = s_[pos_];
      if (std::isspace(static_cast<unsigned char>(c)) || c == '>' || c == '/' || c == '=') break;
      ++pos_;
    }
    return lower(s_.substr(start, pos_ - start));
  }

  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  // Pops open elements named `tag`, stopping at any of `boundaries`.
  void close_if_open(std::string_view tag, std::initializer_list<const char*> boundaries) {
    for (std::size_t i = stack_.size(); i-- > 1;) {
      if (stack_[i]->tag == tag) {
        stack_.resize(i);
        return;
      }
      if (in(stack_[i]->tag, boundaries)) return;
    }
  }

  void implicit_closes(std::string_view tag) {
    if (in(tag, kClosesParagraph)) close_if_open("p", {"div", "td", "th", "li", "blockquote", "section", "article", "body"});
    if (tag == "li") close_if_open("li", {"ul", "ol"});
    if (tag == "dt" || tag == "dd") {
      close_if_open("dt", {"dl"});
      close_if_open("dd", {"dl"});
    }
    if (tag == "tr") close_if_open("tr", {"table"});
    if (tag == "td" || tag == "th") {
      close_if_open("td", {"tr", "table"});
      close_if_open("th", {"tr", "table"});
    }
    if (tag == "thead" || tag == "tbody" || tag == "tfoot") {
      close_if_open("thead", {"table"});
      close_if_open("tbody", {"table"});
    }
    if (tag == "option") close_if_open("option", {"select"});
  }

  void start_tag() {
    ++pos_;
    auto node = std::make_unique<Node>();
    node->tag = read_name();
    bool self_closing = false;
    for (;;) {
      skip_ws();
      if (pos_ >= s_.size()) break;
      if (s_[pos_] == '>') {
        ++pos_;
        break;
      }
      if (s_[pos_] == '/') {
        ++pos_;
        self_closing = true;
        continue;
      }
      std::string key = read_name();
      if (key.empty()) {
        ++pos_;
        continue;
      }
      skip_ws();
      std::string value;
      if (pos_ < s_.size() && s_[pos_] == '=') {
        ++pos_;
        skip_ws();
        if (pos_ < s_.size() && (s_[pos_] == '"' || s_[pos_] == '\'')) {
          char q = s_[pos_++];
          auto end = s_.find(q, pos_);
          if (end == std::string_view::npos) end = s_.size();
          value = decode_entities(s_.substr(pos_, end - pos_));
          pos_ = std::min(end + 1, s_.size());
        } else {
          std::size_t start = pos_;
          while (pos_ < s_.size() && !std::isspace(static_cast<unsigned char>(s_[pos_])) && s_[pos_] != '>') ++pos_;
          value = decode_entities(s_.substr(start, pos_ - start));
        }
      }
      if (!node->has_attr(key)) node->attrs.emplace_back(std::move(key), std::move(value));
    }
    const std::string tag = node->tag;
    implicit_closes(tag);
    Node& added = top()->append(std::move(node));
    if (is_void_element(tag) || self_closing) return;
    if (tag == "script" || tag == "style" || tag == "textarea" || tag == "title") {
      // Raw text up to the matching end tag.
      std::string closing = "</" + tag;
      std::size_t end = pos_;
      for (;;) {
        end = s_.find('<', end);
        if (end == std::string_view::npos) break;
        std::size_t save = pos_;
        pos_ = end;
        bool match = starts(closing);
        pos_ = save;
        if (match) break;
        ++end;
      }
      if (end == std::string_view::npos) end = s_.size();
      std::string raw(s_.substr(pos_, end - pos_));
      if (!raw.empty()) {
        auto t = std::make_unique<Node>();
        t->type = Node::Type::text;
        t->text = (tag == "textarea" || tag == "title") ? decode_entities(raw) : raw;
        added.append(std::move(t));
      }
      auto gt = s_.find('>', end);
      pos_ = gt == std::string_view::npos ? s_.size() : gt + 1;
      return;
    }
    stack_.push_back(&added);
  }

  void end_tag() {
    pos_ += 2;
    std::string tag = read_name();
    auto gt = s_.find('>', pos_);
    pos_ = gt == std::string_view::npos ? s_.size() : gt + 1;
    for (std::size_t i = stack_.size(); i-- > 1;) {
      if (stack_[i]->tag == tag) {
        stack_.resize(i);
        return;
      }
    }
  }
};

}  // namespace

bool is_void_element(std::string_view tag) { return in(tag, kVoid); }

std::string decode_entities(std::string_view s) {
  if (s.find('&') == std::string_view::npos) return std::string(s);
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '&') {
      out += s[i];
      continue;
    }
    std::size_t j = i + 1;
    while (j < s.size() && j - i < 12 && (std::isalnum(static_cast<unsigned char>(s[j])) || s[j] == '#')) ++j;
    std::string_view ent = s.substr(i + 1, j - i - 1);
    bool has_semi = j < s.size() && s[j] == ';';
    if (!ent.empty() && ent[0] == '#') {
      std::string decoded = xml::decode_entities("&" + std::string(ent) + ";");
      if (decoded.front() != '&' || ent == "#38") {
        out += decoded;
        i = has_semi ? j : j - 1;
        continue;
      }
    } else {
      auto it = std::find_if(kEntities.begin(), kEntities.end(), [&](const NamedEntity& e) { return ent == e.name; });
      if (it != kEntities.end()) {
        xml::append_utf8(out, it->cp);
        i = has_semi ? j : j - 1;
        continue;
      }
    }
    out += '&';
  }
  return out;
}

std::string collapse_whitespace(std::string_view s) {
  std::string out;
  bool space = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    unsigned char c = static_cast<unsigned char>(s[i]);
    // U+00A0 (C2 A0) is treated as a regular space.
    bool nbsp = c == 0xC2 && i + 1 < s.size() && static_cast<unsigned char>(s[i + 1]) == 0xA0;
    if (std::isspace(c) || nbsp) {
      space = true;
      if (nbsp) ++i;
      continue;
    }
    if (space && !out.empty()) out += ' ';
    space = false;
    out += static_cast<char>(c);
  }
  return out;
}

std::optional<std::string> Node::attr(std::string_view name) const {
  for (const auto& [k, v] : attrs) {
    if (k == name) return v;
  }
  return std::nullopt;
}

void Node::set_attr(std::string_view name, std::string value) {
  for (auto& [k, v] : attrs) {
    if (k == name) {
      v = std::move(value);
      return;
    }
  }
  attrs.emplace_back(std::string(name), std::move(value));
}

Node& Node::append(std::unique_ptr<Node> child) {
  child->parent = this;
  children.push_back(std::move(child));
  return *children.back();
}

namespace {

void gather_text(const Node& n, std::string& out) {
  if (n.is_text()) {
    out += n.text;
    return;
  }
  if (n.is("script") || n.is("style") || n.is("template")) return;
  for (const auto& c : n.children) gather_text(*c, out);
  if (n.is("br") || n.is("p") || n.is("div") || n.is("li")) out += ' ';
}

}  // namespace

std::string Node::inner_text() const {
  std::string raw;
  gather_text(*this, raw);
  return collapse_whitespace(raw);
}

const Node* Node::find(std::string_view t) const {
  for (const auto& c : children) {
    if (c->is(t)) return c.get();
    if (const Node* hit = c->find(t)) return hit;
  }
  return nullptr;
}

void Node::find_all(std::string_view t, std::vector<const Node*>& out) const {
  for (const auto& c : children) {
    if (c->is(t)) out.push_back(c.get());
    c->find_all(t, out);
  }
}

Node* Node::by_id(std::string_view id) {
  for (auto& c : children) {
    if (c->is_element() && c->attr("id") == std::optional<std::string>(std::string(id))) return c.get();
    if (Node* hit = c->by_id(id)) return hit;
  }
  return nullptr;
}

std::unique_ptr<Node> parse(std::string_view src) { return Parser(src).run(); }

}  // namespace versa::tools::html
