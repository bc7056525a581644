#include "versa/browser/offline.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "versa/browser/canvas.hpp"
#include "versa/core/assets.hpp"
#include "versa/net/http.hpp"
#include "versa/tools/html.hpp"

namespace versa::browser {

using events::BBox;
using tools::html::Node;
namespace html = tools::html;

namespace {

constexpr double kChar = kGlyphWidth;
constexpr double kLine = 20;
constexpr double kMargin = 8;
constexpr double kIndent = 24;

const Rgb kText{34, 34, 34};
const Rgb kLink{26, 13, 171};
const Rgb kMuted{130, 130, 130};
const Rgb kBorder{120, 120, 120};
const Rgb kButton{230, 230, 230};

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::size_t utf8_length(std::string_view s) {
  return static_cast<std::size_t>(
      std::count_if(s.begin(), s.end(), [](char c) { return (static_cast<unsigned char>(c) & 0xC0) != 0x80; }));
}

std::string html_escape(std::string_view s) {
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

std::string url_decode(std::string_view s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '+') {
      out += ' ';
    } else if (s[i] == '%' && i + 2 < s.size() && std::isxdigit(static_cast<unsigned char>(s[i + 1])) &&
               std::isxdigit(static_cast<unsigned char>(s[i + 2]))) {
      out += static_cast<char>(std::stoi(std::string(s.substr(i + 1, 2)), nullptr, 16));
      i += 2;
    } else {
      out += s[i];
    }
  }
  return out;
}

std::map<std::string, std::string> query_params(std::string_view url) {
  std::map<std::string, std::string> out;
  auto q = url.find('?');
  if (q == std::string_view::npos) return out;
  auto query = url.substr(q + 1);
  if (auto h = query.find('#'); h != std::string_view::npos) query = query.substr(0, h);
  while (!query.empty()) {
    auto amp = query.find('&');
    auto part = query.substr(0, amp);
    auto eq = part.find('=');
    std::string key = url_decode(part.substr(0, eq));
    std::string value = eq == std::string_view::npos ? "" : url_decode(part.substr(eq + 1));
    if (!key.empty() && !out.contains(key)) out[key] = value;
    if (amp == std::string_view::npos) break;
    query = query.substr(amp + 1);
  }
  return out;
}

std::string strip_fragment(const std::string& url) { return url.substr(0, url.find('#')); }

struct Style {
  bool display_none = false;
  bool visibility_hidden = false;
  bool cursor_pointer = false;
};

std::string input_type(const Node& n) { return lower(n.attr("type").value_or("text")); }

Style style_of(const Node& n) {
  Style s;
  std::string css;
  for (char c : n.attr("style").value_or("")) {
    if (!std::isspace(static_cast<unsigned char>(c))) css += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  s.display_none = css.find("display:none") != std::string::npos || n.has_attr("hidden") ||
                   (n.is("input") && input_type(n) == "hidden");
  s.visibility_hidden = css.find("visibility:hidden") != std::string::npos;
  s.cursor_pointer = css.find("cursor:pointer") != std::string::npos;
  return s;
}

bool is_skipped(const Node& n) {
  static const std::set<std::string> kSkip{"head", "script", "style", "noscript", "template",
                                           "title", "meta", "link", "svg", "iframe"};
  return n.is_element() && kSkip.contains(n.tag);
}

bool is_block(const Node& n) {
  static const std::set<std::string> kBlocks{
      "html",   "body",    "div",     "p",      "ul",     "ol",       "li",      "table",      "h1",
      "h2",     "h3",      "h4",      "h5",     "h6",     "pre",      "blockquote", "section", "article",
      "header", "footer",  "nav",     "main",   "aside",  "form",     "hr",      "dl",         "dt",
      "dd",     "figure",  "figcaption", "details", "summary", "fieldset", "address", "center", "caption",
      "dialog", "legend"};
  return n.is_element() && kBlocks.contains(n.tag);
}

bool is_heading(const Node& n) {
  return n.is_element() && n.tag.size() == 2 && n.tag[0] == 'h' && n.tag[1] >= '1' && n.tag[1] <= '6';
}

bool is_text_input(const Node& n) {
  if (n.is("textarea")) return true;
  if (!n.is("input")) return false;
  static const std::set<std::string> kNonText{"checkbox", "radio", "submit", "button", "reset",
                                              "image",    "hidden", "file",  "range",  "color"};
  return !kNonText.contains(input_type(n));
}

bool is_button_like(const Node& n) {
  if (n.is("button")) return true;
  if (!n.is("input")) return false;
  auto t = input_type(n);
  return t == "submit" || t == "button" || t == "reset" || t == "image";
}

bool is_widget(const Node& n) {
  return n.is("button") || n.is("input") || n.is("select") || n.is("textarea") || n.is("img");
}

BBox unite(const BBox& a, const BBox& b) {
  if (!a.has_area()) return b;
  if (!b.has_area()) return a;
  double x0 = std::min(a.x, b.x);
  double y0 = std::min(a.y, b.y);
  double x1 = std::max(a.right(), b.right());
  double y1 = std::max(a.bottom(), b.bottom());
  return {x0, y0, x1 - x0, y1 - y0};
}

std::vector<const Node*> options_of(const Node& select) {
  std::vector<const Node*> out;
  select.find_all("option", out);
  return out;
}

const Node* selected_option(const Node& select) {
  auto opts = options_of(select);
  for (const Node* o : opts) {
    if (o->has_attr("selected")) return o;
  }
  return opts.empty() ? nullptr : opts.front();
}

std::string option_value(const Node& o) { return o.attr("value").value_or(o.inner_text()); }

std::string control_value(const Node& n) {
  if (n.is("textarea")) return n.attr("value").value_or(n.inner_text());
  if (n.is("select")) {
    const Node* o = selected_option(n);
    return o ? o->inner_text() : "";
  }
  return n.attr("value").value_or("");
}

std::string button_label(const Node& n) {
  if (n.is("button")) return n.inner_text();
  std::string v = n.attr("value").value_or("");
  if (!v.empty()) return v;
  auto t = input_type(n);
  if (t == "reset") return "Reset";
  if (t == "image") return n.attr("alt").value_or("Submit");
  return t == "button" ? "" : "Submit";
}

// ---------------------------------------------------------------- layout

struct DrawOp {
  enum class Kind { text, fill, stroke };
  Kind kind = Kind::text;
  BBox box;
  std::string text;
  Rgb color;
  bool bold = false;
  bool underline = false;
};

struct Layout {
  std::unordered_map<const Node*, BBox> boxes;  // document coordinates
  std::unordered_set<const Node*> invisible;     // laid out but visibility:hidden
  std::vector<DrawOp> ops;
  double height = 0;
};

class Layouter {
 public:
  explicit Layouter(double width) : width_(width) {}

  Layout run(const Node& doc) {
    double y = flow(doc, kMargin, width_ - 2 * kMargin, kMargin, false);
    out_.height = y + kMargin;
    return std::move(out_);
  }

 private:
  struct Inline {
    double left = 0;
    double right = 0;
    double x = 0;
    double y = 0;
    double line_h = kLine;
    bool any = false;
    bool space = false;
    bool hidden = false;
    Rgb color = kText;
    bool bold = false;
    bool underline = false;
    std::vector<const Node*> stack;
  };

  double width_;
  Layout out_;

  void mark(const Node* n, const BBox& b) {
    auto& slot = out_.boxes[n];
    slot = unite(slot, b);
  }

  void newline(Inline& c) {
    c.y += c.line_h;
    c.x = c.left;
    c.line_h = kLine;
    c.any = false;
    c.space = false;
  }

  // Reserves w x h on the current line; returns the atom's box.
  BBox place(Inline& c, double w, double h) {
    double gap = (c.space && c.any) ? kChar : 0;
    if (c.any && c.x + gap + w > c.right) {
      newline(c);
      gap = 0;
    }
    BBox b{c.x + gap, c.y + (h > kLine ? 2 : 0), w, h};
    c.x = b.right();
    c.line_h = std::max(c.line_h, h > kLine ? h + 4 : kLine);
    c.any = true;
    c.space = false;
    for (const Node* s : c.stack) mark(s, b);
    return b;
  }

  void text_op(const BBox& b, std::string text, const Inline& c, Rgb color) {
    if (c.hidden) return;
    DrawOp op;
    op.kind = DrawOp::Kind::text;
    op.box = b;
    op.text = std::move(text);
    op.color = color;
    op.bold = c.bold;
    op.underline = c.underline;
    out_.ops.push_back(std::move(op));
  }

  void rect_op(DrawOp::Kind kind, const BBox& b, Rgb color, bool hidden) {
    if (hidden) return;
    DrawOp op;
    op.kind = kind;
    op.box = b;
    op.color = color;
    out_.ops.push_back(std::move(op));
  }

  void inline_text(const Node& t, Inline& c) {
    const std::string& s = t.text;
    std::size_t i = 0;
    while (i < s.size()) {
      if (std::isspace(static_cast<unsigned char>(s[i]))) {
        c.space = true;
        ++i;
        continue;
      }
      std::size_t j = i;
      while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j]))) ++j;
      std::string word = s.substr(i, j - i);
      double w = static_cast<double>(utf8_length(word)) * kChar;
      double avail = c.right - c.left;
      if (w > avail && avail >= kChar) {
        // Break overlong words at the line width.
        std::size_t per_line = static_cast<std::size_t>(avail / kChar);
        std::size_t pos = 0;
        while (pos < word.size()) {
          std::size_t end = pos;
          std::size_t count = 0;
          while (end < word.size() && count < per_line) {
            ++end;
            while (end < word.size() && (static_cast<unsigned char>(word[end]) & 0xC0) == 0x80) ++end;
            ++count;
          }
          std::string piece = word.substr(pos, end - pos);
          BBox b = place(c, static_cast<double>(count) * kChar, kLine);
          mark(&t, b);
          text_op(b, piece, c, c.color);
          pos = end;
        }
      } else {
        BBox b = place(c, w, kLine);
        mark(&t, b);
        text_op(b, word, c, c.color);
      }
      i = j;
    }
    if (c.hidden) out_.invisible.insert(&t);
  }

  void widget(const Node& n, Inline& c) {
    const bool hidden = c.hidden;
    if (n.is("img")) {
      double w = std::atof(n.attr("width").value_or("64").c_str());
      double h = std::atof(n.attr("height").value_or("64").c_str());
      w = std::clamp(w > 0 ? w : 64, 1.0, c.right - c.left);
      h = std::clamp(h > 0 ? h : 64, 1.0, 2000.0);
      BBox b = place(c, w, h);
      mark(&n, b);
      rect_op(DrawOp::Kind::fill, b, {200, 200, 200}, hidden);
      if (auto alt = n.attr("alt"); alt && !alt->empty()) text_op({b.x + 4, b.y + 4, b.width, kLine}, *alt, c, kMuted);
      return;
    }
    if (is_button_like(n)) {
      std::string label = html::collapse_whitespace(button_label(n));
      double w = std::max(48.0, static_cast<double>(utf8_length(label)) * kChar + 16);
      BBox b = place(c, w, 24);
      mark(&n, b);
      rect_op(DrawOp::Kind::fill, b, kButton, hidden);
      rect_op(DrawOp::Kind::stroke, b, kBorder, hidden);
      Inline plain = c;
      plain.bold = false;
      plain.underline = false;
      text_op({b.x + 8, b.y + 2, b.width - 16, kLine}, label, plain, kText);
      return;
    }
    if (n.is("input")) {
      auto t = input_type(n);
      if (t == "checkbox" || t == "radio") {
        BBox b = place(c, 16, 16);
        mark(&n, b);
        rect_op(DrawOp::Kind::stroke, b, kBorder, hidden);
        if (n.has_attr("checked")) rect_op(DrawOp::Kind::fill, {b.x + 4, b.y + 4, 8, 8}, kText, hidden);
        return;
      }
      BBox b = place(c, 200, 24);
      mark(&n, b);
      rect_op(DrawOp::Kind::fill, b, {255, 255, 255}, hidden);
      rect_op(DrawOp::Kind::stroke, b, kBorder, hidden);
      std::string value = n.attr("value").value_or("");
      Inline plain = c;
      plain.bold = false;
      plain.underline = false;
      if (t == "password") value = std::string(utf8_length(value), '*');
      if (value.empty()) {
        text_op({b.x + 4, b.y + 2, b.width - 8, kLine}, n.attr("placeholder").value_or(""), plain, kMuted);
      } else {
        text_op({b.x + 4, b.y + 2, b.width - 8, kLine}, value, plain, kText);
      }
      return;
    }
    if (n.is("select")) {
      std::size_t longest = 4;
      for (const Node* o : options_of(n)) longest = std::max(longest, utf8_length(o->inner_text()));
      BBox b = place(c, static_cast<double>(longest) * kChar + 32, 24);
      mark(&n, b);
      rect_op(DrawOp::Kind::fill, b, {255, 255, 255}, hidden);
      rect_op(DrawOp::Kind::stroke, b, kBorder, hidden);
      Inline plain = c;
      plain.bold = false;
      plain.underline = false;
      text_op({b.x + 4, b.y + 2, b.width - 24, kLine}, control_value(n), plain, kText);
      text_op({b.right() - 16, b.y + 2, 8, kLine}, "v", plain, kText);
      for (const Node* o : options_of(n)) mark(o, b);
      return;
    }
    if (n.is("textarea")) {
      BBox b = place(c, 240, 64);
      mark(&n, b);
      rect_op(DrawOp::Kind::fill, b, {255, 255, 255}, hidden);
      rect_op(DrawOp::Kind::stroke, b, kBorder, hidden);
      Inline plain = c;
      plain.bold = false;
      plain.underline = false;
      std::string value = control_value(n);
      if (value.empty()) {
        text_op({b.x + 4, b.y + 2, b.width - 8, kLine}, n.attr("placeholder").value_or(""), plain, kMuted);
      } else {
        text_op({b.x + 4, b.y + 2, b.width - 8, kLine}, value, plain, kText);
      }
    }
  }

  void inline_node(const Node& n, Inline& c) {
    if (n.is_text()) {
      inline_text(n, c);
      return;
    }
    if (!n.is_element() || is_skipped(n)) return;
    Style st = style_of(n);
    if (st.display_none) return;
    Inline saved = c;
    if (st.visibility_hidden) c.hidden = true;
    if (c.hidden) out_.invisible.insert(&n);
    if (n.is("br")) {
      if (!c.any) c.line_h = kLine;
      newline(c);
      c.any = false;
      return;
    }
    if (is_widget(n)) {
      widget(n, c);
    } else {
      if (n.is("a") && n.has_attr("href")) {
        c.color = kLink;
        c.underline = true;
      }
      if (n.is("b") || n.is("strong")) c.bold = true;
      c.stack.push_back(&n);
      for (const auto& ch : n.children) inline_node(*ch, c);
      c.stack.pop_back();
    }
    c.hidden = saved.hidden;
    c.color = saved.color;
    c.bold = saved.bold;
    c.underline = saved.underline;
  }

  // Lays out the children of `parent` in a box starting at (x, y) of width
  // w. Returns the y below the last line.
  double flow(const Node& parent, double x, double w, double y, bool hidden, bool bold = false) {
    Inline c;
    c.left = x;
    c.right = x + w;
    c.x = x;
    c.y = y;
    c.hidden = hidden;
    c.bold = bold;
    bool open = false;
    auto close = [&] {
      if (open && c.any) c.y += c.line_h;
      open = false;
      c.x = c.left;
      c.line_h = kLine;
      c.any = false;
      c.space = false;
    };
    for (const auto& chp : parent.children) {
      const Node& ch = *chp;
      if (ch.is_element() && is_skipped(ch)) continue;
      if (is_block(ch)) {
        close();
        c.y = block(ch, x, w, c.y, hidden);
      } else {
        if (!open) {
          open = true;
          c.x = c.left;
          c.any = false;
          c.space = false;
        }
        inline_node(ch, c);
      }
    }
    close();
    return c.y;
  }

  void mark_subtree(const Node& n, const BBox& b) {
    mark(&n, b);
    for (const auto& c : n.children) mark_subtree(*c, b);
  }

  double block(const Node& n, double x, double w, double y, bool hidden) {
    Style st = style_of(n);
    if (st.display_none) return y;
    hidden = hidden || st.visibility_hidden;
    if (hidden) out_.invisible.insert(&n);
    const double start = y;
    const std::string& tag = n.tag;
    double end = y;
    if (tag == "hr") {
      BBox b{x, y + 4, w, 2};
      mark(&n, b);
      rect_op(DrawOp::Kind::fill, b, {200, 200, 200}, hidden);
      return y + 6 + kMargin;
    }
    if (tag == "table") {
      end = table(n, x, w, y, hidden);
    } else if (tag == "pre") {
      std::string raw;
      raw_text(n, raw);
      if (!raw.empty() && raw.front() == '\n') raw.erase(0, 1);
      while (!raw.empty() && raw.back() == '\n') raw.pop_back();
      double yy = y;
      std::size_t pos = 0;
      while (pos <= raw.size()) {
        auto nl = raw.find('\n', pos);
        std::string line = raw.substr(pos, nl == std::string::npos ? std::string::npos : nl - pos);
        if (!hidden && !line.empty()) {
          DrawOp op;
          op.box = {x, yy, static_cast<double>(utf8_length(line)) * kChar, kLine};
          op.text = line;
          op.color = kText;
          out_.ops.push_back(op);
        }
        yy += kLine;
        if (nl == std::string::npos) break;
        pos = nl + 1;
      }
      end = yy;
      mark_subtree(n, {x, y, w, end - y});
    } else {
      double indent = (tag == "ul" || tag == "ol" || tag == "blockquote" || tag == "dd") ? kIndent : 0;
      end = flow(n, x + indent, w - indent, y, hidden, is_heading(n) || tag == "th");
    }
    if (end > start) mark(&n, {x, start, w, end - start});
    static const std::set<std::string> kSpaced{"p",  "h1", "h2",    "h3",   "h4",         "h5", "h6",
                                               "ul", "ol", "table", "pre",  "blockquote", "dl", "form",
                                               "figure", "fieldset"};
    if (kSpaced.contains(tag) && end > start) end += kMargin;
    return end;
  }

  void raw_text(const Node& n, std::string& out) {
    for (const auto& c : n.children) {
      if (c->is_text()) out += c->text;
      else if (c->is("br")) out += "\n";
      else raw_text(*c, out);
    }
  }

  void rows_of(const Node& n, std::vector<const Node*>& rows) {
    for (const auto& c : n.children) {
      if (c->is("tr")) rows.push_back(c.get());
      else if (c->is("thead") || c->is("tbody") || c->is("tfoot")) rows_of(*c, rows);
    }
  }

  double table(const Node& n, double x, double w, double y, bool hidden) {
    if (const Node* cap = n.find("caption")) y = block(*cap, x, w, y, hidden);
    std::vector<const Node*> rows;
    rows_of(n, rows);
    std::size_t cols = 1;
    for (const Node* r : rows) {
      std::size_t count = 0;
      for (const auto& c : r->children) {
        if (c->is("td") || c->is("th")) count += static_cast<std::size_t>(std::max(1, std::atoi(c->attr("colspan").value_or("1").c_str())));
      }
      cols = std::max(cols, count);
    }
    const double col_w = w / static_cast<double>(cols);
    for (const Node* r : rows) {
      if (style_of(*r).display_none) continue;
      double row_h = kLine + 4;
      double cx = x;
      std::vector<std::pair<const Node*, BBox>> cells;
      for (const auto& cp : r->children) {
        const Node& cell = *cp;
        if (!cell.is("td") && !cell.is("th")) continue;
        double span = std::max(1, std::atoi(cell.attr("colspan").value_or("1").c_str()));
        double cw = col_w * span;
        double cell_end = flow(cell, cx + 4, cw - 8, y + 2, hidden, cell.is("th"));
        row_h = std::max(row_h, cell_end - y + 2);
        cells.push_back({&cell, {cx, y, cw, 0}});
        cx += cw;
      }
      for (auto& [cell, b] : cells) {
        b.height = row_h;
        mark(cell, b);
        rect_op(DrawOp::Kind::stroke, b, {210, 210, 210}, hidden);
      }
      mark(r, {x, y, w, row_h});
      y += row_h;
    }
    return y;
  }
};

// ---------------------------------------------------------------- semantics

bool has_interactive_role(const Node& n) {
  static const std::set<std::string> kRoles{"button", "link",     "checkbox", "radio",     "textbox",
                                            "combobox", "menuitem", "tab",    "switch",    "option",
                                            "searchbox", "slider",  "listbox", "spinbutton", "menuitemcheckbox",
                                            "menuitemradio", "treeitem"};
  auto role = n.attr("role");
  return role && kRoles.contains(lower(*role));
}

bool matches_interactable_rule(const Node& n, const Layout& layout) {
  if (!n.is_element()) return false;
  if (n.is("a") && n.has_attr("href")) return true;
  if (n.is("button") || n.is("select") || n.is("textarea")) return true;
  if (n.is("input") && input_type(n) != "hidden") return true;
  if (has_interactive_role(n)) return true;
  if (n.has_attr("onclick")) return true;
  if (style_of(n).cursor_pointer) {
    auto it = layout.boxes.find(&n);
    return it != layout.boxes.end() && it->second.has_area();
  }
  return false;
}

std::string role_of(const Node& n) {
  if (auto r = n.attr("role"); r && !r->empty()) {
    std::string role = lower(*r);
    return role.substr(0, role.find(' '));
  }
  const std::string& t = n.tag;
  if (t == "a") return n.has_attr("href") ? "link" : "";
  if (t == "button") return "button";
  if (t == "input") {
    auto type = input_type(n);
    if (type == "checkbox") return "checkbox";
    if (type == "radio") return "radio";
    if (type == "submit" || type == "button" || type == "reset" || type == "image") return "button";
    if (type == "range") return "slider";
    if (type == "search") return "searchbox";
    if (type == "hidden") return "";
    return "textbox";
  }
  if (t == "select") return "combobox";
  if (t == "textarea") return "textbox";
  if (t == "option") return "option";
  if (t == "img") return "img";
  if (is_heading(n)) return "heading";
  static const std::map<std::string, std::string> kRoles{
      {"p", "paragraph"},       {"ul", "list"},          {"ol", "list"},        {"li", "listitem"},
      {"table", "table"},       {"tr", "row"},           {"td", "cell"},        {"th", "columnheader"},
      {"nav", "navigation"},    {"main", "main"},        {"header", "banner"},  {"footer", "contentinfo"},
      {"form", "form"},         {"aside", "complementary"}, {"article", "article"}, {"blockquote", "blockquote"},
      {"dialog", "dialog"},     {"hr", "separator"},     {"caption", "caption"}, {"dl", "list"},
      {"dt", "term"},           {"dd", "definition"},    {"figure", "figure"},  {"pre", "code"},
  };
  if (auto it = kRoles.find(t); it != kRoles.end()) return it->second;
  return "";
}

bool name_from_content(const std::string& role) {
  static const std::set<std::string> kRoles{"link", "button", "heading", "option", "tab", "menuitem",
                                            "columnheader", "treeitem", "switch"};
  return kRoles.contains(role);
}

class Naming {
 public:
  explicit Naming(const Node& doc) { collect(doc); }

  std::string name(const Node& n, const std::string& role) const {
    if (auto id = n.attr("id"); id && labels_.contains(*id)) {
      std::string l = labels_.at(*id);
      if (!l.empty()) return l;
    }
    for (const Node* p = n.parent; p; p = p->parent) {
      if (p->is("label") && !p->has_attr("for")) {
        std::string l = html::collapse_whitespace(p->inner_text());
        if (!l.empty()) return l;
        break;
      }
    }
    if (auto a = n.attr("aria-label")) {
      std::string l = html::collapse_whitespace(*a);
      if (!l.empty()) return l;
    }
    if (is_button_like(n)) return html::collapse_whitespace(button_label(n));
    if (n.is("img")) return n.attr("alt").value_or(n.attr("title").value_or(""));
    if (name_from_content(role) || matches_content_role(n)) {
      std::string c = n.inner_text();
      if (!c.empty()) return c;
    }
    if (auto p = n.attr("placeholder"); p && !p->empty()) return *p;
    return n.attr("title").value_or("");
  }

 private:
  std::map<std::string, std::string> labels_;

  static bool matches_content_role(const Node& n) {
    return (n.is("a") || n.has_attr("onclick") || style_of(n).cursor_pointer) && !is_text_input(n);
  }

  void collect(const Node& n) {
    if (n.is("label")) {
      if (auto f = n.attr("for")) labels_[*f] = html::collapse_whitespace(n.inner_text());
    }
    for (const auto& c : n.children) collect(*c);
  }
};

// ---------------------------------------------------------------- pages

struct Page {
  std::string url = "about:blank";
  std::unique_ptr<Node> doc;
  int next_bid = 0;
  double scroll_y = 0;
  const Node* focus = nullptr;
};

struct Tab {
  Page page;
  std::vector<std::string> back;
  std::vector<std::string> forward;
};

std::unique_ptr<Node> parse_page(const std::string& markup) { return html::parse(markup); }

std::string title_of(const Node& doc) {
  const Node* t = doc.find("title");
  return t ? t->inner_text() : "";
}

const Node* body_of(const Node& doc) {
  const Node* b = doc.find("body");
  return b ? b : &doc;
}

template <typename F>
void walk(Node& n, F&& f) {
  f(n);
  for (auto& c : n.children) walk(*c, f);
}

template <typename F>
void walk(const Node& n, F&& f) {
  f(n);
  for (const auto& c : n.children) walk(static_cast<const Node&>(*c), f);
}

}  // namespace

// ---------------------------------------------------------------- driver

struct OfflineDriver::Impl {
  Site site;
  OfflineOptions options;
  std::vector<Tab> tabs;
  std::size_t active = 0;

  Impl(Site s, OfflineOptions o) : site(std::move(s)), options(std::move(o)) {
    tabs.emplace_back();
    tabs.back().page.doc = parse_page("");
  }

  Page& page() { return tabs[active].page; }

  Layout layout_of(const Page& p) const {
    return Layouter(static_cast<double>(options.width)).run(*body_of(*p.doc));
  }

  double max_scroll(const Layout& l) const { return std::max(0.0, l.height - options.height); }

  Node* find_bid(const std::string& bid) {
    Node* found = nullptr;
    walk(*page().doc, [&](Node& n) {
      if (!found && n.is_element() && n.attr(kBidAttribute) == bid) found = &n;
    });
    return found;
  }

  void assign_bids(Page& p, const Layout& layout) {
    walk(*p.doc, [&](Node& n) {
      if (!matches_interactable_rule(n, layout) || n.has_attr(kBidAttribute)) return;
      n.set_attr(kBidAttribute, "a" + std::to_string(p.next_bid++));
    });
  }

  // ---- navigation

  void set_document(Page& p, std::string url, const std::string& markup) {
    p.url = std::move(url);
    p.doc = parse_page(markup);
    p.next_bid = 0;
    p.scroll_y = 0;
    p.focus = nullptr;
  }

  void load(Page& p, const std::string& url) {
    if (url == "about:blank") {
      set_document(p, url, "");
      return;
    }
    auto hash = url.find('#');
    if (hash != std::string::npos && p.doc && strip_fragment(p.url) == url.substr(0, hash)) {
      p.url = url;
      scroll_to_id(p, url.substr(hash + 1));
      return;
    }
    std::optional<Resource> r;
    try {
      r = site(strip_fragment(url));
    } catch (const std::exception& e) {
      throw ActionFailed("navigation to " + url + " failed: " + e.what());
    }
    if (!r) throw ActionFailed("navigation to " + url + " failed: net::ERR_NAME_NOT_RESOLVED or page not found");
    std::string final_url = r->url.empty() ? url : r->url;
    std::string type = lower(r->content_type);
    if (type.starts_with("text/html") || type.starts_with("application/xhtml")) {
      set_document(p, final_url, r->body);
    } else if (options.download_dir) {
      std::string name = strip_fragment(final_url);
      name = name.substr(0, name.find('?'));
      name = name.substr(name.find_last_of('/') + 1);
      if (name.empty() || name == "." || name == "..") name = "download";
      std::filesystem::create_directories(*options.download_dir);
      auto path = *options.download_dir / name;
      std::ofstream(path, std::ios::binary) << r->body;
      set_document(p, final_url,
                   "<title>Download complete</title><p>Downloaded " + html_escape(name) + " (" +
                       std::to_string(r->body.size()) + " bytes) to " + html_escape(path.string()) + "</p>");
    } else if (type.starts_with("text/") || type.find("json") != std::string::npos) {
      set_document(p, final_url, "<pre>" + html_escape(r->body) + "</pre>");
    } else {
      throw ActionFailed("cannot display " + r->content_type + " content at " + final_url +
                         " (no download directory configured)");
    }
    if (hash != std::string::npos) scroll_to_id(p, url.substr(hash + 1));
  }

  void navigate(Tab& tab, const std::string& target) {
    std::string url = resolve_url(tab.page.url, target);
    std::string previous = tab.page.url;
    load(tab.page, url);
    if (strip_fragment(previous) != strip_fragment(tab.page.url) || previous == "about:blank") {
      tab.back.push_back(previous);
      tab.forward.clear();
    }
  }

  void scroll_to_id(Page& p, const std::string& id) {
    Node* target = p.doc->by_id(id);
    if (!target) return;
    Layout l = layout_of(p);
    auto it = l.boxes.find(target);
    if (it != l.boxes.end()) p.scroll_y = std::clamp(it->second.y, 0.0, max_scroll(l));
  }

  void scroll_into_view(Page& p, const Node& n) {
    Layout l = layout_of(p);
    auto it = l.boxes.find(&n);
    if (it == l.boxes.end()) return;
    const BBox& b = it->second;
    if (b.y >= p.scroll_y && b.bottom() <= p.scroll_y + options.height) return;
    p.scroll_y = std::clamp(b.y - options.height / 2.0, 0.0, max_scroll(l));
  }

  // ---- actions

  Node& element(const BrowserAction& a) {
    Node* n = find_bid(*a.bid);
    if (!n) throw ActionFailed("no element with bid '" + *a.bid + "' on the current page");
    return *n;
  }

  void require_visible(Page& p, const Node& n, const std::string& bid) {
    Layout l = layout_of(p);
    auto it = l.boxes.find(&n);
    bool visible = it != l.boxes.end() && it->second.has_area() && !l.invisible.contains(&n);
    if (!visible) throw ActionFailed("element " + bid + " is not visible");
    if (n.has_attr("disabled")) throw ActionFailed("element " + bid + " is disabled");
  }

  void submit(Tab& tab, const Node& control) {
    const Node* form = nullptr;
    for (const Node* p = control.parent; p; p = p->parent) {
      if (p->is("form")) {
        form = p;
        break;
      }
    }
    if (!form) return;
    std::string query;
    auto add = [&](const std::string& k, const std::string& v) {
      if (!query.empty()) query += '&';
      query += net::url_encode(k) + "=" + net::url_encode(v);
    };
    walk(*form, [&](const Node& n) {
      if (!n.is_element() || n.has_attr("disabled")) return;
      auto name = n.attr("name");
      if (!name || name->empty()) return;
      if (n.is("input")) {
        auto t = input_type(n);
        if (t == "checkbox" || t == "radio") {
          if (n.has_attr("checked")) add(*name, n.attr("value").value_or("on"));
        } else if (t == "submit" || t == "image" || t == "button" || t == "reset") {
          if (&n == &control) add(*name, n.attr("value").value_or(""));
        } else if (t != "file") {
          add(*name, n.attr("value").value_or(""));
        }
      } else if (n.is("button")) {
        if (&n == &control) add(*name, n.attr("value").value_or(""));
      } else if (n.is("select")) {
        if (const Node* o = selected_option(n)) add(*name, option_value(*o));
      } else if (n.is("textarea")) {
        add(*name, control_value(n));
      }
    });
    std::string action = resolve_url(tab.page.url, form->attr("action").value_or(""));
    action = strip_fragment(action);
    action = action.substr(0, action.find('?'));
    navigate(tab, action + "?" + query);
  }

  void click(const BrowserAction& a) {
    Tab& tab = tabs[active];
    Page& p = tab.page;
    Node& n = element(a);
    require_visible(p, n, *a.bid);
    scroll_into_view(p, n);
    p.focus = &n;
    if (auto target = n.attr("data-toggle")) {
      Node* t = p.doc->by_id(*target);
      if (!t) throw ActionFailed("toggle target #" + *target + " does not exist");
      auto& attrs = t->attrs;
      auto it = std::find_if(attrs.begin(), attrs.end(), [](const auto& kv) { return kv.first == "hidden"; });
      if (it != attrs.end()) attrs.erase(it);
      else t->set_attr("hidden", "");
      return;
    }
    if (auto target = n.attr("data-append-to")) {
      Node* t = p.doc->by_id(*target);
      if (!t) throw ActionFailed("append target #" + *target + " does not exist");
      auto frag = parse_page(n.attr("data-append-html").value_or(""));
      Node* src = frag.get();
      if (Node* b = const_cast<Node*>(frag->find("body"))) src = b;
      for (auto& c : src->children) t->append(std::move(c));
      return;
    }
    if (n.is("a") && n.has_attr("href")) {
      std::string href = *n.attr("href");
      if (href.starts_with("javascript:")) return;
      if (n.attr("target") == "_blank") {
        std::string url = resolve_url(p.url, href);
        open_tab(url);
        return;
      }
      navigate(tab, href);
      return;
    }
    if (n.is("input")) {
      auto t = input_type(n);
      if (t == "checkbox") {
        if (n.has_attr("checked")) {
          std::erase_if(n.attrs, [](const auto& kv) { return kv.first == "checked"; });
        } else {
          n.set_attr("checked", "");
        }
        return;
      }
      if (t == "radio") {
        std::string group = n.attr("name").value_or("");
        walk(*p.doc, [&](Node& o) {
          if (o.is("input") && input_type(o) == "radio" && o.attr("name").value_or("") == group) {
            std::erase_if(o.attrs, [](const auto& kv) { return kv.first == "checked"; });
          }
        });
        n.set_attr("checked", "");
        return;
      }
    }
    if (is_button_like(n)) {
      std::string t = lower(n.attr("type").value_or("submit"));
      if (t == "submit" || t == "image") submit(tab, n);
    }
  }

  void fill(const BrowserAction& a) {
    Page& p = page();
    Node& n = element(a);
    require_visible(p, n, *a.bid);
    bool editable = is_text_input(n) || n.attr("contenteditable").value_or("false") != "false" ||
                    n.attr("role") == "textbox" || n.attr("role") == "searchbox";
    if (!editable) throw ActionFailed("element " + *a.bid + " (" + n.tag + ") cannot be filled");
    if (n.has_attr("readonly")) throw ActionFailed("element " + *a.bid + " is read-only");
    if (is_text_input(n)) {
      n.set_attr("value", *a.text);
    } else {
      n.children.clear();
      auto t = std::make_unique<Node>();
      t->type = Node::Type::text;
      t->text = *a.text;
      n.append(std::move(t));
    }
    p.focus = &n;
  }

  void select_option(const BrowserAction& a) {
    Page& p = page();
    Node& n = element(a);
    require_visible(p, n, *a.bid);
    if (!n.is("select")) throw ActionFailed("element " + *a.bid + " (" + n.tag + ") is not a select box");
    std::vector<Node*> opts;
    walk(n, [&](Node& o) {
      if (o.is("option")) opts.push_back(&o);
    });
    Node* chosen = nullptr;
    for (Node* o : opts) {
      if (option_value(*o) == *a.value || o->inner_text() == *a.value) {
        chosen = o;
        break;
      }
    }
    if (!chosen) {
      for (Node* o : opts) {
        if (lower(o->inner_text()) == lower(*a.value)) {
          chosen = o;
          break;
        }
      }
    }
    if (!chosen) {
      std::string list;
      for (Node* o : opts) list += (list.empty() ? "'" : ", '") + o->inner_text() + "'";
      throw ActionFailed("no option '" + *a.value + "' in " + *a.bid + "; options: " + list);
    }
    for (Node* o : opts) std::erase_if(o->attrs, [](const auto& kv) { return kv.first == "selected"; });
    chosen->set_attr("selected", "");
    p.focus = &n;
  }

  void scroll_by(double dy) {
    Page& p = page();
    Layout l = layout_of(p);
    p.scroll_y = std::clamp(p.scroll_y + dy, 0.0, max_scroll(l));
  }

  void press(const std::string& combo) {
    Tab& tab = tabs[active];
    Page& p = tab.page;
    std::string key = combo;
    std::vector<std::string> mods;
    while (key.size() > 1 && key.find('+') != std::string::npos && key.find('+') + 1 < key.size()) {
      mods.push_back(lower(key.substr(0, key.find('+'))));
      key = key.substr(key.find('+') + 1);
    }
    const std::string k = lower(key);
    Node* focus = const_cast<Node*>(p.focus);
    if (!mods.empty()) {
      bool ctrl = std::any_of(mods.begin(), mods.end(),
                              [](const std::string& m) { return m == "control" || m == "meta" || m == "ctrl"; });
      if (ctrl && (k == "a" || k == "c" || k == "v" || k == "x")) return;
      if (mods.size() == 1 && mods[0] == "shift" && key.size() == 1) {
        if (focus && is_text_input(*focus)) focus->set_attr("value", control_value(*focus) + key);
        return;
      }
      throw ActionFailed("unsupported key combination '" + combo + "'");
    }
    const double vh = options.height;
    if (k == "enter" || k == "return") {
      if (!focus) return;
      if (is_text_input(*focus) && !focus->is("textarea")) {
        submit(tab, *focus);
      } else if (auto bid = focus->attr(kBidAttribute); bid && (focus->is("a") || is_button_like(*focus))) {
        BrowserAction c;
        c.verb = Verb::click;
        c.bid = *bid;
        click(c);
      }
    } else if (k == "tab") {
      Layout l = layout_of(p);
      std::vector<Node*> order;
      walk(*p.doc, [&](Node& n) {
        if (matches_interactable_rule(n, l) && l.boxes.contains(&n) && l.boxes.at(&n).has_area()) order.push_back(&n);
      });
      if (order.empty()) return;
      auto it = std::find(order.begin(), order.end(), focus);
      p.focus = (it == order.end() || std::next(it) == order.end()) ? order.front() : *std::next(it);
      scroll_into_view(p, *p.focus);
    } else if (k == "pagedown" || k == " " || k == "space") {
      scroll_by(vh * 0.9);
    } else if (k == "pageup") {
      scroll_by(-vh * 0.9);
    } else if (k == "arrowdown") {
      scroll_by(40);
    } else if (k == "arrowup") {
      scroll_by(-40);
    } else if (k == "home") {
      scroll_by(-1e12);
    } else if (k == "end") {
      scroll_by(1e12);
    } else if (k == "escape") {
      p.focus = nullptr;
    } else if (k == "backspace") {
      if (focus && is_text_input(*focus)) {
        std::string v = control_value(*focus);
        while (!v.empty() && (static_cast<unsigned char>(v.back()) & 0xC0) == 0x80) v.pop_back();
        if (!v.empty()) v.pop_back();
        focus->set_attr("value", v);
      }
    } else if (utf8_length(key) == 1) {
      if (focus && is_text_input(*focus)) focus->set_attr("value", control_value(*focus) + key);
    } else if (k == "arrowleft" || k == "arrowright" || k == "delete") {
      return;
    } else {
      throw ActionFailed("unsupported key '" + combo + "'");
    }
  }

  void open_tab(const std::string& url) {
    Tab t;
    t.page.doc = parse_page("");
    tabs.push_back(std::move(t));
    active = tabs.size() - 1;
    if (!url.empty() && url != "about:blank") navigate(tabs[active], url);
  }

  void perform(const BrowserAction& a) {
    validate(a);
    Tab& tab = tabs[active];
    switch (a.verb) {
      case Verb::goto_url: navigate(tab, *a.url); break;
      case Verb::click: click(a); break;
      case Verb::fill: fill(a); break;
      case Verb::select_option: select_option(a); break;
      case Verb::hover: {
        Node& n = element(a);
        require_visible(tab.page, n, *a.bid);
        scroll_into_view(tab.page, n);
        break;
      }
      case Verb::press: press(*a.key); break;
      case Verb::scroll: scroll_by(a.dy); break;
      case Verb::go_back: {
        if (tab.back.empty()) throw ActionFailed("no previous page in this tab");
        std::string url = tab.back.back();
        tab.back.pop_back();
        std::string current = tab.page.url;
        load(tab.page, url);
        tab.forward.push_back(current);
        break;
      }
      case Verb::go_forward: {
        if (tab.forward.empty()) throw ActionFailed("no next page in this tab");
        std::string url = tab.forward.back();
        tab.forward.pop_back();
        std::string current = tab.page.url;
        load(tab.page, url);
        tab.back.push_back(current);
        break;
      }
      case Verb::new_tab: open_tab(a.url.value_or("about:blank")); break;
      case Verb::close_tab:
        tabs.erase(tabs.begin() + static_cast<std::ptrdiff_t>(active));
        if (tabs.empty()) {
          tabs.emplace_back();
          tabs.back().page.doc = parse_page("");
        }
        active = std::min(active, tabs.size() - 1);
        break;
      case Verb::switch_tab:
        if (static_cast<std::size_t>(*a.tab) >= tabs.size()) {
          throw ActionFailed("tab " + std::to_string(*a.tab) + " does not exist; " + std::to_string(tabs.size()) +
                             " tab(s) open");
        }
        active = static_cast<std::size_t>(*a.tab);
        break;
      case Verb::noop: break;
    }
  }

  // ---- observation

  AxNode ax_tree(const Page& p, const Layout& l, const Naming& naming) const {
    AxNode root;
    root.role = "RootWebArea";
    root.name = title_of(*p.doc);
    root.bbox = {0, -p.scroll_y, static_cast<double>(options.width), std::max(l.height, double(options.height))};
    ax_children(*body_of(*p.doc), p, l, naming, root.children, false);
    return root;
  }

  BBox rel(const Page& p, const BBox& b) const { return {b.x, b.y - p.scroll_y, b.width, b.height}; }

  void ax_children(const Node& n, const Page& p, const Layout& l, const Naming& naming, std::vector<AxNode>& out,
                   bool drop_text) const {
    for (const auto& cp : n.children) {
      const Node& c = *cp;
      if (c.is_text()) {
        if (drop_text) continue;
        std::string t = html::collapse_whitespace(c.text);
        auto it = l.boxes.find(&c);
        if (t.empty() || it == l.boxes.end() || l.invisible.contains(&c)) continue;
        AxNode s;
        s.role = "StaticText";
        s.name = t;
        s.bbox = rel(p, it->second);
        out.push_back(std::move(s));
        continue;
      }
      if (!c.is_element() || is_skipped(c)) continue;
      if (style_of(c).display_none || l.invisible.contains(&c)) continue;
      auto it = l.boxes.find(&c);
      std::string role = role_of(c);
      if (role.empty()) {
        ax_children(c, p, l, naming, out, drop_text);
        continue;
      }
      if (it == l.boxes.end()) continue;
      AxNode node;
      node.role = role;
      node.name = naming.name(c, role);
      if (auto bid = c.attr(kBidAttribute)) node.bid = *bid;
      node.bbox = rel(p, it->second);
      properties(c, role, p, node.properties);
      if (c.is("select")) {
        for (const Node* o : options_of(c)) {
          AxNode opt;
          opt.role = "option";
          opt.name = o->inner_text();
          opt.bbox = node.bbox;
          if (o == selected_option(c)) opt.properties.push_back("selected");
          node.children.push_back(std::move(opt));
        }
      } else if (!is_widget(c)) {
        ax_children(c, p, l, naming, node.children, name_from_content(role));
      }
      out.push_back(std::move(node));
    }
  }

  static void properties(const Node& n, const std::string& role, const Page& p, std::vector<std::string>& out) {
    if (role == "heading" && is_heading(n)) out.push_back(std::string("level=") + n.tag[1]);
    if (role == "checkbox" || role == "radio") out.push_back(n.has_attr("checked") ? "checked=true" : "checked=false");
    if (role == "textbox" || role == "searchbox" || role == "combobox") {
      std::string v = control_value(n);
      if (!v.empty()) out.push_back("value='" + v + "'");
    }
    if (&n == p.focus) out.push_back("focused");
    if (n.has_attr("disabled")) out.push_back("disabled");
    if (n.has_attr("required")) out.push_back("required");
  }

  Canvas screenshot(const Page& p, const Layout& l) const {
    Canvas canvas(options.width, options.height);
    const BBox view{0, p.scroll_y, static_cast<double>(options.width), static_cast<double>(options.height)};
    for (const auto& op : l.ops) {
      if (!op.box.intersects(view) && !(op.kind == DrawOp::Kind::text && op.box.y < view.bottom() &&
                                        op.box.y + kLine > view.y)) {
        continue;
      }
      int x = static_cast<int>(op.box.x);
      int y = static_cast<int>(op.box.y - p.scroll_y);
      int w = static_cast<int>(op.box.width);
      int h = static_cast<int>(op.box.height);
      switch (op.kind) {
        case DrawOp::Kind::fill: canvas.fill_rect(x, y, w, h, op.color); break;
        case DrawOp::Kind::stroke: canvas.stroke_rect(x, y, w, h, op.color); break;
        case DrawOp::Kind::text: {
          int advance = canvas.draw_text(x, y + 2, op.text, op.color);
          if (op.bold) canvas.draw_text(x + 1, y + 2, op.text, op.color);
          if (op.underline) canvas.fill_rect(x, y + 17, advance, 1, op.color);
          break;
        }
      }
    }
    return canvas;
  }

  PageState snapshot() {
    Page& p = page();
    Layout l = layout_of(p);
    p.scroll_y = std::clamp(p.scroll_y, 0.0, max_scroll(l));
    assign_bids(p, l);

    PageState s;
    s.url = p.url;
    s.title = title_of(*p.doc);
    auto& vp = s.annotation.viewport;
    vp.width = options.width;
    vp.height = options.height;
    vp.scroll_x = 0;
    vp.scroll_y = p.scroll_y;
    vp.page_height = std::max(l.height, static_cast<double>(options.height));

    Naming naming(*p.doc);
    const BBox doc_rect{0, 0, static_cast<double>(options.width), vp.page_height};
    const BBox view = vp.rect();
    walk(static_cast<const Node&>(*p.doc), [&](const Node& n) {
      auto bid = n.is_element() ? n.attr(kBidAttribute) : std::nullopt;
      if (!bid || !matches_interactable_rule(n, l)) return;
      AnnotatedElement e;
      e.bid = *bid;
      e.tag = n.tag;
      e.role = role_of(n);
      if (e.role.empty()) e.role = "generic";
      e.name = naming.name(n, e.role);
      auto it = l.boxes.find(&n);
      bool laid_out = it != l.boxes.end() && it->second.has_area();
      if (laid_out) e.bbox = rel(p, it->second);
      e.visible = laid_out && !l.invisible.contains(&n) && it->second.intersects(doc_rect);
      e.interactable = true;
      e.in_viewport = e.visible && e.bbox.intersects(view);
      s.annotation.elements.push_back(std::move(e));
    });
    s.axtree = ax_tree(p, l, naming);
    s.pixels = screenshot(p, l);
    for (const auto& t : tabs) s.tabs.push_back(t.page.url);
    s.active_tab = static_cast<int>(active);
    return s;
  }
};

OfflineDriver::OfflineDriver(Site site, OfflineOptions options)
    : impl_(std::make_unique<Impl>(std::move(site), std::move(options))) {}

OfflineDriver::~OfflineDriver() = default;

void OfflineDriver::perform(const BrowserAction& action) {
  try {
    impl_->perform(action);
  } catch (const ActionError& e) {
    throw ActionFailed(std::string("invalid action: ") + e.what());
  }
}

PageState OfflineDriver::snapshot() { return impl_->snapshot(); }

void OfflineDriver::set_viewport(int width, int height) {
  if (width <= 0 || height <= 0) throw std::invalid_argument("viewport must be positive");
  impl_->options.width = width;
  impl_->options.height = height;
}

void OfflineDriver::load_html(const std::string& url, const std::string& markup) {
  Tab& tab = impl_->tabs[impl_->active];
  if (tab.page.url != "about:blank") tab.back.push_back(tab.page.url);
  tab.forward.clear();
  impl_->set_document(tab.page, url, markup);
}

// ---------------------------------------------------------------- urls and sites

namespace {

struct SplitUrl {
  std::string scheme;     // "http"
  std::string authority;  // "host:port"
  std::string path;
  std::string query;  // with '?'
  std::string fragment;  // with '#'
};

SplitUrl split(const std::string& url) {
  SplitUrl u;
  std::string rest = url;
  if (auto h = rest.find('#'); h != std::string::npos) {
    u.fragment = rest.substr(h);
    rest.resize(h);
  }
  if (auto q = rest.find('?'); q != std::string::npos) {
    u.query = rest.substr(q);
    rest.resize(q);
  }
  auto colon = rest.find(':');
  if (colon != std::string::npos && colon > 0 &&
      std::all_of(rest.begin(), rest.begin() + static_cast<std::ptrdiff_t>(colon), [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '+' || c == '-' || c == '.';
      })) {
    u.scheme = lower(rest.substr(0, colon));
    rest = rest.substr(colon + 1);
  }
  if (rest.starts_with("//")) {
    auto slash = rest.find('/', 2);
    u.authority = rest.substr(2, slash == std::string::npos ? std::string::npos : slash - 2);
    rest = slash == std::string::npos ? "" : rest.substr(slash);
  }
  u.path = rest;
  return u;
}

std::string remove_dots(const std::string& path) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  bool absolute = path.starts_with('/');
  bool trailing = false;
  while (pos <= path.size()) {
    auto slash = path.find('/', pos);
    std::string seg = path.substr(pos, slash == std::string::npos ? std::string::npos : slash - pos);
    trailing = false;
    if (seg == "..") {
      if (!out.empty()) out.pop_back();
      trailing = true;
    } else if (seg == ".") {
      trailing = true;
    } else if (!seg.empty() || slash == std::string::npos) {
      out.push_back(seg);
    }
    if (slash == std::string::npos) break;
    pos = slash + 1;
  }
  std::string r = absolute ? "/" : "";
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (i) r += '/';
    r += out[i];
  }
  if (trailing && !r.ends_with('/')) r += '/';
  return r;
}

std::string join(const SplitUrl& u) {
  std::string out;
  if (!u.scheme.empty()) out += u.scheme + ":";
  if (!u.authority.empty() || u.scheme == "http" || u.scheme == "https" || u.scheme == "file") {
    out += "//" + u.authority;
  }
  return out + u.path + u.query + u.fragment;
}

std::string content_type_for(const std::filesystem::path& p) {
  static const std::map<std::string, std::string> kTypes{
      {".html", "text/html"},        {".htm", "text/html"},   {".txt", "text/plain"},
      {".md", "text/markdown"},      {".csv", "text/csv"},    {".json", "application/json"},
      {".pdf", "application/pdf"},   {".png", "image/png"},   {".jpg", "image/jpeg"},
      {".jpeg", "image/jpeg"},       {".xlsx", "application/vnd.openxmlformats-officedocument.spreadsheetml.sheet"},
      {".docx", "application/vnd.openxmlformats-officedocument.wordprocessingml.document"},
      {".zip", "application/zip"},
  };
  auto it = kTypes.find(lower(p.extension().string()));
  return it == kTypes.end() ? "application/octet-stream" : it->second;
}

}  // namespace

std::string resolve_url(const std::string& base, const std::string& ref) {
  SplitUrl r = split(ref);
  if (!r.scheme.empty()) {
    r.path = remove_dots(r.path.empty() && !r.authority.empty() ? "/" : r.path);
    return join(r);
  }
  SplitUrl b = split(base);
  if (b.scheme.empty() || b.scheme == "about") return ref;
  SplitUrl out;
  out.scheme = b.scheme;
  if (ref.starts_with("//")) {
    out.authority = r.authority;
    out.path = remove_dots(r.path.empty() ? "/" : r.path);
    out.query = r.query;
  } else {
    out.authority = b.authority;
    if (r.path.empty()) {
      out.path = b.path.empty() ? "/" : b.path;
      out.query = r.query.empty() ? b.query : r.query;
    } else if (r.path.starts_with('/')) {
      out.path = remove_dots(r.path);
      out.query = r.query;
    } else {
      std::string dir = b.path.empty() ? "/" : b.path.substr(0, b.path.find_last_of('/') + 1);
      out.path = remove_dots(dir + r.path);
      out.query = r.query;
    }
  }
  out.fragment = r.fragment;
  return join(out);
}

Site directory_site(std::filesystem::path root) {
  return [root = std::move(root)](const std::string& url) -> std::optional<Resource> {
    SplitUrl u = split(url);
    if (u.scheme != "http" && u.scheme != "https") return std::nullopt;
    std::string host = lower(u.authority.substr(0, u.authority.find(':')));
    if (host.empty() || host.find("..") != std::string::npos || host.find('/') != std::string::npos) {
      return std::nullopt;
    }
    std::string path = url_decode(u.path.empty() ? "/" : u.path);
    std::filesystem::path file = root / host;
    std::size_t pos = 1;
    while (pos <= path.size()) {
      auto slash = path.find('/', pos);
      std::string seg = path.substr(pos, slash == std::string::npos ? std::string::npos : slash - pos);
      if (seg == "..") return std::nullopt;
      if (!seg.empty() && seg != ".") file /= seg;
      if (slash == std::string::npos) break;
      pos = slash + 1;
    }
    std::error_code ec;
    if (std::filesystem::is_directory(file, ec)) file /= "index.html";
    if (!std::filesystem::is_regular_file(file, ec)) return std::nullopt;
    Resource r;
    r.url = url;
    r.content_type = content_type_for(file);
    r.body = assets::read_file(file);
    if (r.content_type == "text/html") {
      auto params = query_params(url);
      std::string out;
      std::size_t i = 0;
      while (i < r.body.size()) {
        auto open = r.body.find("{{", i);
        if (open == std::string::npos) break;
        auto close = r.body.find("}}", open + 2);
        if (close == std::string::npos) break;
        std::string key = r.body.substr(open + 2, close - open - 2);
        bool ident = !key.empty() && std::all_of(key.begin(), key.end(), [](char c) {
          return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
        });
        out += r.body.substr(i, open - i);
        if (ident) {
          auto it = params.find(key);
          if (it != params.end()) out += html_escape(it->second);
        } else {
          out += r.body.substr(open, close + 2 - open);
        }
        i = close + 2;
      }
      out += r.body.substr(i);
      r.body = std::move(out);
    }
    return r;
  };
}

}  // namespace versa::browser
