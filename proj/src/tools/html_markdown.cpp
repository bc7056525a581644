#include <algorithm>
#include <cctype>
#include <cstdlib>

#include "versa/core/text.hpp"
#include "versa/tools/convert.hpp"
#include "versa/tools/html.hpp"

namespace versa::tools {

using html::Node;

std::string pipe_table(const std::vector<std::vector<std::string>>& rows) {
  if (rows.empty()) return {};
  std::size_t cols = 0;
  for (const auto& r : rows) cols = std::max(cols, r.size());
  if (cols == 0) return {};
  auto cell = [](std::string s) {
    std::string out;
    for (char c : s) {
      if (c == '|') out += "\\|";
      else if (c == '\n') out += "<br>";
      else if (c != '\r') out += c;
    }
    return out;
  };
  auto line = [&](const std::vector<std::string>& r) {
    std::string out = "|";
    for (std::size_t c = 0; c < cols; ++c) out += " " + cell(c < r.size() ? r[c] : "") + " |";
    return out + "\n";
  };
  std::string out = line(rows[0]);
  out += "|";
  for (std::size_t c = 0; c < cols; ++c) out += " --- |";
  out += "\n";
  for (std::size_t i = 1; i < rows.size(); ++i) out += line(rows[i]);
  return out;
}

namespace {

bool is_block(const Node& n) {
  static const char* kBlocks[] = {"p",      "div",     "ul",     "ol",    "li",     "table",  "h1",       "h2",
                                  "h3",     "h4",      "h5",     "h6",    "pre",    "blockquote", "section", "article",
                                  "header", "footer",  "nav",    "main",  "aside",  "form",   "hr",       "dl",
                                  "dt",     "dd",      "figure", "figcaption", "body", "html", "head",     "details",
                                  "summary", "fieldset", "address", "center"};
  if (!n.is_element()) return false;
  return std::any_of(std::begin(kBlocks), std::end(kBlocks), [&](const char* t) { return n.tag == t; });
}

bool is_skipped(const Node& n) {
  return n.is("script") || n.is("style") || n.is("head") || n.is("noscript") || n.is("template") ||
         n.is("svg") || n.is("iframe");
}

class Renderer {
 public:
  std::vector<std::string> notes;

  std::string run(const Node& doc) {
    blocks(doc, 0);
    std::string out;
    for (const auto& b : out_) {
      if (b.empty()) continue;
      if (!out.empty()) out += "\n";
      out += b;
      if (out.back() != '\n') out += '\n';
    }
    return out;
  }

 private:
  std::vector<std::string> out_;
  int images_ = 0;

  void emit(std::string block) {
    block = text::trim(block);
    if (!block.empty()) out_.push_back(std::move(block));
  }

  std::string inline_md(const Node& n) {
    std::string s;
    inline_children(n, s);
    return s;
  }

  void inline_children(const Node& n, std::string& s) {
    for (const auto& c : n.children) inline_into(*c, s);
  }

  void inline_into(const Node& n, std::string& s) {
    if (n.is_text()) {
      std::string t = html::collapse_whitespace(" " + n.text + " ");
      bool lead = !n.text.empty() && std::isspace(static_cast<unsigned char>(n.text.front()));
      bool trail = !n.text.empty() && std::isspace(static_cast<unsigned char>(n.text.back()));
      if (t.empty()) {
        if ((lead || trail) && !s.empty() && s.back() != ' ' && s.back() != '\n') s += ' ';
        return;
      }
      if (lead && !s.empty() && s.back() != ' ' && s.back() != '\n') s += ' ';
      s += t;
      if (trail) s += ' ';
      return;
    }
    if (!n.is_element() || is_skipped(n)) {
      if (!n.is_element()) inline_children(n, s);
      return;
    }
    const std::string& tag = n.tag;
    if (tag == "br") {
      while (!s.empty() && s.back() == ' ') s.pop_back();
      s += "\n";
    } else if (tag == "img") {
      ++images_;
      std::string alt = text::trim(n.attr("alt").value_or(""));
      s += "[image: " + (alt.empty() ? std::to_string(images_) : alt) + "]";
    } else if (tag == "a") {
      std::string inner = text::trim(inline_md(n));
      std::string href = n.attr("href").value_or("");
      if (href.empty() || href.starts_with("javascript:") || href.starts_with('#') || inner.empty()) {
        s += inner;
      } else {
        s += "[" + inner + "](" + href + ")";
      }
    } else if (tag == "strong" || tag == "b") {
      wrap(n, s, "**");
    } else if (tag == "em" || tag == "i") {
      wrap(n, s, "*");
    } else if (tag == "code" || tag == "kbd" || tag == "samp") {
      std::string inner = n.inner_text();
      if (!inner.empty()) s += "`" + inner + "`";
    } else if (tag == "input") {
      std::string type = n.attr("type").value_or("text");
      if (type != "hidden") {
        std::string label = n.attr("value").value_or(n.attr("placeholder").value_or(""));
        s += "[" + type + (label.empty() ? "" : ": " + label) + "]";
      }
    } else if (is_block(n)) {
      // Block inside inline context (malformed markup): keep its text.
      s += " ";
      inline_children(n, s);
      s += " ";
    } else {
      inline_children(n, s);
    }
  }

  void wrap(const Node& n, std::string& s, std::string_view mark) {
    std::string inner = text::trim(inline_md(n));
    if (inner.empty()) return;
    s += std::string(mark) + inner + std::string(mark);
  }

  void blocks(const Node& n, int depth) {
    std::string para;
    auto flush = [&] {
      emit(para);
      para.clear();
    };
    for (const auto& cp : n.children) {
      const Node& c = *cp;
      if (c.is_element() && is_skipped(c)) continue;
      if (!is_block(c)) {
        inline_into(c, para);
        continue;
      }
      flush();
      block(c, depth);
    }
    flush();
  }

  void block(const Node& n, int depth) {
    const std::string& tag = n.tag;
    if (tag.size() == 2 && tag[0] == 'h' && tag[1] >= '1' && tag[1] <= '6') {
      std::string title = text::trim(inline_md(n));
      std::replace(title.begin(), title.end(), '\n', ' ');
      if (!title.empty()) emit(std::string(static_cast<std::size_t>(tag[1] - '0'), '#') + " " + title);
    } else if (tag == "p" || tag == "dt" || tag == "dd" || tag == "figcaption" || tag == "summary" ||
               tag == "address") {
      bool has_block = std::any_of(n.children.begin(), n.children.end(), [](const auto& c) { return is_block(*c); });
      if (has_block) {
        blocks(n, depth);
      } else {
        emit(inline_md(n));
      }
    } else if (tag == "ul" || tag == "ol") {
      emit(list(n, 0));
    } else if (tag == "li") {
      emit("- " + text::trim(inline_md(n)));
    } else if (tag == "pre") {
      std::string raw;
      raw_text(n, raw);
      if (!raw.empty() && raw.front() == '\n') raw.erase(0, 1);
      while (!raw.empty() && raw.back() == '\n') raw.pop_back();
      emit("```\n" + raw + "\n```");
    } else if (tag == "blockquote") {
      Renderer inner;
      inner.images_ = images_;
      std::string body = inner.run(n);
      images_ = inner.images_;
      std::string quoted;
      for (const auto& line : text::split_lines(body)) quoted += (line.empty() ? ">" : "> " + line) + "\n";
      emit(quoted);
    } else if (tag == "table") {
      emit(table(n));
    } else if (tag == "hr") {
      emit("---");
    } else {
      blocks(n, depth + 1);
    }
  }

  void raw_text(const Node& n, std::string& out) {
    for (const auto& c : n.children) {
      if (c->is_text()) out += c->text;
      else if (c->is("br")) out += "\n";
      else raw_text(*c, out);
    }
  }

  std::string list(const Node& n, int indent) {
    std::string out;
    int index = 1;
    const bool ordered = n.is("ol");
    for (const auto& cp : n.children) {
      const Node& li = *cp;
      if (!li.is("li")) continue;
      std::string text_part;
      std::string nested;
      for (const auto& c : li.children) {
        if (c->is("ul") || c->is("ol")) {
          nested += list(*c, indent + 2);
        } else {
          inline_into(*c, text_part);
        }
      }
      std::string bullet = ordered ? std::to_string(index++) + ". " : "- ";
      std::string item = text::trim(text_part);
      std::replace(item.begin(), item.end(), '\n', ' ');
      out += std::string(static_cast<std::size_t>(indent), ' ') + bullet + item + "\n" + nested;
    }
    return out;
  }

  void collect_rows(const Node& n, std::vector<const Node*>& rows) {
    for (const auto& c : n.children) {
      if (c->is("tr")) rows.push_back(c.get());
      else if (c->is("thead") || c->is("tbody") || c->is("tfoot")) collect_rows(*c, rows);
    }
  }

  std::string table(const Node& n) {
    std::vector<const Node*> trs;
    collect_rows(n, trs);
    std::vector<std::vector<std::string>> rows;
    for (const Node* tr : trs) {
      std::vector<std::string> row;
      for (const auto& c : tr->children) {
        if (!c->is("td") && !c->is("th")) continue;
        std::string v = text::trim(inline_md(*c));
        std::replace(v.begin(), v.end(), '\n', ' ');
        row.push_back(std::move(v));
        int span = std::atoi(c->attr("colspan").value_or("1").c_str());
        for (int k = 1; k < span && k < 64; ++k) row.emplace_back();
      }
      rows.push_back(std::move(row));
    }
    if (const Node* cap = n.find("caption")) {
      std::string title = text::trim(inline_md(*cap));
      if (!title.empty()) return "**" + title + "**\n\n" + pipe_table(rows);
    }
    return pipe_table(rows);
  }
};

}  // namespace

Converted html_to_markdown(std::string_view src) {
  auto doc = html::parse(src);
  Renderer r;
  Converted out;
  out.markdown = r.run(*doc);
  out.notes = std::move(r.notes);
  if (const Node* title = doc->find("title")) {
    std::string t = title->inner_text();
    if (!t.empty() && out.markdown.find(t) == std::string::npos) out.markdown = "# " + t + "\n\n" + out.markdown;
  }
  return out;
}

}  // namespace versa::tools
