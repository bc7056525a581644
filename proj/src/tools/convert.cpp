#include "versa/tools/convert.hpp"

#include <fcntl.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <array>
#include <cerrno>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <map>
#include <mutex>

#include "versa/core/text.hpp"
#include "versa/tools/html.hpp"
#include "versa/tools/xml.hpp"
#include "versa/tools/zip.hpp"

extern char** environ;

namespace versa::tools {

namespace {

constexpr std::size_t kMaxListing = 1000;

std::string extension_of(std::string_view path) {
  std::string lower = text::to_lower(std::filesystem::path(std::string(path)).filename().string());
  if (lower.ends_with(".tar.gz")) return ".tar.gz";
  auto dot = lower.rfind('.');
  return dot == std::string::npos ? std::string() : lower.substr(dot);
}

bool starts(std::string_view bytes, std::string_view magic) { return bytes.substr(0, magic.size()) == magic; }

std::string_view skip_bom_ws(std::string_view s) {
  if (starts(s, "\xEF\xBB\xBF")) s.remove_prefix(3);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  return s;
}

bool zip_has(std::string_view bytes, std::string_view member) {
  if (!looks_like_zip(bytes)) return false;
  try {
    return ZipReader(bytes).contains(member);
  } catch (const ArchiveError&) {
    return false;
  }
}

// ---- OOXML helpers ----

std::string dir_of(std::string_view part) {
  auto slash = part.rfind('/');
  return slash == std::string_view::npos ? std::string() : std::string(part.substr(0, slash + 1));
}

std::string join_part(std::string_view base_dir, std::string_view target) {
  if (target.starts_with('/')) return std::string(target.substr(1));
  std::vector<std::string> parts;
  auto push = [&](std::string_view s) {
    std::size_t start = 0;
    while (start <= s.size()) {
      auto slash = s.find('/', start);
      std::string_view seg = s.substr(start, slash == std::string_view::npos ? s.size() - start : slash - start);
      if (seg == "..") {
        if (!parts.empty()) parts.pop_back();
      } else if (!seg.empty() && seg != ".") {
        parts.emplace_back(seg);
      }
      if (slash == std::string_view::npos) break;
      start = slash + 1;
    }
  };
  push(base_dir);
  push(target);
  return text::join(parts, "/");
}

// Relationship id -> absolute part name for `part`.
std::map<std::string, std::string> relationships(const ZipReader& zip, std::string_view part) {
  std::map<std::string, std::string> out;
  std::string dir = dir_of(part);
  std::string rels_name = dir + "_rels/" + std::string(part.substr(dir.size())) + ".rels";
  auto data = zip.try_read(rels_name);
  if (!data) return out;
  auto root = xml::parse(*data);
  for (const xml::Node* rel : root->children_named("Relationship")) {
    if (rel->attr("TargetMode") == "External") {
      out[rel->attr("Id")] = rel->attr("Target");
    } else {
      out[rel->attr("Id")] = join_part(dir, rel->attr("Target"));
    }
  }
  return out;
}

// The prefixed relationship id (r:id), as opposed to a plain numeric id.
std::string rel_id(const xml::Node& n) {
  for (const auto& [k, v] : n.attrs) {
    auto colon = k.find(':');
    if (colon != std::string::npos && k.substr(colon + 1) == "id") return v;
  }
  return {};
}

std::unique_ptr<xml::Node> parse_part(const ZipReader& zip, std::string_view name) {
  auto data = zip.try_read(name);
  if (!data) throw ConversionError("missing part " + std::string(name));
  return xml::parse(*data);
}

std::string one_line(std::string s) {
  std::replace(s.begin(), s.end(), '\n', ' ');
  return text::trim(s);
}

// ---- spreadsheet ----

int column_index(std::string_view ref) {
  int col = 0;
  for (char c : ref) {
    if (c >= 'A' && c <= 'Z') col = col * 26 + (c - 'A' + 1);
    else if (c >= 'a' && c <= 'z') col = col * 26 + (c - 'a' + 1);
    else break;
  }
  return col - 1;
}

std::string shared_string_text(const xml::Node& si) {
  std::string out;
  for (const auto& c : si.children) {
    if (c->is_text()) continue;
    if (c->local() == "t") out += c->inner_text();
    else if (c->local() == "r") {
      if (const xml::Node* t = c->child("t")) out += t->inner_text();
    }
  }
  return out;
}

std::string cell_value(const xml::Node& c, const std::vector<std::string>& shared) {
  std::string type = c.attr("t");
  const xml::Node* v = c.child("v");
  if (type == "inlineStr") {
    const xml::Node* is = c.child("is");
    return is ? shared_string_text(*is) : "";
  }
  if (!v) return "";
  std::string raw = v->inner_text();
  if (type == "s") {
    std::size_t i = static_cast<std::size_t>(std::strtoul(raw.c_str(), nullptr, 10));
    return i < shared.size() ? shared[i] : "";
  }
  if (type == "b") return raw == "1" ? "TRUE" : "FALSE";
  return raw;
}

}  // namespace

Converted xlsx_to_markdown(std::string_view bytes) {
  ZipReader zip(bytes);
  const std::string wb_name = "xl/workbook.xml";
  auto wb = parse_part(zip, wb_name);
  auto rels = relationships(zip, wb_name);

  std::vector<std::string> shared;
  if (auto ss = zip.try_read("xl/sharedStrings.xml")) {
    auto root = xml::parse(*ss);
    for (const xml::Node* si : root->children_named("si")) shared.push_back(shared_string_text(*si));
  }

  Converted out;
  const xml::Node* sheets = wb->child("sheets");
  if (!sheets) throw ConversionError("spreadsheet has no sheets");
  for (const xml::Node* sheet : sheets->children_named("sheet")) {
    std::string name = sheet->attr("name");
    auto target = rels.find(rel_id(*sheet));
    if (target == rels.end()) {
      out.notes.push_back("sheet '" + name + "' has no worksheet part");
      continue;
    }
    auto ws = parse_part(zip, target->second);
    std::map<std::size_t, std::map<std::size_t, std::string>> grid;
    std::size_t max_col = 0;
    std::size_t max_row = 0;
    if (const xml::Node* data = ws->child("sheetData")) {
      std::size_t next_row = 0;
      for (const xml::Node* row : data->children_named("row")) {
        std::string r = row->attr("r");
        std::size_t ri = r.empty() ? next_row : static_cast<std::size_t>(std::strtoul(r.c_str(), nullptr, 10)) - 1;
        next_row = ri + 1;
        std::size_t next_col = 0;
        for (const xml::Node* c : row->children_named("c")) {
          std::string ref = c->attr("r");
          int ci = ref.empty() ? static_cast<int>(next_col) : column_index(ref);
          if (ci < 0) continue;
          next_col = static_cast<std::size_t>(ci) + 1;
          std::string value = cell_value(*c, shared);
          if (value.empty()) continue;
          grid[ri][static_cast<std::size_t>(ci)] = std::move(value);
          max_col = std::max(max_col, static_cast<std::size_t>(ci) + 1);
          max_row = std::max(max_row, ri + 1);
        }
      }
    }
    if (!out.markdown.empty()) out.markdown += "\n";
    out.markdown += "## " + name + "\n\n";
    if (grid.empty()) {
      out.markdown += "(empty sheet)\n";
      continue;
    }
    std::size_t first_row = grid.begin()->first;
    std::vector<std::vector<std::string>> rows;
    for (std::size_t r = first_row; r < max_row; ++r) {
      std::vector<std::string> row(max_col);
      if (auto it = grid.find(r); it != grid.end()) {
        for (auto& [c, v] : it->second) row[c] = v;
      }
      rows.push_back(std::move(row));
    }
    out.markdown += pipe_table(rows);
  }
  if (out.markdown.empty()) out.markdown = "(no sheets)\n";
  out.notes.push_back("formulas shown as their cached values; formatting and charts are not rendered");
  return out;
}

namespace {

// ---- word-processor ----

class DocxRenderer {
 public:
  std::vector<std::string> blocks;
  int images = 0;

  void body(const xml::Node& n) {
    for (const auto& c : n.children) {
      if (c->is_text()) continue;
      std::string_view tag = c->local();
      if (tag == "p") paragraph(*c);
      else if (tag == "tbl") table(*c);
      else if (tag == "sdt") {
        if (const xml::Node* content = c->child("sdtContent")) body(*content);
      }
    }
  }

 private:
  void runs(const xml::Node& n, std::string& s) {
    for (const auto& c : n.children) {
      if (c->is_text()) continue;
      std::string_view tag = c->local();
      if (tag == "t") s += c->inner_text();
      else if (tag == "tab") s += '\t';
      else if (tag == "br" || tag == "cr") s += '\n';
      else if (tag == "drawing" || tag == "pict") {
        ++images;
        std::vector<const xml::Node*> props;
        c->find_all("docPr", props);
        std::string alt = props.empty() ? "" : text::trim(props[0]->attr("descr"));
        if (alt.empty() && !props.empty()) alt = text::trim(props[0]->attr("title"));
        s += "[image: " + (alt.empty() ? std::to_string(images) : alt) + "]";
      } else if (tag == "r" || tag == "hyperlink" || tag == "ins" || tag == "smartTag" || tag == "fldSimple") {
        runs(*c, s);
      }
    }
  }

  void paragraph(const xml::Node& p) {
    std::string s;
    runs(p, s);
    s = text::trim(s);
    if (s.empty()) return;
    std::string style;
    bool list = false;
    if (const xml::Node* ppr = p.child("pPr")) {
      if (const xml::Node* ps = ppr->child("pStyle")) style = text::to_lower(ps->attr_local("val"));
      list = ppr->child("numPr") != nullptr;
    }
    int level = 0;
    if (style == "title") level = 1;
    else if (style.starts_with("heading") && style.size() > 7 && std::isdigit(static_cast<unsigned char>(style[7])))
      level = std::min(6, style[7] - '0');
    if (level > 0) blocks.push_back(std::string(static_cast<std::size_t>(level), '#') + " " + one_line(s));
    else if (list || style.starts_with("list")) blocks.push_back("- " + one_line(s));
    else blocks.push_back(s);
  }

  void table(const xml::Node& tbl) {
    std::vector<std::vector<std::string>> rows;
    for (const xml::Node* tr : tbl.children_named("tr")) {
      std::vector<std::string> row;
      for (const xml::Node* tc : tr->children_named("tc")) {
        std::vector<std::string> parts;
        for (const xml::Node* p : tc->children_named("p")) {
          std::string s;
          runs(*p, s);
          s = one_line(s);
          if (!s.empty()) parts.push_back(s);
        }
        row.push_back(text::join(parts, " "));
        if (const xml::Node* pr = tc->child("tcPr")) {
          if (const xml::Node* span = pr->child("gridSpan")) {
            int n = std::atoi(span->attr_local("val").c_str());
            for (int k = 1; k < n && k < 64; ++k) row.emplace_back();
          }
        }
      }
      rows.push_back(std::move(row));
    }
    std::string t = pipe_table(rows);
    if (!t.empty()) blocks.push_back(t);
  }
};

std::string join_blocks(const std::vector<std::string>& blocks) {
  std::string out;
  for (const auto& b : blocks) {
    if (!out.empty()) out += "\n";
    out += b;
    if (out.back() != '\n') out += '\n';
  }
  return out;
}

}  // namespace

Converted docx_to_markdown(std::string_view bytes) {
  ZipReader zip(bytes);
  auto doc = parse_part(zip, "word/document.xml");
  const xml::Node* body = doc->child("body");
  if (!body) throw ConversionError("document has no body");
  DocxRenderer r;
  r.body(*body);
  Converted out;
  out.markdown = join_blocks(r.blocks);
  out.notes.push_back("character formatting, headers, footers and comments are not rendered");
  return out;
}

namespace {

// ---- slide deck ----

std::string drawing_paragraphs(const xml::Node& tx_body) {
  std::vector<std::string> lines;
  for (const xml::Node* p : tx_body.children_named("p")) {
    std::string s;
    for (const auto& c : p->children) {
      if (c->is_text()) continue;
      if (c->local() == "r" || c->local() == "fld") {
        if (const xml::Node* t = c->child("t")) s += t->inner_text();
      } else if (c->local() == "br") {
        s += '\n';
      }
    }
    s = text::trim(s);
    if (!s.empty()) lines.push_back(s);
  }
  return text::join(lines, "\n");
}

class SlideRenderer {
 public:
  std::string title;
  std::vector<std::string> blocks;
  int* images;

  explicit SlideRenderer(int* image_counter) : images(image_counter) {}

  void tree(const xml::Node& n) {
    for (const auto& c : n.children) {
      if (c->is_text()) continue;
      std::string_view tag = c->local();
      if (tag == "sp") shape(*c);
      else if (tag == "grpSp") tree(*c);
      else if (tag == "pic") picture(*c);
      else if (tag == "graphicFrame") frame(*c);
    }
  }

 private:
  static const xml::Node* nv_props(const xml::Node& n) {
    for (const auto& c : n.children) {
      if (!c->is_text() && c->local().starts_with("nv")) return c->child("cNvPr");
    }
    return nullptr;
  }

  void shape(const xml::Node& sp) {
    bool is_title = false;
    for (const auto& c : sp.children) {
      if (c->is_text() || !c->local().starts_with("nv")) continue;
      if (const xml::Node* nvpr = c->child("nvPr")) {
        if (const xml::Node* ph = nvpr->child("ph")) {
          std::string type = ph->attr("type");
          is_title = type == "title" || type == "ctrTitle";
        }
      }
    }
    const xml::Node* body = sp.child("txBody");
    if (!body) return;
    std::string s = drawing_paragraphs(*body);
    if (s.empty()) return;
    if (is_title && title.empty()) {
      title = one_line(s);
    } else {
      blocks.push_back(s);
    }
  }

  void picture(const xml::Node& pic) {
    ++*images;
    const xml::Node* props = nv_props(pic);
    std::string alt = props ? text::trim(props->attr("descr")) : "";
    blocks.push_back("[image: " + (alt.empty() ? std::to_string(*images) : alt) + "]");
  }

  void frame(const xml::Node& f) {
    std::vector<const xml::Node*> tables;
    f.find_all("tbl", tables);
    for (const xml::Node* tbl : tables) {
      std::vector<std::vector<std::string>> rows;
      for (const xml::Node* tr : tbl->children_named("tr")) {
        std::vector<std::string> row;
        for (const xml::Node* tc : tr->children_named("tc")) {
          const xml::Node* body = tc->child("txBody");
          row.push_back(body ? one_line(drawing_paragraphs(*body)) : "");
        }
        rows.push_back(std::move(row));
      }
      std::string t = pipe_table(rows);
      if (!t.empty()) blocks.push_back(t);
    }
    std::vector<const xml::Node*> charts;
    f.find_all("chart", charts);
    if (!charts.empty()) blocks.push_back("[chart]");
  }
};

}  // namespace

Converted pptx_to_markdown(std::string_view bytes) {
  ZipReader zip(bytes);
  const std::string pres_name = "ppt/presentation.xml";
  auto pres = parse_part(zip, pres_name);
  auto rels = relationships(zip, pres_name);
  std::vector<std::string> slides;
  if (const xml::Node* list = pres->child("sldIdLst")) {
    for (const xml::Node* id : list->children_named("sldId")) {
      auto it = rels.find(rel_id(*id));
      if (it != rels.end()) slides.push_back(it->second);
    }
  }
  Converted out;
  int images = 0;
  for (std::size_t i = 0; i < slides.size(); ++i) {
    auto slide = parse_part(zip, slides[i]);
    SlideRenderer r(&images);
    std::vector<const xml::Node*> trees;
    slide->find_all("spTree", trees);
    if (!trees.empty()) r.tree(*trees[0]);
    if (!out.markdown.empty()) out.markdown += "\n";
    out.markdown += "## Slide " + std::to_string(i + 1) + (r.title.empty() ? "" : ": " + r.title) + "\n";
    if (!r.blocks.empty()) out.markdown += "\n" + join_blocks(r.blocks);

    auto slide_rels = relationships(zip, slides[i]);
    for (const auto& [id, target] : slide_rels) {
      if (target.find("notesSlide") == std::string::npos) continue;
      if (auto notes = zip.try_read(target)) {
        auto root = xml::parse(*notes);
        std::vector<std::string> parts;
        for (const xml::Node* body : root->find_all("txBody")) {
          std::string s = drawing_paragraphs(*body);
          if (!s.empty() && !std::all_of(s.begin(), s.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }))
            parts.push_back(s);
        }
        if (!parts.empty()) out.markdown += "\nNotes: " + text::join(parts, "\n") + "\n";
      }
    }
  }
  if (slides.empty()) out.markdown = "(no slides)\n";
  out.notes.push_back("slide layout, animations and embedded media are not rendered");
  return out;
}

namespace {

// ---- archives ----

Converted zip_listing(std::string_view bytes, const ConvertContext&) {
  ZipReader zip(bytes);
  std::vector<std::vector<std::string>> rows{{"name", "size (bytes)"}};
  Converted out;
  for (const auto& e : zip.entries()) {
    if (rows.size() > kMaxListing) {
      out.notes.push_back("listing truncated to " + std::to_string(kMaxListing) + " entries");
      break;
    }
    rows.push_back({e.name, std::to_string(e.size)});
  }
  out.markdown = "## Archive contents (" + std::to_string(zip.entries().size()) + " entries)\n\n" + pipe_table(rows);
  out.notes.push_back("archive members are listed, not extracted; unpack with shell tools to read them");
  return out;
}

bool looks_like_tar(std::string_view bytes) {
  return bytes.size() >= 512 && (bytes.substr(257, 5) == "ustar");
}

std::uint64_t tar_octal(std::string_view field) {
  std::uint64_t v = 0;
  for (char c : field) {
    if (c >= '0' && c <= '7') v = v * 8 + static_cast<std::uint64_t>(c - '0');
    else if (c == '\0' || c == ' ') {
      if (v) break;
    }
  }
  return v;
}

std::string c_field(std::string_view field) {
  auto nul = field.find('\0');
  return std::string(field.substr(0, nul));
}

Converted tar_listing_bytes(std::string_view bytes) {
  std::vector<std::vector<std::string>> rows{{"name", "size (bytes)"}};
  Converted out;
  std::size_t count = 0;
  std::string long_name;
  for (std::size_t off = 0; off + 512 <= bytes.size();) {
    std::string_view h = bytes.substr(off, 512);
    if (h.find_first_not_of('\0') == std::string_view::npos) break;
    std::uint64_t size = tar_octal(h.substr(124, 12));
    char type = h[156];
    std::string name = c_field(h.substr(0, 100));
    std::string prefix = c_field(h.substr(345, 155));
    if (!prefix.empty()) name = prefix + "/" + name;
    std::size_t data_off = off + 512;
    if (type == 'L') {
      long_name = c_field(bytes.substr(data_off, std::min<std::uint64_t>(size, bytes.size() - data_off)));
    } else if (type != 'x' && type != 'g') {
      if (!long_name.empty()) {
        name = long_name;
        long_name.clear();
      }
      ++count;
      if (rows.size() <= kMaxListing) rows.push_back({name, type == '5' ? "(dir)" : std::to_string(size)});
    }
    off = data_off + static_cast<std::size_t>((size + 511) / 512 * 512);
  }
  if (count + 1 > rows.size()) out.notes.push_back("listing truncated to " + std::to_string(kMaxListing) + " entries");
  out.markdown = "## Archive contents (" + std::to_string(count) + " entries)\n\n" + pipe_table(rows);
  out.notes.push_back("archive members are listed, not extracted; unpack with shell tools to read them");
  return out;
}

Converted tar_listing(std::string_view bytes, const ConvertContext&) {
  if (starts(bytes, "\x1f\x8b")) {
    std::string raw = gunzip_bytes(bytes, std::size_t{512} << 20);
    if (!looks_like_tar(raw)) throw ConversionError("gzip file does not contain a tar archive");
    return tar_listing_bytes(raw);
  }
  return tar_listing_bytes(bytes);
}

Converted gzip_info(std::string_view bytes, const ConvertContext& ctx) {
  std::string raw = gunzip_bytes(bytes, std::size_t{512} << 20);
  if (looks_like_tar(raw)) return tar_listing_bytes(raw);
  Converted out;
  out.markdown = "gzip-compressed file, " + std::to_string(raw.size()) + " bytes uncompressed\n";
  out.notes.push_back("decompress " + ctx.path + " with shell tools (gunzip -c) to inspect its contents");
  return out;
}

// ---- images ----

struct ImageInfo {
  std::string format;
  int width = 0;
  int height = 0;
};

std::uint32_t be32(std::string_view b, std::size_t at) {
  return static_cast<std::uint32_t>(static_cast<unsigned char>(b[at])) << 24 |
         static_cast<std::uint32_t>(static_cast<unsigned char>(b[at + 1])) << 16 |
         static_cast<std::uint32_t>(static_cast<unsigned char>(b[at + 2])) << 8 |
         static_cast<std::uint32_t>(static_cast<unsigned char>(b[at + 3]));
}

std::uint16_t be16(std::string_view b, std::size_t at) {
  return static_cast<std::uint16_t>(static_cast<unsigned char>(b[at]) << 8 | static_cast<unsigned char>(b[at + 1]));
}

std::uint16_t le16(std::string_view b, std::size_t at) {
  return static_cast<std::uint16_t>(static_cast<unsigned char>(b[at + 1]) << 8 | static_cast<unsigned char>(b[at]));
}

ImageInfo image_info(std::string_view b) {
  ImageInfo info;
  if (starts(b, "\x89PNG\r\n\x1a\n") && b.size() >= 24) {
    info = {"PNG", static_cast<int>(be32(b, 16)), static_cast<int>(be32(b, 20))};
  } else if (starts(b, "\xFF\xD8\xFF")) {
    info.format = "JPEG";
    std::size_t p = 2;
    while (p + 9 < b.size()) {
      if (static_cast<unsigned char>(b[p]) != 0xFF) {
        ++p;
        continue;
      }
      unsigned char marker = static_cast<unsigned char>(b[p + 1]);
      if (marker == 0xD8 || marker == 0x01 || (marker >= 0xD0 && marker <= 0xD7) || marker == 0xFF) {
        ++p;
        continue;
      }
      std::uint16_t len = be16(b, p + 2);
      if (marker >= 0xC0 && marker <= 0xCF && marker != 0xC4 && marker != 0xC8 && marker != 0xCC) {
        info.height = be16(b, p + 5);
        info.width = be16(b, p + 7);
        break;
      }
      p += 2 + len;
    }
  } else if (starts(b, "GIF8") && b.size() >= 10) {
    info = {"GIF", le16(b, 6), le16(b, 8)};
  } else if (starts(b, "BM") && b.size() >= 26) {
    info = {"BMP", static_cast<int>(le16(b, 18)), static_cast<int>(le16(b, 22))};
  } else if (starts(b, "RIFF") && b.size() >= 30 && b.substr(8, 4) == "WEBP") {
    info.format = "WEBP";
    if (b.substr(12, 4) == "VP8X") {
      auto le24 = [&](std::size_t at) {
        return static_cast<int>(static_cast<unsigned char>(b[at]) | static_cast<unsigned char>(b[at + 1]) << 8 |
                                static_cast<unsigned char>(b[at + 2]) << 16);
      };
      info.width = le24(24) + 1;
      info.height = le24(27) + 1;
    } else if (b.substr(12, 4) == "VP8 ") {
      info.width = le16(b, 26) & 0x3fff;
      info.height = le16(b, 28) & 0x3fff;
    }
  }
  return info;
}

bool sniff_image(std::string_view b) {
  return starts(b, "\x89PNG\r\n\x1a\n") || starts(b, "\xFF\xD8\xFF") || starts(b, "GIF8") ||
         (starts(b, "RIFF") && b.substr(8, 4) == "WEBP") || starts(b, "BM");
}

Converted image_convert(std::string_view bytes, const ConvertContext& ctx) {
  ImageInfo info = image_info(bytes);
  if (info.format.empty()) throw ConversionError("unrecognized image data");
  Converted out;
  std::string name = std::filesystem::path(ctx.path).filename().string();
  out.markdown = "# " + name + "\n\n" + info.format + " image";
  if (info.width > 0 && info.height > 0) {
    out.markdown += ", " + std::to_string(info.width) + "x" + std::to_string(info.height) + " pixels";
  }
  out.markdown += ", " + std::to_string(bytes.size()) + " bytes\n";
  if (info.format == "PNG" || info.format == "JPEG") {
    out.image = events::Image{info.format == "PNG" ? "image/png" : "image/jpeg", to_bytes(bytes)};
  } else {
    out.notes.push_back(info.format + " pixels are not attached; convert to PNG with shell tools to view them");
  }
  return out;
}

// ---- audio / video ----

std::mutex g_audio_mu;
std::optional<std::vector<std::string>> g_audio_cmd;

std::vector<std::string> audio_command() {
  std::lock_guard lock(g_audio_mu);
  if (!g_audio_cmd) {
    g_audio_cmd.emplace();
    if (const char* env = std::getenv("VERSA_AUDIO_TRANSCRIBER"); env && *env) {
      std::string cur;
      for (const char* p = env;; ++p) {
        if (*p == '\0' || *p == ' ') {
          if (!cur.empty()) g_audio_cmd->push_back(cur);
          cur.clear();
          if (*p == '\0') break;
        } else {
          cur += *p;
        }
      }
    }
  }
  return *g_audio_cmd;
}

std::string run_capture(std::vector<std::string> argv) {
  int fds[2];
  if (pipe(fds) != 0) throw ConversionError("transcriber: pipe failed");
  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_adddup2(&actions, fds[1], STDOUT_FILENO);
  posix_spawn_file_actions_addclose(&actions, fds[0]);
  posix_spawn_file_actions_addopen(&actions, STDIN_FILENO, "/dev/null", O_RDONLY, 0);
  std::vector<char*> args;
  for (auto& a : argv) args.push_back(a.data());
  args.push_back(nullptr);
  pid_t pid = 0;
  int rc = posix_spawnp(&pid, args[0], &actions, nullptr, args.data(), environ);
  posix_spawn_file_actions_destroy(&actions);
  close(fds[1]);
  if (rc != 0) {
    close(fds[0]);
    throw ConversionError("transcriber could not be started: " + std::string(std::strerror(rc)));
  }
  std::string out;
  std::array<char, 4096> buf{};
  for (;;) {
    ssize_t n = read(fds[0], buf.data(), buf.size());
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) break;
    out.append(buf.data(), static_cast<std::size_t>(n));
  }
  close(fds[0]);
  int status = 0;
  while (waitpid(pid, &status, 0) < 0 && errno == EINTR) {
  }
  if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) throw ConversionError("transcriber failed");
  return out;
}

Converted audio_convert(std::string_view, const ConvertContext& ctx) {
  auto cmd = audio_command();
  if (cmd.empty()) {
    throw ConversionError("audio transcription is not enabled; set VERSA_AUDIO_TRANSCRIBER to a transcription command");
  }
  cmd.push_back(ctx.path);
  Converted out;
  out.markdown = "## Transcript\n\n" + text::trim(text::clean_text(run_capture(cmd))) + "\n";
  out.notes.push_back("audio transcribed by an external model; the transcript may contain recognition errors");
  return out;
}

Converted video_convert(std::string_view, const ConvertContext& ctx) {
  throw ConversionError("video files are not supported by the viewer; inspect " + ctx.path +
                        " with shell tools (for example ffprobe)");
}

bool sniff_html(std::string_view b) {
  std::string head = text::to_lower(skip_bom_ws(b).substr(0, 64));
  return head.starts_with("<!doctype html") || head.starts_with("<html");
}

const std::vector<Converter>& table() {
  static const std::vector<Converter> kTable = {
      {"pdf", "application/pdf", {".pdf"}, [](std::string_view b) { return starts(b, "%PDF-"); },
       [](std::string_view b, const ConvertContext&) { return pdf_to_markdown(b); }},
      {"xlsx", "application/vnd.openxmlformats-officedocument.spreadsheetml.sheet", {".xlsx", ".xlsm"},
       [](std::string_view b) { return zip_has(b, "xl/workbook.xml"); },
       [](std::string_view b, const ConvertContext&) { return xlsx_to_markdown(b); }},
      {"docx", "application/vnd.openxmlformats-officedocument.wordprocessingml.document", {".docx"},
       [](std::string_view b) { return zip_has(b, "word/document.xml"); },
       [](std::string_view b, const ConvertContext&) { return docx_to_markdown(b); }},
      {"pptx", "application/vnd.openxmlformats-officedocument.presentationml.presentation", {".pptx"},
       [](std::string_view b) { return zip_has(b, "ppt/presentation.xml"); },
       [](std::string_view b, const ConvertContext&) { return pptx_to_markdown(b); }},
      {"html", "text/html", {".html", ".htm", ".xhtml"}, sniff_html,
       [](std::string_view b, const ConvertContext&) { return html_to_markdown(b); }},
      {"zip", "application/zip", {".zip", ".jar"}, [](std::string_view b) { return looks_like_zip(b); }, zip_listing},
      {"tar", "application/x-tar", {".tar", ".tgz", ".tar.gz"}, looks_like_tar, tar_listing},
      {"gzip", "application/gzip", {".gz"}, [](std::string_view b) { return starts(b, "\x1f\x8b"); }, gzip_info},
      {"image", "image/*", {".png", ".jpg", ".jpeg", ".gif", ".webp", ".bmp"}, sniff_image, image_convert},
      {"audio", "audio/*", {".mp3", ".wav", ".m4a", ".flac", ".ogg", ".oga", ".aac"},
       [](std::string_view b) {
         return starts(b, "ID3") || (starts(b, "RIFF") && b.substr(8, 4) == "WAVE") || starts(b, "fLaC") ||
                starts(b, "OggS");
       },
       audio_convert},
      {"video", "video/*", {".mp4", ".mov", ".avi", ".mkv", ".webm", ".m4v"},
       [](std::string_view b) { return b.size() > 12 && b.substr(4, 4) == "ftyp"; }, video_convert},
  };
  return kTable;
}

constexpr std::string_view kPlaintext[] = {
    ".txt",  ".md",   ".markdown", ".rst",  ".csv",  ".tsv",  ".json", ".jsonl", ".yaml", ".yml",  ".toml",
    ".ini",  ".cfg",  ".conf",     ".log",  ".xml",  ".svg",  ".py",   ".js",    ".ts",   ".tsx",  ".jsx",
    ".c",    ".h",    ".cc",       ".cpp",  ".hpp",  ".cxx",  ".java", ".go",    ".rs",   ".rb",   ".php",
    ".sh",   ".bash", ".zsh",      ".sql",  ".css",  ".scss", ".tex",  ".bib",   ".r",    ".m",    ".swift",
    ".kt",   ".lua",  ".pl",       ".diff", ".patch", ".env", ".cmake", ".mk",   ".ipynb", ".dockerfile", ".gitignore"};

std::size_t count_lines(std::string_view s) {
  if (s.empty()) return 0;
  std::size_t n = static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
  return s.back() == '\n' ? n : n + 1;
}

}  // namespace

std::span<const Converter> converters() { return table(); }

std::span<const std::string_view> plaintext_extensions() { return kPlaintext; }

const Converter* detect_converter(std::string_view path, std::string_view bytes) {
  std::string ext = extension_of(path);
  if (std::find(std::begin(kPlaintext), std::end(kPlaintext), ext) != std::end(kPlaintext)) return nullptr;
  if (!ext.empty()) {
    for (const auto& c : table()) {
      if (std::find(c.extensions.begin(), c.extensions.end(), ext) != c.extensions.end()) return &c;
    }
  }
  // Plain text wins over sniffing except for explicit HTML documents.
  bool texty = bytes.find('\0') == std::string_view::npos && text::is_valid_utf8(bytes);
  for (const auto& c : table()) {
    if (texty && c.name != "html") continue;
    if (c.sniff && c.sniff(bytes)) return &c;
  }
  return nullptr;
}

void set_audio_transcriber(std::vector<std::string> command) {
  std::lock_guard lock(g_audio_mu);
  g_audio_cmd = std::move(command);
}

events::FileView view_file_bytes(std::string path, std::string_view bytes) {
  events::FileView view;
  view.path = path;
  const Converter* conv = detect_converter(path, bytes);
  if (!conv) {
    std::string ext = extension_of(path);
    bool listed = std::find(std::begin(kPlaintext), std::end(kPlaintext), ext) != std::end(kPlaintext);
    bool has_nul = bytes.find('\0') != std::string_view::npos;
    if (has_nul || (!listed && !text::is_valid_utf8(bytes))) {
      throw ConversionError(path + " is a binary file of unrecognized type; inspect it with shell tools "
                                   "(file, xxd, strings) instead");
    }
    if (text::is_valid_utf8(bytes)) {
      view.text = std::string(bytes);
    } else {
      view.text = text::sanitize_utf8(bytes);
      view.conversion_notes.push_back("invalid UTF-8 sequences replaced with U+FFFD");
    }
    view.kind = events::FileKind::plaintext;
    view.line_count = count_lines(view.text);
    return view;
  }
  Converted c;
  try {
    c = conv->convert(bytes, ConvertContext{path});
  } catch (const ConversionError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConversionError("could not convert " + path + " as " + std::string(conv->name) + ": " + e.what());
  }
  view.kind = events::FileKind::converted_markdown;
  view.text = text::clean_text(c.markdown);
  view.line_count = count_lines(view.text);
  view.source_mime = std::string(conv->mime);
  if (c.image) view.source_mime = c.image->mime;
  view.conversion_notes = std::move(c.notes);
  view.image = std::move(c.image);
  return view;
}

}  // namespace versa::tools
