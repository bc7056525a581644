// PDF text extraction: enough of the object model, filters and content
// stream operators to recover reading-order text from typical producers.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <map>
#include <memory>
#include <optional>
#include <set>

#include "versa/core/text.hpp"
#include "versa/tools/convert.hpp"
#include "versa/tools/xml.hpp"
#include "versa/tools/zip.hpp"

namespace versa::tools {

namespace {

struct Obj {
  enum class Kind { null, boolean, number, string, name, array, dict, ref, keyword };
  Kind kind = Kind::null;
  bool b = false;
  double num = 0;
  std::string str;  // string bytes, name, or keyword
  std::vector<Obj> arr;
  std::vector<std::pair<std::string, Obj>> dict;
  int ref_num = 0;

  bool is(Kind k) const { return kind == k; }
  const Obj* get(std::string_view key) const {
    for (const auto& [k, v] : dict) {
      if (k == key) return &v;
    }
    return nullptr;
  }
  bool is_name(std::string_view n) const { return kind == Kind::name && str == n; }
};

const Obj kNull{};

class Lexer {
 public:
  Lexer(std::string_view d, std::size_t pos = 0) : d_(d), pos_(pos) {}

  std::size_t pos() const { return pos_; }
  void seek(std::size_t p) { pos_ = p; }
  bool eof() {
    skip_ws();
    return pos_ >= d_.size();
  }

  void skip_ws() {
    while (pos_ < d_.size()) {
      char c = d_[pos_];
      if (c == '%') {
        while (pos_ < d_.size() && d_[pos_] != '\n' && d_[pos_] != '\r') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c)) || c == '\0') {
        ++pos_;
      } else {
        break;
      }
    }
  }

  // Parses one object. Keywords (operators) come back as Kind::keyword.
  Obj next(int depth = 0) {
    if (depth > 64) throw ConversionError("PDF: nesting too deep");
    skip_ws();
    Obj o;
    if (pos_ >= d_.size()) return o;
    char c = d_[pos_];
    if (c == '/') {
      o.kind = Obj::Kind::name;
      o.str = name();
    } else if (c == '(') {
      o.kind = Obj::Kind::string;
      o.str = literal();
    } else if (c == '<' && pos_ + 1 < d_.size() && d_[pos_ + 1] == '<') {
      pos_ += 2;
      o.kind = Obj::Kind::dict;
      for (;;) {
        skip_ws();
        if (pos_ >= d_.size()) break;
        if (d_.compare(pos_, 2, ">>") == 0) {
          pos_ += 2;
          break;
        }
        Obj key = next(depth + 1);
        if (!key.is(Obj::Kind::name)) {
          if (key.is(Obj::Kind::null) && pos_ >= d_.size()) break;
          continue;
        }
        o.dict.emplace_back(key.str, next_value(depth + 1));
      }
    } else if (c == '<') {
      o.kind = Obj::Kind::string;
      o.str = hex_string();
    } else if (c == '[') {
      ++pos_;
      o.kind = Obj::Kind::array;
      for (;;) {
        skip_ws();
        if (pos_ >= d_.size()) break;
        if (d_[pos_] == ']') {
          ++pos_;
          break;
        }
        o.arr.push_back(next_value(depth + 1));
      }
    } else if (c == ']' || c == '>' || c == ')' || c == '{' || c == '}') {
      ++pos_;
      o.kind = Obj::Kind::keyword;
      o.str = std::string(1, c);
    } else if (std::isdigit(static_cast<unsigned char>(c)) || c == '-' || c == '+' || c == '.') {
      std::size_t start = pos_;
      ++pos_;
      while (pos_ < d_.size() && (std::isdigit(static_cast<unsigned char>(d_[pos_])) || d_[pos_] == '.')) ++pos_;
      o.kind = Obj::Kind::number;
      o.num = std::strtod(std::string(d_.substr(start, pos_ - start)).c_str(), nullptr);
    } else {
      std::size_t start = pos_;
      while (pos_ < d_.size() && !is_delim(d_[pos_]) && !std::isspace(static_cast<unsigned char>(d_[pos_]))) ++pos_;
      if (start == pos_) ++pos_;
      std::string word(d_.substr(start, pos_ - start));
      if (word == "true" || word == "false") {
        o.kind = Obj::Kind::boolean;
        o.b = word == "true";
      } else if (word == "null") {
        o.kind = Obj::Kind::null;
      } else {
        o.kind = Obj::Kind::keyword;
        o.str = std::move(word);
      }
    }
    return o;
  }

 private:
  std::string_view d_;
  std::size_t pos_;

  static bool is_delim(char c) {
    return c == '(' || c == ')' || c == '<' || c == '>' || c == '[' || c == ']' || c == '{' || c == '}' ||
           c == '/' || c == '%';
  }

  // A value inside a dict/array: numbers may be the start of "n g R".
 public:
  Obj next_value(int depth = 0) {
    Obj o = next(depth);
    if (!o.is(Obj::Kind::number)) return o;
    std::size_t save = pos_;
    Obj gen = next(depth);
    if (gen.is(Obj::Kind::number)) {
      Obj r = next(depth);
      if (r.is(Obj::Kind::keyword) && r.str == "R") {
        Obj ref;
        ref.kind = Obj::Kind::ref;
        ref.ref_num = static_cast<int>(o.num);
        return ref;
      }
    }
    pos_ = save;
    return o;
  }

 private:
  std::string name() {
    ++pos_;
    std::string out;
    while (pos_ < d_.size() && !is_delim(d_[pos_]) && !std::isspace(static_cast<unsigned char>(d_[pos_]))) {
      if (d_[pos_] == '#' && pos_ + 2 < d_.size() && std::isxdigit(static_cast<unsigned char>(d_[pos_ + 1])) &&
          std::isxdigit(static_cast<unsigned char>(d_[pos_ + 2]))) {
        out += static_cast<char>(std::stoi(std::string(d_.substr(pos_ + 1, 2)), nullptr, 16));
        pos_ += 3;
      } else {
        out += d_[pos_++];
      }
    }
    return out;
  }

  std::string literal() {
    ++pos_;
    std::string out;
    int depth = 1;
    while (pos_ < d_.size()) {
      char c = d_[pos_++];
      if (c == '\\' && pos_ < d_.size()) {
        char e = d_[pos_++];
        switch (e) {
          case 'n': out += '\n'; break;
          case 'r': out += '\r'; break;
          case 't': out += '\t'; break;
          case 'b': out += '\b'; break;
          case 'f': out += '\f'; break;
          case '\r':
            if (pos_ < d_.size() && d_[pos_] == '\n') ++pos_;
            break;
          case '\n': break;
          default:
            if (e >= '0' && e <= '7') {
              int v = e - '0';
              for (int k = 0; k < 2 && pos_ < d_.size() && d_[pos_] >= '0' && d_[pos_] <= '7'; ++k) {
                v = v * 8 + (d_[pos_++] - '0');
              }
              out += static_cast<char>(v & 0xff);
            } else {
              out += e;
            }
        }
      } else if (c == '(') {
        ++depth;
        out += c;
      } else if (c == ')') {
        if (--depth == 0) break;
        out += c;
      } else {
        out += c;
      }
    }
    return out;
  }

  std::string hex_string() {
    ++pos_;
    std::string digits;
    while (pos_ < d_.size() && d_[pos_] != '>') {
      if (std::isxdigit(static_cast<unsigned char>(d_[pos_]))) digits += d_[pos_];
      ++pos_;
    }
    ++pos_;
    if (digits.size() % 2) digits += '0';
    std::string out;
    for (std::size_t i = 0; i < digits.size(); i += 2) {
      out += static_cast<char>(std::stoi(digits.substr(i, 2), nullptr, 16));
    }
    return out;
  }
};

struct Stream {
  Obj dict;
  std::string_view raw;
};

std::string ascii85_decode(std::string_view in) {
  std::string out;
  std::uint32_t tuple = 0;
  int count = 0;
  for (std::size_t i = 0; i < in.size(); ++i) {
    char c = in[i];
    if (c == '~') break;
    if (std::isspace(static_cast<unsigned char>(c))) continue;
    if (c == 'z' && count == 0) {
      out.append(4, '\0');
      continue;
    }
    if (c < '!' || c > 'u') throw ConversionError("PDF: bad ASCII85 data");
    tuple = tuple * 85 + static_cast<std::uint32_t>(c - '!');
    if (++count == 5) {
      for (int k = 3; k >= 0; --k) out += static_cast<char>((tuple >> (8 * k)) & 0xff);
      tuple = 0;
      count = 0;
    }
  }
  if (count > 1) {
    for (int k = count; k < 5; ++k) tuple = tuple * 85 + 84;
    for (int k = 0; k < count - 1; ++k) out += static_cast<char>((tuple >> (8 * (3 - k))) & 0xff);
  }
  return out;
}

std::string ascii_hex_decode(std::string_view in) {
  std::string digits;
  for (char c : in) {
    if (c == '>') break;
    if (std::isxdigit(static_cast<unsigned char>(c))) digits += c;
  }
  if (digits.size() % 2) digits += '0';
  std::string out;
  for (std::size_t i = 0; i < digits.size(); i += 2) out += static_cast<char>(std::stoi(digits.substr(i, 2), nullptr, 16));
  return out;
}

// Undoes PNG row predictors (Predictor >= 10), used by some producers.
std::string unpredict(const std::string& data, const Obj* parms) {
  if (!parms || !parms->is(Obj::Kind::dict)) return data;
  const Obj* pred = parms->get("Predictor");
  if (!pred || pred->num < 10) return data;
  const Obj* col = parms->get("Columns");
  const std::size_t columns = col ? static_cast<std::size_t>(col->num) : 1;
  std::string out;
  std::string prev(columns, '\0');
  for (std::size_t at = 0; at + columns + 1 <= data.size(); at += columns + 1) {
    const unsigned char type = static_cast<unsigned char>(data[at]);
    std::string row = data.substr(at + 1, columns);
    for (std::size_t i = 0; i < columns; ++i) {
      unsigned char left = i ? static_cast<unsigned char>(row[i - 1]) : 0;
      unsigned char up = static_cast<unsigned char>(prev[i]);
      unsigned char ul = i ? static_cast<unsigned char>(prev[i - 1]) : 0;
      unsigned char x = static_cast<unsigned char>(row[i]);
      switch (type) {
        case 1: x = static_cast<unsigned char>(x + left); break;
        case 2: x = static_cast<unsigned char>(x + up); break;
        case 3: x = static_cast<unsigned char>(x + (left + up) / 2); break;
        case 4: {
          int p = left + up - ul;
          int pa = std::abs(p - left), pb = std::abs(p - up), pc = std::abs(p - ul);
          x = static_cast<unsigned char>(x + ((pa <= pb && pa <= pc) ? left : (pb <= pc ? up : ul)));
          break;
        }
        default: break;
      }
      row[i] = static_cast<char>(x);
    }
    out += row;
    prev = row;
  }
  return out;
}

class Document {
 public:
  explicit Document(std::string_view data) : d_(data) {
    if (d_.substr(0, 1024).find("%PDF-") == std::string_view::npos) throw ConversionError("not a PDF file");
    scan_objects();
    expand_object_streams();
    if (objects_.empty()) throw ConversionError("PDF: no objects found (file may be damaged)");
  }

  bool encrypted() const { return d_.find("/Encrypt") != std::string_view::npos; }

  const Obj& resolve(const Obj& o, int depth = 0) const {
    if (!o.is(Obj::Kind::ref) || depth > 32) return o;
    auto it = objects_.find(o.ref_num);
    if (it == objects_.end()) return kNull;
    return resolve(it->second, depth + 1);
  }

  const Obj* lookup(const Obj& dict, std::string_view key) const {
    const Obj& d = resolve(dict);
    const Obj* v = d.get(key);
    return v ? &resolve(*v) : nullptr;
  }

  std::optional<std::string> stream_data(const Obj& o) const {
    int num = o.is(Obj::Kind::ref) ? o.ref_num : -1;
    auto it = streams_.find(num);
    if (it == streams_.end()) return std::nullopt;
    return decode(it->second);
  }

  const Obj* stream_dict(const Obj& o) const {
    if (!o.is(Obj::Kind::ref)) return nullptr;
    auto it = streams_.find(o.ref_num);
    return it == streams_.end() ? nullptr : &it->second.dict;
  }

  std::string decode(const Stream& s) const {
    std::string data(s.raw);
    const Obj* filter = lookup(s.dict, "Filter");
    const Obj* parms = lookup(s.dict, "DecodeParms");
    std::vector<std::string> filters;
    if (filter && filter->is(Obj::Kind::name)) filters.push_back(filter->str);
    if (filter && filter->is(Obj::Kind::array)) {
      for (const auto& f : filter->arr) filters.push_back(resolve(f).str);
    }
    for (std::size_t i = 0; i < filters.size(); ++i) {
      const std::string& f = filters[i];
      const Obj* p = parms && parms->is(Obj::Kind::array) && i < parms->arr.size() ? &resolve(parms->arr[i]) : parms;
      if (f == "FlateDecode" || f == "Fl") {
        data = unpredict(inflate_bytes(data, false, std::size_t{256} << 20), p);
      } else if (f == "ASCII85Decode" || f == "A85") {
        data = ascii85_decode(data);
      } else if (f == "ASCIIHexDecode" || f == "AHx") {
        data = ascii_hex_decode(data);
      } else {
        throw ConversionError("PDF: unsupported stream filter " + f);
      }
    }
    return data;
  }

  std::vector<const Obj*> pages() const {
    std::vector<const Obj*> out;
    for (const auto& [num, o] : objects_) {
      if (o.is(Obj::Kind::dict) && o.get("Type") && o.get("Type")->is_name("Catalog")) {
        if (const Obj* root = lookup(o, "Pages")) collect_pages(*root, out, 0);
        if (!out.empty()) return out;
      }
    }
    for (const auto& [num, o] : objects_) {
      if (o.is(Obj::Kind::dict) && o.get("Type") && o.get("Type")->is_name("Page")) out.push_back(&o);
    }
    return out;
  }

  // Looks up an inheritable page attribute, walking /Parent links.
  const Obj* inherited(const Obj& page, std::string_view key) const {
    const Obj* node = &page;
    for (int i = 0; node && i < 32; ++i) {
      if (const Obj* v = lookup(*node, key)) return v;
      node = lookup(*node, "Parent");
    }
    return nullptr;
  }

 private:
  std::string_view d_;
  std::map<int, Obj> objects_;
  std::map<int, Stream> streams_;

  void collect_pages(const Obj& node, std::vector<const Obj*>& out, int depth) const {
    if (depth > 64 || !node.is(Obj::Kind::dict)) return;
    const Obj* type = node.get("Type");
    if (type && type->is_name("Page")) {
      out.push_back(&node);
      return;
    }
    if (const Obj* kids = lookup(node, "Kids")) {
      for (const auto& k : kids->arr) collect_pages(resolve(k), out, depth + 1);
    }
  }

  void scan_objects() {
    for (std::size_t at = d_.find(" obj"); at != std::string_view::npos; at = d_.find(" obj", at + 4)) {
      // Expect "<num> <gen> obj" immediately before.
      std::size_t p = at;
      auto back_digits = [&](std::size_t& q) {
        std::size_t end = q;
        while (q > 0 && std::isdigit(static_cast<unsigned char>(d_[q - 1]))) --q;
        return q < end;
      };
      if (!back_digits(p)) continue;
      if (p == 0 || !std::isspace(static_cast<unsigned char>(d_[p - 1]))) continue;
      --p;
      while (p > 0 && std::isspace(static_cast<unsigned char>(d_[p - 1]))) --p;
      std::size_t num_end = p;
      if (!back_digits(p)) continue;
      if (p > 0 && !std::isspace(static_cast<unsigned char>(d_[p - 1]))) continue;
      int num = std::atoi(std::string(d_.substr(p, num_end - p)).c_str());
      Lexer lex(d_, at + 4);
      Obj value;
      try {
        value = lex.next_value();
      } catch (const ConversionError&) {
        continue;
      }
      std::size_t after = lex.pos();
      Lexer peek(d_, after);
      peek.skip_ws();
      std::size_t kw = peek.pos();
      if (value.is(Obj::Kind::dict) && d_.compare(kw, 6, "stream") == 0) {
        std::size_t start = kw + 6;
        if (start < d_.size() && d_[start] == '\r') ++start;
        if (start < d_.size() && d_[start] == '\n') ++start;
        std::size_t end = std::string_view::npos;
        if (const Obj* len = value.get("Length"); len && len->is(Obj::Kind::number)) {
          std::size_t n = static_cast<std::size_t>(len->num);
          if (start + n <= d_.size()) {
            std::size_t probe = d_.find("endstream", start + n);
            if (probe != std::string_view::npos && probe - (start + n) <= 4) end = start + n;
          }
        }
        if (end == std::string_view::npos) {
          std::size_t probe = d_.find("endstream", start);
          if (probe == std::string_view::npos) continue;
          end = probe;
          while (end > start && (d_[end - 1] == '\n' || d_[end - 1] == '\r')) --end;
        }
        streams_[num] = Stream{value, d_.substr(start, end - start)};
        at = end;
      }
      objects_[num] = std::move(value);
    }
  }

  void expand_object_streams() {
    std::vector<int> containers;
    for (const auto& [num, s] : streams_) {
      const Obj* type = s.dict.get("Type");
      if (type && type->is_name("ObjStm")) containers.push_back(num);
    }
    for (int num : containers) {
      const Stream& s = streams_.at(num);
      std::string data;
      try {
        data = decode(s);
      } catch (const std::exception&) {
        continue;
      }
      const Obj* n = s.dict.get("N");
      const Obj* first = s.dict.get("First");
      if (!n || !first) continue;
      Lexer header(data);
      std::vector<std::pair<int, std::size_t>> entries;
      for (int i = 0; i < static_cast<int>(n->num); ++i) {
        Obj id = header.next(), off = header.next();
        if (!id.is(Obj::Kind::number) || !off.is(Obj::Kind::number)) break;
        entries.emplace_back(static_cast<int>(id.num), static_cast<std::size_t>(first->num + off.num));
      }
      for (const auto& [id, off] : entries) {
        if (off >= data.size() || objects_.count(id)) continue;
        Lexer lex(data, off);
        try {
          Obj value = lex.next_value();
          // Decoded data is owned locally; keep only objects, which are self-contained.
          objects_[id] = std::move(value);
        } catch (const ConversionError&) {
        }
      }
    }
  }
};

// Text decoding for one font: a ToUnicode map if present, else WinAnsi-ish.
struct Font {
  int code_bytes = 1;
  std::map<std::uint32_t, std::string> to_unicode;
};

std::string utf16be_to_utf8(std::string_view b) {
  std::string out;
  for (std::size_t i = 0; i + 1 < b.size(); i += 2) {
    char32_t u = static_cast<char32_t>(static_cast<unsigned char>(b[i]) << 8 | static_cast<unsigned char>(b[i + 1]));
    if (u >= 0xD800 && u <= 0xDBFF && i + 3 < b.size()) {
      char32_t lo = static_cast<char32_t>(static_cast<unsigned char>(b[i + 2]) << 8 | static_cast<unsigned char>(b[i + 3]));
      if (lo >= 0xDC00 && lo <= 0xDFFF) {
        u = 0x10000 + ((u - 0xD800) << 10) + (lo - 0xDC00);
        i += 2;
      }
    }
    xml::append_utf8(out, u);
  }
  return out;
}

std::uint32_t code_of(std::string_view bytes) {
  std::uint32_t v = 0;
  for (char c : bytes) v = v << 8 | static_cast<unsigned char>(c);
  return v;
}

void parse_cmap(std::string_view data, Font& font) {
  Lexer lex(data);
  std::vector<Obj> operands;
  while (!lex.eof()) {
    Obj o = lex.next();
    if (!o.is(Obj::Kind::keyword)) {
      operands.push_back(std::move(o));
      continue;
    }
    if (o.str == "endcodespacerange" && operands.size() >= 2) {
      font.code_bytes = static_cast<int>(std::max<std::size_t>(1, operands[0].str.size()));
    } else if (o.str == "endbfchar") {
      for (std::size_t i = 0; i + 1 < operands.size(); i += 2) {
        font.to_unicode[code_of(operands[i].str)] = utf16be_to_utf8(operands[i + 1].str);
      }
    } else if (o.str == "endbfrange") {
      for (std::size_t i = 0; i + 2 < operands.size(); i += 3) {
        std::uint32_t lo = code_of(operands[i].str), hi = code_of(operands[i + 1].str);
        if (hi < lo || hi - lo > 65535) continue;
        const Obj& dst = operands[i + 2];
        for (std::uint32_t c = lo; c <= hi; ++c) {
          if (dst.is(Obj::Kind::array)) {
            if (c - lo < dst.arr.size()) font.to_unicode[c] = utf16be_to_utf8(dst.arr[c - lo].str);
          } else {
            std::string base = dst.str;
            if (base.empty()) continue;
            // Increment the last UTF-16 unit.
            std::uint32_t last = static_cast<unsigned char>(base[base.size() - 1]) + (c - lo);
            std::string unit = base;
            if (unit.size() >= 2) {
              std::uint32_t v = (static_cast<unsigned char>(unit[unit.size() - 2]) << 8) + last;
              unit[unit.size() - 2] = static_cast<char>((v >> 8) & 0xff);
              unit[unit.size() - 1] = static_cast<char>(v & 0xff);
            }
            font.to_unicode[c] = utf16be_to_utf8(unit);
          }
        }
      }
    }
    if (o.str.starts_with("begin") || o.str.starts_with("end") || o.str == "def" || o.str == "findresource" ||
        o.str == "defineresource" || o.str == "pop") {
      operands.clear();
    }
  }
}

// WinAnsiEncoding differs from Latin-1 in 0x80..0x9F.
char32_t win_ansi(unsigned char c) {
  static constexpr char32_t kHigh[32] = {
      0x20AC, 0xFFFD, 0x201A, 0x0192, 0x201E, 0x2026, 0x2020, 0x2021, 0x02C6, 0x2030, 0x0160,
      0x2039, 0x0152, 0xFFFD, 0x017D, 0xFFFD, 0xFFFD, 0x2018, 0x2019, 0x201C, 0x201D, 0x2022,
      0x2013, 0x2014, 0x02DC, 0x2122, 0x0161, 0x203A, 0x0153, 0xFFFD, 0x017E, 0x0178};
  if (c >= 0x80 && c <= 0x9F) return kHigh[c - 0x80];
  return c;
}

class TextExtractor {
 public:
  explicit TextExtractor(const Document& doc) : doc_(doc) {}

  int images = 0;

  std::string page_text(const Obj& page) {
    lines_.clear();
    line_.clear();
    const Obj* resources = doc_.inherited(page, "Resources");
    const Obj* contents = doc_.lookup(page, "Contents");
    std::string data;
    if (const Obj* raw = page.get("Contents"); raw && contents) {
      if (raw->is(Obj::Kind::ref) && !contents->is(Obj::Kind::array)) {
        data = doc_.stream_data(*raw).value_or("");
      } else if (contents->is(Obj::Kind::array)) {
        for (const auto& part : contents->arr) data += doc_.stream_data(part).value_or("") + "\n";
      }
    }
    run(data, resources, 0);
    end_line();
    while (!lines_.empty() && lines_.back().empty()) lines_.pop_back();
    std::string out;
    for (const auto& l : lines_) out += l + "\n";
    return out;
  }

 private:
  const Document& doc_;
  std::vector<std::string> lines_;
  std::string line_;
  std::map<const Obj*, Font> font_cache_;
  double last_y_ = 0;
  bool have_y_ = false;

  void end_line() {
    std::string t = text::trim(line_);
    lines_.push_back(t);
    line_.clear();
  }

  void newline() {
    if (!text::trim(line_).empty()) end_line();
    line_.clear();
  }

  const Font& font_for(const Obj* font_obj) {
    auto it = font_cache_.find(font_obj);
    if (it != font_cache_.end()) return it->second;
    Font f;
    if (font_obj) {
      const Obj* subtype = doc_.lookup(*font_obj, "Subtype");
      if (subtype && subtype->is_name("Type0")) f.code_bytes = 2;
      if (const Obj* tu = doc_.resolve(*font_obj).get("ToUnicode")) {
        if (auto cmap = doc_.stream_data(*tu)) {
          try {
            parse_cmap(*cmap, f);
          } catch (const std::exception&) {
          }
        }
      }
    }
    return font_cache_.emplace(font_obj, std::move(f)).first->second;
  }

  void show(std::string_view bytes, const Font& font) {
    const std::size_t step = static_cast<std::size_t>(font.code_bytes);
    for (std::size_t i = 0; i + step <= bytes.size(); i += step) {
      std::uint32_t code = code_of(bytes.substr(i, step));
      auto it = font.to_unicode.find(code);
      if (it != font.to_unicode.end()) {
        line_ += it->second;
      } else if (step == 1) {
        unsigned char c = static_cast<unsigned char>(code);
        if (c == '\n' || c == '\r') continue;
        xml::append_utf8(line_, win_ansi(c));
      }
    }
  }

  void move_to(double y) {
    if (have_y_ && std::abs(y - last_y_) > 0.5) newline();
    else if (!line_.empty() && line_.back() != ' ') line_ += ' ';
    last_y_ = y;
    have_y_ = true;
  }

  void run(std::string_view data, const Obj* resources, int depth) {
    if (depth > 8) return;
    Lexer lex(data);
    std::vector<Obj> ops;
    const Font* font = &font_for(nullptr);
    while (!lex.eof()) {
      std::size_t before = lex.pos();
      Obj o = lex.next();
      if (lex.pos() == before) break;
      if (!o.is(Obj::Kind::keyword)) {
        ops.push_back(std::move(o));
        continue;
      }
      const std::string& op = o.str;
      if (op == "BT") {
        have_y_ = false;
        if (!text::trim(line_).empty()) newline();
      } else if (op == "Tf" && ops.size() >= 2) {
        const Obj* fonts = resources ? doc_.lookup(*resources, "Font") : nullptr;
        const Obj* f = fonts ? doc_.lookup(*fonts, ops[ops.size() - 2].str) : nullptr;
        font = &font_for(f);
      } else if ((op == "Td" || op == "TD") && ops.size() >= 2) {
        double ty = ops[ops.size() - 1].num;
        if (std::abs(ty) > 0.01) {
          newline();
        } else if (!line_.empty() && line_.back() != ' ') {
          line_ += ' ';
        }
      } else if (op == "Tm" && ops.size() >= 6) {
        move_to(ops[ops.size() - 1].num);
      } else if (op == "T*") {
        newline();
      } else if (op == "Tj" && !ops.empty()) {
        show(ops.back().str, *font);
      } else if ((op == "'" || op == "\"") && !ops.empty()) {
        newline();
        show(ops.back().str, *font);
      } else if (op == "TJ" && !ops.empty() && ops.back().is(Obj::Kind::array)) {
        for (const auto& part : ops.back().arr) {
          if (part.is(Obj::Kind::string)) {
            show(part.str, *font);
          } else if (part.is(Obj::Kind::number) && part.num < -200 && !line_.empty() && line_.back() != ' ') {
            line_ += ' ';
          }
        }
      } else if (op == "Do" && !ops.empty() && resources) {
        const Obj* xobjects = doc_.lookup(*resources, "XObject");
        const Obj* ref = xobjects ? doc_.resolve(*xobjects).get(ops.back().str) : nullptr;
        if (ref) {
          const Obj* dict = doc_.stream_dict(*ref);
          const Obj* subtype = dict ? dict->get("Subtype") : nullptr;
          if (subtype && subtype->is_name("Image")) {
            ++images;
          } else if (subtype && subtype->is_name("Form")) {
            const Obj* inner = doc_.lookup(*dict, "Resources");
            run(doc_.stream_data(*ref).value_or(""), inner ? inner : resources, depth + 1);
          }
        }
      } else if (op == "BI") {
        // Inline image: skip to EI.
        std::size_t id = data.find("ID", lex.pos());
        std::size_t ei = id == std::string_view::npos ? id : data.find("EI", id + 3);
        while (ei != std::string_view::npos &&
               !(std::isspace(static_cast<unsigned char>(data[ei - 1])) &&
                 (ei + 2 >= data.size() || std::isspace(static_cast<unsigned char>(data[ei + 2]))))) {
          ei = data.find("EI", ei + 2);
        }
        lex.seek(ei == std::string_view::npos ? data.size() : ei + 2);
        ++images;
      }
      ops.clear();
    }
  }
};

}  // namespace

Converted pdf_to_markdown(std::string_view bytes) {
  Document doc(bytes);
  if (doc.encrypted()) throw ConversionError("PDF is encrypted; text extraction is not supported");
  auto pages = doc.pages();
  if (pages.empty()) throw ConversionError("PDF: no pages found");
  Converted out;
  TextExtractor ex(doc);
  std::vector<int> empty_pages;
  for (std::size_t i = 0; i < pages.size(); ++i) {
    int before = ex.images;
    std::string body;
    try {
      body = ex.page_text(*pages[i]);
    } catch (const std::exception& e) {
      out.notes.push_back("page " + std::to_string(i + 1) + ": " + e.what());
    }
    if (pages.size() > 1) out.markdown += "## Page " + std::to_string(i + 1) + "\n\n";
    if (text::trim(body).empty()) {
      empty_pages.push_back(static_cast<int>(i + 1));
      if (ex.images > before) out.markdown += "[image: page " + std::to_string(i + 1) + "]\n";
    } else {
      out.markdown += body;
    }
    if (i + 1 < pages.size()) out.markdown += "\n";
  }
  if (!empty_pages.empty()) {
    std::vector<std::string> nums;
    for (int p : empty_pages) nums.push_back(std::to_string(p));
    out.notes.push_back("no extractable text on page(s) " + text::join(nums, ", ") +
                        " (likely scanned images; OCR is not supported)");
  }
  out.notes.push_back("PDF converted as plain text; layout, fonts and tables are not preserved");
  out.markdown = text::clean_text(out.markdown);
  return out;
}

}  // namespace versa::tools
