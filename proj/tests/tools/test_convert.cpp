#include <doctest.h>

#include <fstream>
#include <random>
#include <sstream>

#include "versa/core/bytes.hpp"
#include "versa/core/json.hpp"
#include "versa/tools/convert.hpp"
#include "versa/tools/xml.hpp"
#include "versa/tools/zip.hpp"

using namespace versa;
using namespace versa::tools;

namespace {

std::string fixture(const std::string& name) {
  std::ifstream in(std::string(VERSA_TEST_FIXTURES) + "/convert/" + name, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t count(const std::string& hay, const std::string& needle) {
  std::size_t n = 0;
  for (auto p = hay.find(needle); p != std::string::npos; p = hay.find(needle, p + 1)) ++n;
  return n;
}

std::string col_name(std::size_t c) {
  std::string s;
  for (++c; c; c = (c - 1) / 26) s.insert(s.begin(), static_cast<char>('A' + (c - 1) % 26));
  return s;
}

// Minimal workbook writer over ZipWriter, with every cell as an inline string.
std::string make_xlsx(const std::vector<std::pair<std::string, std::vector<std::vector<std::string>>>>& sheets) {
  ZipWriter z;
  std::string wb =
      R"(<?xml version="1.0" encoding="UTF-8"?><workbook xmlns="http://schemas.openxmlformats.org/spreadsheetml/2006/main" xmlns:r="http://schemas.openxmlformats.org/officeDocument/2006/relationships"><sheets>)";
  std::string rels = R"(<?xml version="1.0"?><Relationships xmlns="http://schemas.openxmlformats.org/package/2006/relationships">)";
  for (std::size_t i = 0; i < sheets.size(); ++i) {
    std::string id = "rId" + std::to_string(i + 1);
    wb += "<sheet name=\"" + xml::escape(sheets[i].first) + "\" sheetId=\"" + std::to_string(i + 1) + "\" r:id=\"" + id + "\"/>";
    rels += "<Relationship Id=\"" + id + "\" Type=\"worksheet\" Target=\"worksheets/sheet" + std::to_string(i + 1) + ".xml\"/>";
    std::string ws = R"(<worksheet xmlns="http://schemas.openxmlformats.org/spreadsheetml/2006/main"><sheetData>)";
    const auto& rows = sheets[i].second;
    for (std::size_t r = 0; r < rows.size(); ++r) {
      ws += "<row r=\"" + std::to_string(r + 1) + "\">";
      for (std::size_t c = 0; c < rows[r].size(); ++c) {
        ws += "<c r=\"" + col_name(c) + std::to_string(r + 1) + "\" t=\"inlineStr\"><is><t>" + xml::escape(rows[r][c]) +
              "</t></is></c>";
      }
      ws += "</row>";
    }
    ws += "</sheetData></worksheet>";
    z.add("xl/worksheets/sheet" + std::to_string(i + 1) + ".xml", ws);
  }
  z.add("xl/workbook.xml", wb + "</sheets></workbook>");
  z.add("xl/_rels/workbook.xml.rels", rels + "</Relationships>");
  z.add("[Content_Types].xml", R"(<?xml version="1.0"?><Types xmlns="http://schemas.openxmlformats.org/package/2006/content-types"/>)");
  return z.finish();
}

std::string expected_section(const std::string& name, const std::vector<std::vector<std::string>>& rows) {
  return "## " + name + "\n\n" + pipe_table(rows);
}

}  // namespace

TEST_CASE("pdf fixture contains the marker text") {
  for (const char* name : {"marker.pdf", "marker_compressed.pdf"}) {
    CAPTURE(name);
    auto view = view_file_bytes(name, fixture(name));
    CHECK(view.kind == events::FileKind::converted_markdown);
    CHECK(view.source_mime == "application/pdf");
    CHECK(view.text.find("Versa test marker 7319") != std::string::npos);
  }
  auto multi = view_file_bytes("marker.pdf", fixture("marker.pdf"));
  CHECK(multi.text.find("## Page 1") != std::string::npos);
  CHECK(multi.text.find("## Page 2") != std::string::npos);
  CHECK(multi.text.find("Second page text") != std::string::npos);
  CHECK(multi.text.find("Revenue grew in every region.") != std::string::npos);
  auto tt = view_file_bytes("marker_compressed.pdf", fixture("marker_compressed.pdf"));
  CHECK(tt.text.find("Café naïve – done") != std::string::npos);
}

TEST_CASE("two-sheet workbook renders one pipe table per sheet with exact cells") {
  auto cells = json::parse(fixture("two_sheets.cells.json"));
  auto view = view_file_bytes("two_sheets.xlsx", fixture("two_sheets.xlsx"));
  CHECK(count(view.text, "## ") == 2);
  for (auto& [name, rows] : cells.items()) {
    CHECK(view.text.find(expected_section(name, rows.get<std::vector<std::vector<std::string>>>())) != std::string::npos);
  }
}

TEST_CASE("workbooks written by the suite round-trip their cell matrices") {
  std::mt19937_64 rng(42);
  std::uniform_int_distribution<int> word(0, 9999);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::pair<std::string, std::vector<std::vector<std::string>>>> sheets;
    for (int s = 0; s < 2; ++s) {
      std::vector<std::vector<std::string>> rows(3, std::vector<std::string>(2));
      for (auto& row : rows) {
        for (auto& cell : row) cell = "v" + std::to_string(word(rng)) + (word(rng) % 3 == 0 ? " & <x>" : "");
      }
      sheets.emplace_back("S" + std::to_string(trial) + "_" + std::to_string(s), rows);
    }
    auto md = xlsx_to_markdown(make_xlsx(sheets)).markdown;
    CHECK(count(md, "## ") == 2);
    for (const auto& [name, rows] : sheets) CHECK(md.find(expected_section(name, rows)) != std::string::npos);
  }
}

TEST_CASE("markdown and other plain text pass through byte-equal") {
  std::string bytes = fixture("notes.md");
  auto view = view_file_bytes("notes.md", bytes);
  CHECK(view.kind == events::FileKind::plaintext);
  CHECK(view.text == bytes);
  CHECK(view.line_count == 5);
  std::string html_looking = "<html><body>not converted</body></html>";
  CHECK(view_file_bytes("page.txt", html_looking).text == html_looking);
}

TEST_CASE("word-processor documents keep headings, lists and tables") {
  auto md = view_file_bytes("report.docx", fixture("report.docx")).text;
  CHECK(md.find("# Field report\n") != std::string::npos);
  CHECK(md.find("## Findings\n") != std::string::npos);
  CHECK(md.find("- Soil samples\n") != std::string::npos);
  CHECK(md.find("| site | ph |\n| --- | --- |\n| north | 6.8 |") != std::string::npos);
}

TEST_CASE("slide decks render per-slide sections and tables") {
  auto md = view_file_bytes("deck.pptx", fixture("deck.pptx")).text;
  CHECK(md.find("## Slide 1: Launch plan") != std::string::npos);
  CHECK(md.find("Ship the beta in May") != std::string::npos);
  CHECK(md.find("## Slide 2: Budget") != std::string::npos);
  CHECK(md.find("| team | amount |\n| --- | --- |\n| design | 40 |\n| build | 110 |") != std::string::npos);
}

TEST_CASE("html converts headings, links, tables and image placeholders") {
  auto c = html_to_markdown(
      "<html><head><title>T</title></head><body><h2>Intro</h2><p>See <a href='/x'>docs</a> "
      "<img alt='logo'><img></p><table><tr><th>a</th><th>b</th></tr><tr><td>1</td><td>2</td></tr></table>"
      "<ul><li>one<ul><li>inner</li></ul></li><li>two</li></ul></body></html>");
  CHECK(c.markdown.find("# T\n") == 0);
  CHECK(c.markdown.find("## Intro\n") != std::string::npos);
  CHECK(c.markdown.find("See [docs](/x) [image: logo][image: 2]") != std::string::npos);
  CHECK(c.markdown.find("| a | b |\n| --- | --- |\n| 1 | 2 |") != std::string::npos);
  CHECK(c.markdown.find("- one\n  - inner\n- two\n") != std::string::npos);
}

TEST_CASE("archives are listed and images keep pixels") {
  ZipWriter z;
  z.add("a.txt", "hello");
  z.add("dir/b.bin", std::string(300, 'x'));
  auto view = view_file_bytes("bundle.zip", z.finish());
  CHECK(view.text.find("| a.txt | 5 |") != std::string::npos);
  CHECK(view.text.find("| dir/b.bin | 300 |") != std::string::npos);

  // 1x1 PNG.
  auto png_bytes = versa::base64_decode(
      "iVBORw0KGgoAAAANSUhEUgAAAAEAAAABCAYAAAAfFcSJAAAADUlEQVR4nGNgYPj/HwAE/wH/M+u4RwAAAABJRU5ErkJggg==");
  std::string png(png_bytes.begin(), png_bytes.end());
  auto img = view_file_bytes("dot.png", png);
  REQUIRE(img.image.has_value());
  CHECK(img.image->mime == "image/png");
  CHECK(img.text.find("PNG image, 1x1 pixels") != std::string::npos);
}

TEST_CASE("unsupported inputs raise conversion errors") {
  CHECK_THROWS_AS(view_file_bytes("blob.bin", std::string("\x00\x01\x02garbage", 10)), ConversionError);
  CHECK_THROWS_AS(view_file_bytes("clip.mp4", std::string("\x00\x00\x00\x18" "ftypmp42", 12)), ConversionError);
  CHECK_THROWS_AS(view_file_bytes("broken.pdf", "%PDF-1.4 nothing here"), ConversionError);
  CHECK_THROWS_AS(view_file_bytes("broken.xlsx", "PK not really"), ConversionError);
  set_audio_transcriber({});
  CHECK_THROWS_WITH_AS(view_file_bytes("talk.mp3", "ID3...."), doctest::Contains("not enabled"), ConversionError);
}

TEST_CASE("audio transcription runs the configured command") {
  set_audio_transcriber({"sh", "-c", "echo transcript of \"$0\""});
  auto view = view_file_bytes("talk.wav", "RIFF....WAVE");
  CHECK(view.text.find("transcript of talk.wav") != std::string::npos);
  set_audio_transcriber({});
}

TEST_CASE("detection prefers extension, then content") {
  CHECK(detect_converter("x.pdf", "anything")->name == "pdf");
  CHECK(detect_converter("noext", "%PDF-1.7\n%\xE2\xE3")->name == "pdf");
  CHECK(detect_converter("noext", "<!DOCTYPE html><p>x")->name == "html");
  CHECK(detect_converter("readme", "plain words") == nullptr);
  CHECK(detect_converter("data.json", "{}") == nullptr);
}
