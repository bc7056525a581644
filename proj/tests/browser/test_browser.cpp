#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <map>
#include <regex>
#include <set>
#include <sstream>

#include "versa/browser/annotation.hpp"
#include "versa/browser/canvas.hpp"
#include "versa/browser/offline.hpp"
#include "versa/browser/session.hpp"
#include "versa/core/assets.hpp"

using namespace versa;
using namespace versa::browser;

namespace {

const std::string kBase = "http://shop.test/";

Site fixture_site() { return directory_site(std::string(VERSA_TEST_FIXTURES) + "/browser/site"); }

std::unique_ptr<BrowserSession> open(OfflineOptions opts = {}, SessionOptions sopts = {}) {
  return std::make_unique<BrowserSession>(std::make_unique<OfflineDriver>(fixture_site(), opts), sopts);
}

BrowserAction go(const std::string& path) {
  BrowserAction a;
  a.verb = Verb::goto_url;
  a.url = kBase + path;
  return a;
}

BrowserAction on(Verb v, const std::string& bid) {
  BrowserAction a;
  a.verb = v;
  a.bid = bid;
  return a;
}

const events::MarkedElement* by_name(const events::BrowserObservation& o, const std::string& name) {
  for (const auto& e : o.elements) {
    if (e.name == name) return &e;
  }
  return nullptr;
}

std::vector<std::string> lines_of(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

bool is_subsequence(const std::vector<std::string>& sub, const std::vector<std::string>& full) {
  std::size_t j = 0;
  for (const auto& line : full) {
    if (j < sub.size() && sub[j] == line) ++j;
  }
  return j == sub.size();
}

std::map<std::string, std::pair<std::string, std::string>> bid_map(const events::BrowserObservation& o) {
  std::map<std::string, std::pair<std::string, std::string>> m;
  for (const auto& e : o.elements) m[e.bid] = {e.role, e.name};
  return m;
}

std::string rows_page(int rows) {
  std::string html = "<html><head><title>Rows</title></head><body><table>";
  for (int i = 0; i < rows; ++i) {
    html += "<tr><td><a href=\"/r" + std::to_string(i) + "\">Row " + std::to_string(i) + "</a></td><td>value-" +
            std::to_string(i) + "</td></tr>";
  }
  return html + "</table></body></html>";
}

}  // namespace

TEST_CASE("actions validate their required arguments") {
  for (Verb v : all_verbs()) {
    BrowserAction a;
    a.verb = v;
    if (requires_bid(v)) CHECK_THROWS_AS(validate(a), ActionError);
  }
  CHECK(requires_bid(Verb::click));
  CHECK(requires_bid(Verb::fill));
  CHECK(requires_bid(Verb::select_option));
  CHECK(requires_bid(Verb::hover));
  CHECK_FALSE(requires_bid(Verb::scroll));

  BrowserAction g;
  g.verb = Verb::goto_url;
  CHECK_THROWS_WITH_AS(validate(g), "goto requires a url", ActionError);
  BrowserAction f = on(Verb::fill, "a1");
  CHECK_THROWS_WITH_AS(validate(f), "fill requires text", ActionError);
  CHECK_THROWS_AS(validate(on(Verb::click, "a-1")), ActionError);

  CHECK_THROWS_AS(action_from_json(json{{"action", "teleport"}}), ActionError);
  CHECK_THROWS_AS(action_from_json(json{{"bid", "a1"}}), ActionError);
  CHECK_THROWS_AS(action_from_json(json{{"action", "click"}, {"bid", 5}}), ActionError);

  auto a = action_from_json(json{{"action", "fill"}, {"bid", "a3"}, {"text", "hello"}});
  CHECK(a.verb == Verb::fill);
  CHECK(action_from_json(to_json(a)) == a);
  auto s = action_from_json(json{{"action", "scroll"}, {"dy", 300}});
  CHECK(s.dy == 300);
  CHECK(action_from_json(to_json(s)) == s);
}

TEST_CASE("url resolution") {
  CHECK(resolve_url("http://h.test/a/b.html", "c.html") == "http://h.test/a/c.html");
  CHECK(resolve_url("http://h.test/a/b.html", "/c.html") == "http://h.test/c.html");
  CHECK(resolve_url("http://h.test/a/b.html", "../c.html") == "http://h.test/c.html");
  CHECK(resolve_url("http://h.test/a/b.html?x=1", "?y=2") == "http://h.test/a/b.html?y=2");
  CHECK(resolve_url("http://h.test/a/b.html", "#top") == "http://h.test/a/b.html#top");
  CHECK(resolve_url("https://h.test/a/", "//other.test/x") == "https://other.test/x");
  CHECK(resolve_url("http://h.test/a/", "https://z.test/q?1") == "https://z.test/q?1");
  CHECK(resolve_url("http://h.test", "p") == "http://h.test/p");
}

TEST_CASE("canvas png round trip and text drawing") {
  Canvas c(40, 20);
  c.fill_rect(2, 2, 5, 5, {10, 20, 30});
  int adv = c.draw_text(10, 0, "Hi", {0, 0, 0});
  CHECK(adv == 2 * kGlyphWidth);
  auto png = c.encode_png();
  REQUIRE(png.size() > 8);
  CHECK(png[1] == 'P');
  Canvas d = Canvas::decode_png(png);
  CHECK(d.width() == 40);
  CHECK(d.height() == 20);
  CHECK(d.pixel(3, 3) == Rgb{10, 20, 30});
  int dark = 0;
  for (int y = 0; y < 20; ++y) {
    for (int x = 10; x < 26; ++x) dark += d.pixel(x, y) == Rgb{0, 0, 0};
  }
  CHECK(dark > 10);
  CHECK_THROWS(Canvas::decode_png(to_bytes("not a png")));
}

TEST_CASE("annotation payload json round trip") {
  AnnotationPayload p;
  p.elements.push_back({"a0", "button", "button", "Go", {1, 2, 3, 4}, true, true, true, {}});
  p.elements.push_back({"a1", "a", "link", "x", {}, false, true, false, {0}});
  p.viewport.page_height = 900;
  p.skipped_frames = {{1}};
  CHECK(payload_from_json(to_json(p)) == p);
  json dup = to_json(p);
  dup["elements"][1]["bid"] = "a0";
  CHECK_THROWS_AS(payload_from_json(dup), std::invalid_argument);
}

TEST_CASE("blank page gives an empty element list and a minimal tree") {
  auto s = open();
  auto o = s->build_observation();
  CHECK(o.url == "about:blank");
  CHECK(o.elements.empty());
  CHECK(o.axtree_text == "RootWebArea\n");
  CHECK_FALSE(o.axtree_truncated_to_viewport);
  Canvas img = Canvas::decode_png(o.screenshot.data);
  CHECK(img.width() == 1280);
  CHECK(img.height() == 720);
}

TEST_CASE("five-link fixture under a generous budget") {
  auto s = open();
  auto o = s->execute_action(go("links.html"));
  REQUIRE_FALSE(o.last_action_error);
  CHECK(o.title == "Five links");
  CHECK_FALSE(o.axtree_truncated_to_viewport);
  CHECK(o.elements.size() == 5);
  std::set<std::string> bids;
  for (const auto& e : o.elements) {
    CHECK(e.role == "link");
    CHECK(e.visible);
    CHECK(e.in_viewport);
    CHECK(e.bbox.has_area());
    bids.insert(e.bid);
  }
  CHECK(bids.size() == 5);
  int link_lines = 0;
  for (const auto& line : lines_of(o.axtree_text)) {
    if (line.find("] link '") != std::string::npos) ++link_lines;
  }
  CHECK(link_lines == 5);
  CHECK(o.axtree_text.find("[" + by_name(o, "Cherries section")->bid + "] link 'Cherries section'") !=
        std::string::npos);
  CHECK(o.axtree_text.find("heading 'Directory', level=1") != std::string::npos);
  CHECK(o.axtree_text.starts_with("RootWebArea 'Five links'\n"));
}

TEST_CASE("hidden elements are reported but flagged invisible") {
  auto s = open();
  auto o = s->execute_action(go("hidden.html"));
  REQUIRE_FALSE(o.last_action_error);
  int visible = 0;
  int hidden = 0;
  for (const auto& e : o.elements) {
    CHECK(e.interactable);
    (e.visible ? visible : hidden)++;
    if (e.visible) CHECK(e.bbox.has_area());
  }
  CHECK(visible == 5);
  CHECK(hidden == 2);
  const auto* ghost = by_name(o, "Ghost");
  REQUIRE(ghost);
  CHECK_FALSE(ghost->visible);
  CHECK_FALSE(ghost->in_viewport);
  CHECK(o.axtree_text.find("Ghost") == std::string::npos);
  const auto* sub = by_name(o, "Submit");
  REQUIRE(sub);
  CHECK(sub->role == "button");
  const auto* who = by_name(o, "Your name");
  REQUIRE(who);
  CHECK(who->role == "textbox");
  // Every bid in the tree is in the element list.
  for (const auto& line : lines_of(o.axtree_text)) {
    std::smatch m;
    if (std::regex_search(line, m, std::regex(R"(\[([A-Za-z0-9]+)\])"))) {
      CHECK(std::any_of(o.elements.begin(), o.elements.end(), [&](const auto& e) { return e.bid == m[1].str(); }));
    }
  }
}

TEST_CASE("screenshot marks sit on the reported boxes") {
  auto s = open();
  auto o = s->execute_action(go("links.html"));
  Canvas img = Canvas::decode_png(o.screenshot.data);
  REQUIRE(img.width() == o.viewport.width);
  REQUIRE(img.height() == o.viewport.height);
  std::size_t drawn = 0;
  for (const auto& e : o.elements) {
    if (!e.visible || !e.in_viewport) continue;
    Rgb want = mark_color(drawn++);
    int right = static_cast<int>(e.bbox.x) + static_cast<int>(e.bbox.width) - 1;
    int mid_y = static_cast<int>(e.bbox.y + e.bbox.height / 2);
    CHECK(img.pixel(right, mid_y) == want);
    int bottom = static_cast<int>(e.bbox.y) + static_cast<int>(e.bbox.height) - 1;
    int mid_x = static_cast<int>(e.bbox.x + e.bbox.width / 2);
    CHECK(img.pixel(mid_x, bottom) == want);
  }
  CHECK(drawn == 5);
}

TEST_CASE("bids are stable across observations and DOM growth") {
  auto s = open();
  s->execute_action(go("dynamic.html"));
  auto first = s->build_observation();
  auto second = s->build_observation();
  CHECK(bid_map(first) == bid_map(second));
  for (std::size_t i = 0; i < first.elements.size(); ++i) CHECK(first.elements[i] == second.elements[i]);
  CHECK(first.axtree_text == second.axtree_text);

  const auto* add = by_name(first, "Add task");
  REQUIRE(add);
  auto after = s->execute_action(on(Verb::click, add->bid));
  REQUIRE_FALSE(after.last_action_error);
  auto before_map = bid_map(first);
  auto after_map = bid_map(after);
  for (const auto& [bid, meta] : before_map) {
    REQUIRE(after_map.contains(bid));
    CHECK(after_map[bid] == meta);
  }
  const auto* added = by_name(after, "Added task");
  REQUIRE(added);
  CHECK_FALSE(before_map.contains(added->bid));
  CHECK(after.elements.size() == first.elements.size() + 1);
}

TEST_CASE("toggle reveals hidden content") {
  auto s = open();
  auto o = s->execute_action(go("dynamic.html"));
  const auto* detail = by_name(o, "Detail link");
  REQUIRE(detail);
  CHECK_FALSE(detail->visible);
  CHECK(o.axtree_text.find("Secret detail text") == std::string::npos);
  auto shown = s->execute_action(on(Verb::click, by_name(o, "Show details")->bid));
  CHECK(by_name(shown, "Detail link")->visible);
  CHECK(by_name(shown, "Detail link")->bid == detail->bid);
  CHECK(shown.axtree_text.find("StaticText 'Secret detail text'") != std::string::npos);
}

TEST_CASE("stale or unknown bids surface as action errors") {
  auto s = open();
  s->execute_action(go("links.html"));
  auto o = s->execute_action(on(Verb::click, "a999"));
  REQUIRE(o.last_action_error);
  CHECK(o.last_action_error->find("a999") != std::string::npos);
  CHECK(o.url == kBase + "links.html");
  CHECK(o.elements.size() == 5);

  // A bid from an earlier page is stale after navigation.
  std::string old_bid = by_name(o, "Apples section")->bid;
  s->execute_action(on(Verb::click, old_bid));
  auto page_a = s->last_observation();
  REQUIRE(page_a);
  CHECK(page_a->title == "Page a");
  auto stale = s->execute_action(on(Verb::click, "a4"));
  CHECK(stale.last_action_error);

  auto bad = s->execute_action(go("missing.html"));
  REQUIRE(bad.last_action_error);
  CHECK(bad.last_action_error->find("missing.html") != std::string::npos);
  CHECK(bad.title == "Page a");

  BrowserAction invalid;
  invalid.verb = Verb::fill;
  invalid.bid = "a0";
  auto inv = s->execute_action(invalid);
  REQUIRE(inv.last_action_error);
  CHECK(inv.last_action_error->find("fill requires text") != std::string::npos);
}

TEST_CASE("forms: fill, select, check and submit") {
  auto s = open();
  auto o = s->execute_action(go("form.html"));
  const auto* q = by_name(o, "Query");
  REQUIRE(q);
  CHECK(q->role == "textbox");
  BrowserAction fill = on(Verb::fill, q->bid);
  fill.text = "green tea";
  o = s->execute_action(fill);
  REQUIRE_FALSE(o.last_action_error);
  CHECK(o.axtree_text.find("textbox 'Query', value='green tea', focused") != std::string::npos);

  const auto* sort = by_name(o, "Sort order");
  REQUIRE(sort);
  BrowserAction pick = on(Verb::select_option, sort->bid);
  pick.value = "Name";
  o = s->execute_action(pick);
  REQUIRE_FALSE(o.last_action_error);
  CHECK(o.axtree_text.find("combobox 'Sort order', value='Name'") != std::string::npos);

  BrowserAction wrong = on(Verb::select_option, sort->bid);
  wrong.value = "Weight";
  auto err = s->execute_action(wrong);
  REQUIRE(err.last_action_error);
  CHECK(err.last_action_error->find("'Price', 'Name'") != std::string::npos);

  const auto* stock = by_name(o, "In stock only");
  REQUIRE(stock);
  o = s->execute_action(on(Verb::click, stock->bid));
  CHECK(o.axtree_text.find("checkbox 'In stock only', checked=true") != std::string::npos);

  BrowserAction bad_fill = on(Verb::fill, by_name(o, "Search")->bid);
  bad_fill.text = "x";
  CHECK(s->execute_action(bad_fill).last_action_error);

  o = s->execute_action(on(Verb::click, by_name(o, "Search")->bid));
  REQUIRE_FALSE(o.last_action_error);
  CHECK(o.url == kBase + "results.html?q=green%20tea&sort=name&stock=yes");
  CHECK(o.title == "Results for green tea");
  CHECK(o.axtree_text.find("StaticText 'green tea'") != std::string::npos);
}

TEST_CASE("pressing Enter in a text field submits its form") {
  auto s = open();
  auto o = s->execute_action(go("form.html"));
  BrowserAction fill = on(Verb::fill, by_name(o, "Query")->bid);
  fill.text = "kiwi";
  s->execute_action(fill);
  BrowserAction enter;
  enter.verb = Verb::press;
  enter.key = "Enter";
  o = s->execute_action(enter);
  REQUIRE_FALSE(o.last_action_error);
  CHECK(o.title == "Results for kiwi");
  BrowserAction weird;
  weird.verb = Verb::press;
  weird.key = "Hyper+F13";
  CHECK(s->execute_action(weird).last_action_error);
}

TEST_CASE("history and tabs") {
  auto s = open();
  s->execute_action(go("links.html"));
  auto o = s->execute_action(on(Verb::click, by_name(*s->last_observation(), "Bananas section")->bid));
  CHECK(o.title == "Page b");
  BrowserAction back;
  back.verb = Verb::go_back;
  o = s->execute_action(back);
  CHECK(o.title == "Five links");
  BrowserAction fwd;
  fwd.verb = Verb::go_forward;
  o = s->execute_action(fwd);
  CHECK(o.title == "Page b");
  CHECK(s->execute_action(fwd).last_action_error);

  BrowserAction nt;
  nt.verb = Verb::new_tab;
  nt.url = kBase + "c.html";
  o = s->execute_action(nt);
  CHECK(o.title == "Page c");
  BrowserAction sw;
  sw.verb = Verb::switch_tab;
  sw.tab = 0;
  o = s->execute_action(sw);
  CHECK(o.title == "Page b");
  sw.tab = 5;
  CHECK(s->execute_action(sw).last_action_error);
  sw.tab = 1;
  s->execute_action(sw);
  BrowserAction close;
  close.verb = Verb::close_tab;
  o = s->execute_action(close);
  CHECK(o.title == "Page b");
  o = s->execute_action(close);
  CHECK(o.url == "about:blank");

  auto visited = s->visited_urls();
  CHECK(std::find(visited.begin(), visited.end(), kBase + "c.html") != visited.end());
  CHECK(std::find(visited.begin(), visited.end(), kBase + "links.html") != visited.end());
}

TEST_CASE("links with target=_blank open a new tab") {
  auto s = open();
  auto o = s->execute_action(go("results.html?q=x"));
  o = s->execute_action(on(Verb::click, by_name(o, "Open directory in a new tab")->bid));
  CHECK(o.title == "Five links");
  BrowserAction sw;
  sw.verb = Verb::switch_tab;
  sw.tab = 0;
  CHECK(s->execute_action(sw).title == "Results for x");
}

TEST_CASE("downloads land in the configured directory") {
  auto dir = std::filesystem::temp_directory_path() / ("versa-dl-" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  OfflineOptions opts;
  opts.download_dir = dir;
  auto s = open(opts);
  auto o = s->execute_action(go("results.html?q=x"));
  o = s->execute_action(on(Verb::click, by_name(o, "Download price list")->bid));
  REQUIRE_FALSE(o.last_action_error);
  CHECK(o.title == "Download complete");
  CHECK(assets::read_file(dir / "prices.csv") == "item,price\napples,0.5\npears,1.25\n");
  std::filesystem::remove_all(dir);

  auto plain = open();
  o = plain->execute_action(go("docs/prices.csv"));
  CHECK(o.axtree_text.find("apples,0.5") != std::string::npos);
}

TEST_CASE("scrolling moves the viewport and updates in_viewport") {
  auto driver = std::make_unique<OfflineDriver>(fixture_site());
  driver->load_html("http://rows.test/", rows_page(100));
  BrowserSession s(std::move(driver));
  auto top = s.build_observation();
  CHECK(top.viewport.page_height > 720);
  CHECK(by_name(top, "Row 0")->in_viewport);
  CHECK_FALSE(by_name(top, "Row 99")->in_viewport);
  BrowserAction sc;
  sc.verb = Verb::scroll;
  sc.dy = 1e9;
  auto bottom = s.execute_action(sc);
  CHECK(bottom.viewport.scroll_y == doctest::Approx(bottom.viewport.page_height - 720));
  CHECK(by_name(bottom, "Row 99")->in_viewport);
  CHECK_FALSE(by_name(bottom, "Row 0")->in_viewport);
  sc.dy = -1e9;
  CHECK(s.execute_action(sc).viewport.scroll_y == 0);

  // Clicking an off-screen element scrolls it into view first.
  auto o = s.execute_action(on(Verb::hover, by_name(top, "Row 60")->bid));
  CHECK(by_name(o, "Row 60")->in_viewport);
}

TEST_CASE("every verb has a working handler") {
  for (Verb v : all_verbs()) {
    CAPTURE(to_string(v));
    auto s = open();
    auto o = s->execute_action(go("form.html"));
    BrowserAction a;
    a.verb = v;
    switch (v) {
      case Verb::goto_url: a.url = kBase + "a.html"; break;
      case Verb::click: a.bid = by_name(o, "In stock only")->bid; break;
      case Verb::fill: a.bid = by_name(o, "Query")->bid; a.text = "x"; break;
      case Verb::select_option: a.bid = by_name(o, "Sort order")->bid; a.value = "name"; break;
      case Verb::hover: a.bid = by_name(o, "Search")->bid; break;
      case Verb::press: a.key = "PageDown"; break;
      case Verb::scroll: a.dy = 100; break;
      case Verb::go_back: break;
      case Verb::go_forward: break;
      case Verb::new_tab: a.url = kBase + "b.html"; break;
      case Verb::close_tab: break;
      case Verb::switch_tab: a.tab = 0; break;
      case Verb::noop: break;
    }
    auto r = s->execute_action(a);
    if (v == Verb::go_forward) {
      CHECK(r.last_action_error);  // nothing to go forward to
    } else {
      CHECK_FALSE(r.last_action_error);
    }
    CHECK(Canvas::decode_png(r.screenshot.data).width() == 1280);
  }
}

TEST_CASE("500-row page: viewport truncation under a tiny budget") {
  auto driver = std::make_unique<OfflineDriver>(fixture_site());
  driver->load_html("http://rows.test/", rows_page(500));
  BrowserSession s(std::move(driver));

  auto full = s.build_observation(1'000'000);
  CHECK_FALSE(full.axtree_truncated_to_viewport);
  for (int i = 0; i < 500; ++i) {
    REQUIRE(full.axtree_text.find("StaticText 'value-" + std::to_string(i) + "'\n") != std::string::npos);
  }

  auto small = s.build_observation(500);
  REQUIRE(small.axtree_truncated_to_viewport);
  auto small_lines = lines_of(small.axtree_text);
  CHECK(is_subsequence(small_lines, lines_of(full.axtree_text)));

  // Geometric oracle: a row appears iff its link box intersects the viewport.
  const events::BBox view = small.viewport.rect();
  std::set<int> expected_rows;
  for (int i = 0; i < 500; ++i) {
    const auto* link = by_name(small, "Row " + std::to_string(i));
    REQUIRE(link);
    if (link->bbox.intersects(view)) expected_rows.insert(i);
  }
  CHECK(!expected_rows.empty());
  CHECK(expected_rows.size() < 100);
  std::set<int> seen_rows;
  std::regex value_re(R"(StaticText 'value-(\d+)')");
  std::regex bid_re(R"(\[([A-Za-z0-9]+)\])");
  for (const auto& line : small_lines) {
    std::smatch m;
    if (std::regex_search(line, m, value_re)) seen_rows.insert(std::stoi(m[1].str()));
    if (std::regex_search(line, m, bid_re)) {
      auto it = std::find_if(small.elements.begin(), small.elements.end(),
                             [&](const auto& e) { return e.bid == m[1].str(); });
      REQUIRE(it != small.elements.end());
      CHECK(it->bbox.intersects(view));
      CHECK(it->in_viewport);
    }
  }
  CHECK(seen_rows == expected_rows);

  BrowserAction sc;
  sc.verb = Verb::scroll;
  sc.dy = 5000;
  s.execute_action(sc);
  auto scrolled = s.build_observation(500);
  CHECK(scrolled.axtree_truncated_to_viewport);
  CHECK(scrolled.axtree_text.find("StaticText 'value-0'") == std::string::npos);
  CHECK(scrolled.axtree_text != small.axtree_text);
}

TEST_CASE("make_observation strips bids the payload does not know") {
  PageState st;
  st.url = "about:test";
  st.annotation.viewport = {64, 32, 0, 0, 32};
  st.annotation.elements.push_back({"a0", "button", "button", "Go", {2, 2, 20, 10}, true, true, true, {}});
  st.axtree.role = "RootWebArea";
  st.axtree.bbox = {0, 0, 64, 32};
  AxNode b;
  b.role = "button";
  b.name = "Go";
  b.bid = "a0";
  b.bbox = {2, 2, 20, 10};
  AxNode ghost = b;
  ghost.bid = "zz9";
  st.axtree.children = {b, ghost};
  auto o = make_observation(st, 1000);
  CHECK(o.axtree_text == "RootWebArea\n  [a0] button 'Go'\n  button 'Go'\n");
  Canvas img = Canvas::decode_png(o.screenshot.data);
  CHECK(img.width() == 64);
  CHECK(img.pixel(21, 7) == mark_color(0));
}
