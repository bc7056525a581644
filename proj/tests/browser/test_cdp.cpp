#include <doctest.h>

#include "versa/browser/cdp.hpp"
#include "versa/browser/canvas.hpp"
#include "versa/browser/session.hpp"
#include "versa/core/bytes.hpp"

using namespace versa;
using namespace versa::browser;

namespace {

json snapshot_fixture() {
  // strings: 0 "data-versa-bid", 1 "a0", 2 "id", 3 "main"
  return json::parse(R"({
    "strings": ["data-versa-bid", "a0", "id", "main"],
    "documents": [{
      "nodes": {
        "backendNodeId": [1, 5, 7, 9],
        "attributes": [[], [2, 3], [0, 1], []]
      },
      "layout": {
        "nodeIndex": [1, 2, 3],
        "bounds": [[0, 0, 800, 1200], [10, 500, 80, 24], [12, 504, 40, 16]]
      }
    }]
  })");
}

json ax_fixture() {
  return json::parse(R"([
    {"nodeId": "1", "role": {"value": "RootWebArea"}, "name": {"value": "Demo"}, "childIds": ["2"], "backendDOMNodeId": 1},
    {"nodeId": "2", "parentId": "1", "role": {"value": "generic"}, "childIds": ["3", "6"], "backendDOMNodeId": 5},
    {"nodeId": "3", "parentId": "2", "role": {"value": "button"}, "name": {"value": "Save"},
     "properties": [{"name": "focused", "value": {"value": true}}, {"name": "disabled", "value": {"value": false}}],
     "childIds": ["4"], "backendDOMNodeId": 7},
    {"nodeId": "4", "parentId": "3", "role": {"value": "StaticText"}, "name": {"value": "Save"}, "childIds": ["5"], "backendDOMNodeId": 9},
    {"nodeId": "5", "parentId": "4", "role": {"value": "InlineTextBox"}, "name": {"value": "Save"}},
    {"nodeId": "6", "parentId": "2", "ignored": true, "role": {"value": "none"}, "childIds": ["7"]},
    {"nodeId": "7", "parentId": "6", "role": {"value": "heading"}, "name": {"value": "Title"},
     "properties": [{"name": "level", "value": {"value": 2}}]}
  ])");
}

// Replies to devtools calls from a table; records every call.
struct FakeTransport : CdpTransport {
  std::vector<std::pair<std::string, json>> calls;
  std::map<std::string, std::function<json(const json&)>> replies;
  EventHandler handler;

  json call(const std::string& method, const json& params, const std::string&) override {
    calls.push_back({method, params});
    if (method == "Runtime.evaluate") {
      std::string expr = params.at("expression");
      for (auto& [prefix, fn] : replies) {
        if (prefix.starts_with("js:") && expr.find(prefix.substr(3)) != std::string::npos) {
          return {{"result", {{"value", fn(params)}}}};
        }
      }
      return {{"result", {{"value", nullptr}}}};
    }
    if (auto it = replies.find(method); it != replies.end()) return it->second(params);
    return json::object();
  }
  void on_event(EventHandler h) override { handler = std::move(h); }
  void poll(double) override {}

  int count(const std::string& method) const {
    return static_cast<int>(std::count_if(calls.begin(), calls.end(), [&](const auto& c) { return c.first == method; }));
  }
};

std::shared_ptr<FakeTransport> fake_browser() {
  auto t = std::make_shared<FakeTransport>();
  t->replies["Target.createTarget"] = [](const json&) { return json{{"targetId", "T1"}}; };
  t->replies["Target.attachToTarget"] = [](const json&) { return json{{"sessionId", "S1"}}; };
  t->replies["Target.getTargets"] = [](const json&) {
    return json{{"targetInfos", {{{"targetId", "T1"}, {"url", "http://demo.test/"}}}}};
  };
  t->replies["DOMSnapshot.captureSnapshot"] = [](const json&) { return snapshot_fixture(); };
  t->replies["Accessibility.getFullAXTree"] = [](const json&) { return json{{"nodes", ax_fixture()}}; };
  t->replies["Page.captureScreenshot"] = [](const json&) {
    Canvas c(800, 600);
    return json{{"data", base64_encode(c.encode_png())}};
  };
  t->replies["Page.navigate"] = [](const json&) { return json{{"frameId", "F"}}; };
  t->replies["js:document.readyState"] = [](const json&) { return json("complete"); };
  t->replies["js:annotate()"] = [](const json&) {
    return json::parse(R"({"elements": [{"bid": "a0", "tag": "button", "role": "button", "name": "Save",
      "bbox": {"x": 10, "y": 100, "width": 80, "height": 24}, "visible": true, "interactable": true,
      "in_viewport": true}], "viewport": {"width": 800, "height": 600, "scroll_x": 0, "scroll_y": 400,
      "page_height": 1200}})");
  };
  t->replies["js:[location.href, document.title]"] = [](const json&) { return json::array({"http://demo.test/", "Demo"}); };
  t->replies["js:getBoundingClientRect"] = [](const json&) { return json::array({50, 112, 80, 24, true, false}); };
  return t;
}

CdpOptions fast_options() {
  CdpOptions o;
  o.annotator_script = "({annotate() { return {}; }, clear() {}})";
  o.settle_cap_s = 0;
  o.quiet_period_s = 0;
  o.navigation_timeout_s = 1;
  return o;
}

}  // namespace

TEST_CASE("dom snapshot index maps backend ids to bids and boxes") {
  auto idx = index_dom_snapshot(snapshot_fixture(), kBidAttribute);
  REQUIRE(idx.bid_of.size() == 1);
  CHECK(idx.bid_of.at(7) == "a0");
  CHECK(idx.bounds.at(7) == events::BBox{10, 500, 80, 24});
  CHECK(idx.bounds.at(5) == events::BBox{0, 0, 800, 1200});
}

TEST_CASE("accessibility nodes become a bid-annotated tree") {
  auto idx = index_dom_snapshot(snapshot_fixture(), kBidAttribute);
  AxNode root = ax_tree_from_cdp(ax_fixture(), idx, 0, 400);
  CHECK(serialize_axtree(root) ==
        "RootWebArea 'Demo'\n"
        "  [a0] button 'Save', focused\n"
        "    StaticText 'Save'\n"
        "  heading 'Title', level=2\n");
  REQUIRE(root.children.size() == 2);
  CHECK(root.children[0].bbox == events::BBox{10, 100, 80, 24});
  CHECK(root.children[0].children[0].bbox == events::BBox{12, 104, 40, 16});
  CHECK_FALSE(root.children[1].bbox.has_area());
}

TEST_CASE("devtools driver requires the annotator script") {
  auto t = fake_browser();
  CdpOptions o = fast_options();
  o.annotator_script.clear();
  CHECK_THROWS_AS(CdpDriver(t, o), std::invalid_argument);
}

TEST_CASE("devtools driver builds observations and dispatches input") {
  auto t = fake_browser();
  BrowserSession s(std::make_unique<CdpDriver>(t, fast_options()), {800, 600});
  CHECK(t->count("Emulation.setDeviceMetricsOverride") >= 1);

  BrowserAction go;
  go.verb = Verb::goto_url;
  go.url = "http://demo.test/";
  auto o = s.execute_action(go);
  REQUIRE_FALSE(o.last_action_error);
  CHECK(o.title == "Demo");
  REQUIRE(o.elements.size() == 1);
  CHECK(o.axtree_text.find("[a0] button 'Save'") != std::string::npos);
  CHECK(Canvas::decode_png(o.screenshot.data).pixel(89, 112) == mark_color(0));

  BrowserAction click;
  click.verb = Verb::click;
  click.bid = "a0";
  o = s.execute_action(click);
  REQUIRE_FALSE(o.last_action_error);
  std::vector<std::string> mouse;
  for (const auto& [m, p] : t->calls) {
    if (m == "Input.dispatchMouseEvent") mouse.push_back(p.at("type"));
  }
  CHECK(mouse == std::vector<std::string>{"mouseMoved", "mousePressed", "mouseReleased"});

  BrowserAction key;
  key.verb = Verb::press;
  key.key = "Control+a";
  s.execute_action(key);
  auto last = t->calls;
  auto down = std::find_if(last.begin(), last.end(), [](const auto& c) { return c.first == "Input.dispatchKeyEvent"; });
  REQUIRE(down != last.end());
  CHECK(down->second.at("modifiers") == 2);
  CHECK(down->second.at("key") == "a");

  t->replies["Page.navigate"] = [](const json&) { return json{{"errorText", "net::ERR_NAME_NOT_RESOLVED"}}; };
  go.url = "http://nowhere.invalid/";
  o = s.execute_action(go);
  REQUIRE(o.last_action_error);
  CHECK(o.last_action_error->find("ERR_NAME_NOT_RESOLVED") != std::string::npos);

  t->replies["Page.getNavigationHistory"] = [](const json&) {
    return json{{"currentIndex", 0}, {"entries", {{{"id", 1}}}}};
  };
  BrowserAction back;
  back.verb = Verb::go_back;
  CHECK(s.execute_action(back).last_action_error == std::optional<std::string>("no previous page in this tab"));
}
