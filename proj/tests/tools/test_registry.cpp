#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "versa/browser/offline.hpp"
#include "versa/browser/session.hpp"
#include "versa/runtime/client.hpp"
#include "versa/runtime/runtime.hpp"
#include "versa/search/search.hpp"
#include "versa/tools/registry.hpp"

using namespace versa;
using namespace versa::tools;
namespace fs = std::filesystem;

namespace {

std::string error_text(const events::ObservationBody& o) {
  REQUIRE(o.kind == events::ObservationKind::error);
  return std::get<events::TextContent>(o.content).text;
}

bool has(const std::string& hay, const std::string& needle) { return hay.find(needle) != std::string::npos; }

struct Env {
  fs::path root;
  std::unique_ptr<runtime::Runtime> rt;
  std::unique_ptr<runtime::InProcessEndpoint> ep;
  std::unique_ptr<runtime::SessionClient> session;
  std::unique_ptr<browser::BrowserSession> browser;
  std::unique_ptr<search::SearchService> search;
  ToolContext ctx;

  Env() {
    root = fs::temp_directory_path() / ("versa-reg-" + runtime::new_call_id());
    fs::create_directories(root);
    runtime::RuntimeConfig cfg;
    cfg.sandbox_root = root;
    rt = std::make_unique<runtime::Runtime>(cfg);
    ep = std::make_unique<runtime::InProcessEndpoint>(*rt);
    session = std::make_unique<runtime::SessionClient>(*ep);
    auto site = browser::directory_site(std::string(VERSA_TEST_FIXTURES) + "/browser/site");
    browser = std::make_unique<browser::BrowserSession>(std::make_unique<browser::OfflineDriver>(site));
    search = std::make_unique<search::SearchService>(std::vector<std::shared_ptr<search::SearchProvider>>{
        search::MockProvider::from_file(std::string(VERSA_TEST_FIXTURES) + "/search/mock.json")});
    ctx.runtime = session.get();
    ctx.browser = browser.get();
    ctx.search = search.get();
    ctx.timeout_s = 30;
  }
  ~Env() {
    session.reset();
    std::error_code ec;
    fs::remove_all(root, ec);
  }
};

}  // namespace

TEST_CASE("default registry exposes the expected capability union") {
  auto reg = default_registry();
  CHECK(reg.names() == std::vector<std::string>{"execute_bash", "execute_code", "str_replace_editor", "browse",
                                                "search_web", "finish"});
  std::set<Capability> expected{Capability::code_execution, Capability::file_edit, Capability::browse_visual,
                                Capability::search_api, Capability::view_multimodal};
  CHECK(reg.capability_union() == expected);
  auto m = reg.capability_matrix();
  CHECK(m["execute_bash"] == std::set<Capability>{Capability::code_execution});
  CHECK(m["str_replace_editor"] == std::set<Capability>{Capability::file_edit, Capability::view_multimodal});
  CHECK(m["finish"].empty());
}

TEST_CASE("removing a tool removes only its capabilities") {
  auto reg = default_registry();
  auto no_browser = reg.without("browse");
  CHECK_FALSE(no_browser.contains("browse"));
  CHECK(no_browser.capability_union().count(Capability::browse_visual) == 0);
  CHECK(no_browser.capability_union().size() == 4);
  CHECK(reg.contains("browse"));

  Registry empty;
  CHECK(empty.empty());
  CHECK(empty.capability_union().empty());
  Env env;
  CHECK(has(error_text(empty.dispatch({"execute_bash", {{"command", "true"}}}, env.ctx)), "unknown tool"));
}

TEST_CASE("registration rejects duplicates and missing handlers") {
  Registry reg;
  ToolSchema s{"t", "d", {}, {}};
  reg.register_tool(s, [](const json&, ToolContext&) { return events::ObservationBody::error("x"); });
  CHECK_THROWS_AS(reg.register_tool(s, [](const json&, ToolContext&) { return events::ObservationBody::error("x"); }),
                  std::invalid_argument);
  CHECK_THROWS_AS(reg.register_tool({"u", "d", {}, {}}, nullptr), std::invalid_argument);
}

TEST_CASE("argument validation produces messages for the model") {
  auto reg = default_registry();
  Env env;
  auto unknown = error_text(reg.dispatch({"run", json::object()}, env.ctx));
  CHECK(has(unknown, "unknown tool 'run'"));
  CHECK(has(unknown, "execute_bash, execute_code"));
  CHECK(has(error_text(reg.dispatch({"execute_bash", json::object()}, env.ctx)),
            "missing required parameter: command"));
  CHECK(has(error_text(reg.dispatch({"execute_bash", {{"command", 5}}}, env.ctx)),
            "parameter 'command' must be of type string"));
  CHECK(has(error_text(reg.dispatch({"execute_bash", {{"command", "ls"}, {"cwd", "/"}}}, env.ctx)),
            "unknown parameter 'cwd'"));
  CHECK(has(error_text(reg.dispatch({"str_replace_editor", {{"command", "delete"}, {"path", "a"}}}, env.ctx)),
            "must be one of: view, create, str_replace"));
  CHECK(has(error_text(reg.dispatch({"str_replace_editor", {{"command", "create"}, {"path", "a"}}}, env.ctx)),
            "missing required parameter: file_text"));
  CHECK(has(error_text(reg.dispatch({"execute_bash", json::array()}, env.ctx)), "JSON object"));
}

TEST_CASE("dispatch reaches the sandbox, browser and search") {
  auto reg = default_registry();
  Env env;
  auto& ctx = env.ctx;

  auto out = reg.dispatch({"execute_bash", {{"command", "echo hello"}}}, ctx);
  CHECK(out.kind == events::ObservationKind::shell_output);
  CHECK(std::get<events::ExecOutput>(out.content).stdout_text == "hello\n");

  auto code = reg.dispatch({"execute_code", {{"code", "x = 6\nx * 7"}}}, ctx);
  CHECK(code.kind == events::ObservationKind::code_output);
  CHECK(has(std::get<events::ExecOutput>(code.content).stdout_text, "42"));

  auto created = reg.dispatch(
      {"str_replace_editor", {{"command", "create"}, {"path", "notes.txt"}, {"file_text", "one\ntwo\nthree\n"}}}, ctx);
  CHECK(created.kind != events::ObservationKind::error);
  auto edited = reg.dispatch(
      {"str_replace_editor", {{"command", "str_replace"}, {"path", "notes.txt"}, {"old_str", "two"}, {"new_str", "2"}}},
      ctx);
  CHECK(edited.kind != events::ObservationKind::error);
  auto viewed = reg.dispatch({"str_replace_editor", {{"command", "view"}, {"path", "notes.txt"}}}, ctx);
  REQUIRE(viewed.kind == events::ObservationKind::file_content);
  CHECK(has(std::get<events::FileView>(viewed.content).text, "2"));
  auto ranged = reg.dispatch(
      {"str_replace_editor", {{"command", "view"}, {"path", "notes.txt"}, {"view_range", {3, -1}}}}, ctx);
  REQUIRE(ranged.kind == events::ObservationKind::file_content);
  CHECK(std::get<events::FileView>(ranged.content).first_line == 3);

  auto page = reg.dispatch({"browse", {{"action", "goto"}, {"url", "http://shop.test/links.html"}}}, ctx);
  REQUIRE(page.kind == events::ObservationKind::browser_state);
  CHECK(std::get<events::BrowserObservation>(page.content).title == "Five links");
  CHECK(has(error_text(reg.dispatch({"browse", {{"action", "click"}}}, ctx)), "click requires a bid"));

  auto found = reg.dispatch({"search_web", {{"query", "capital of australia"}}}, ctx);
  REQUIRE(found.kind == events::ObservationKind::search_results);
  CHECK(has(std::get<events::TextContent>(found.content).text, "Canberra"));
  CHECK(has(error_text(reg.dispatch({"search_web", {{"query", "x"}, {"max_results", 0}}}, ctx)), "invalid search"));

  auto fin = reg.dispatch({"finish", {{"message", "42"}}}, ctx);
  CHECK(has(std::get<events::TextContent>(fin.content).text, "42"));
}

TEST_CASE("missing resources become error observations") {
  auto reg = default_registry();
  ToolContext bare;
  CHECK(has(error_text(reg.dispatch({"browse", {{"action", "go_back"}}}, bare)), "no browser"));
  CHECK(has(error_text(reg.dispatch({"search_web", {{"query", "q"}}}, bare)), "no search provider"));
  CHECK(has(error_text(reg.dispatch({"execute_bash", {{"command", "ls"}}}, bare)), "no sandbox runtime"));
}

TEST_CASE("tool categories for analytics") {
  CHECK(tool_category({"execute_bash", json::object(), {}}) == "bash");
  CHECK(tool_category({"execute_code", json::object(), {}}) == "ipython");
  CHECK(tool_category({"str_replace_editor", {{"command", "view"}}, {}}) == "view_file");
  CHECK(tool_category({"str_replace_editor", {{"command", "create"}}, {}}) == "edit_file");
  CHECK(tool_category({"str_replace_editor", {{"command", "str_replace"}}, {}}) == "edit_file");
  CHECK(tool_category({"browse", json::object(), {}}) == "browser");
  CHECK(tool_category({"search_web", json::object(), {}}) == "search_engine");
  CHECK(tool_category({"finish", json::object(), {}}) == "finish");
  CHECK(tool_category({"nope", json::object(), {}}) == "other");
  CHECK(tool_categories().size() == 8);
}
