#include <doctest.h>

#include <filesystem>

#include "versa/agent/controller.hpp"
#include "versa/browser/offline.hpp"
#include "versa/browser/session.hpp"
#include "versa/core/condenser.hpp"

using namespace versa;
using namespace versa::agent;

namespace {

llm::LLMResponse call(std::string tool, json args, std::string thought = "") {
  llm::LLMResponse r;
  r.tool_call = tools::ToolCall{std::move(tool), std::move(args)};
  if (!thought.empty()) r.thought = std::move(thought);
  r.usage = {10, 2};
  return r;
}

llm::LLMResponse done(std::string message) {
  llm::LLMResponse r;
  r.finish = std::move(message);
  r.usage = {10, 2};
  return r;
}

std::vector<llm::TranscriptEntry> script(std::vector<llm::LLMResponse> responses) {
  std::vector<llm::TranscriptEntry> out;
  for (auto& r : responses) out.push_back({std::nullopt, {}, std::move(r)});
  return out;
}

// Counts image parts in every request before forwarding.
struct SpyBackend : llm::Backend {
  std::unique_ptr<llm::Backend> inner;
  std::vector<std::size_t> images;
  std::vector<std::size_t> tokens;
  std::vector<llm::LLMRequest> requests;
  explicit SpyBackend(std::unique_ptr<llm::Backend> b) : inner(std::move(b)) {}
  llm::LLMResponse complete(const llm::LLMRequest& req) override {
    std::size_t n = 0;
    for (const auto& t : req.turns) n += t.image_count();
    images.push_back(n);
    tokens.push_back(llm::estimate_tokens(req.turns));
    requests.push_back(req);
    return inner->complete(req);
  }
};

struct Harness {
  llm::BackendSpec spec;
  SpyBackend* spy = nullptr;
  std::unique_ptr<llm::Gateway> gateway;
  tools::Registry registry;
  tools::ToolContext ctx;

  explicit Harness(std::vector<llm::LLMResponse> responses, std::size_t window = 200'000) {
    spec.transcript_path = "scripted";
    spec.context_window_tokens = window;
    auto s = std::make_unique<SpyBackend>(std::make_unique<llm::ScriptedBackend>(script(std::move(responses))));
    spy = s.get();
    gateway = std::make_unique<llm::Gateway>(spec, std::move(s));
    registry.register_tool({"echo", "echo", {{"text", tools::ParamType::string, false, "", {}}}, {}},
                           [](const json& a, tools::ToolContext&) {
                             events::ExecOutput out;
                             out.stdout_text = a.value("text", std::string("ok"));
                             return events::ObservationBody::exec(events::ObservationKind::shell_output, out);
                           });
    auto def = tools::default_registry();
    for (const auto& s : def.schemas()) {
      if (s.name == "browse" || s.name == "finish") {
        registry.register_tool(s, [def, name = s.name](const json& a, tools::ToolContext& c) {
          return def.dispatch({name, a}, c);
        });
      }
    }
  }

  RunResult run(AgentConfig cfg, std::string task = "do the thing") {
    Controller c(cfg, *gateway, registry, ctx, stepping_clock(Timestamp{}, std::chrono::seconds(1)));
    return c.run(task);
  }
};

std::size_t count_planning(const RunResult& r) {
  const std::string plan = planning_prompt();
  std::size_t n = 0;
  for (const auto& e : r.stream.events()) {
    if (e.message() && e.source == events::Source::system && e.message()->text == plan) ++n;
  }
  return n;
}

std::size_t count_actions(const RunResult& r) {
  std::size_t n = 0;
  for (const auto& e : r.stream.events()) n += e.action() != nullptr;
  return n;
}

std::vector<llm::LLMResponse> echo_transcript(int decisions) {
  std::vector<llm::LLMResponse> out;
  for (int i = 1; i < decisions; ++i) out.push_back(call("echo", {{"text", "step " + std::to_string(i)}}));
  out.push_back(done("all done"));
  return out;
}

}  // namespace

TEST_CASE("defaults follow the experimental setup") {
  AgentConfig cfg;
  CHECK(cfg.k == 1);
  CHECK(cfg.tau == 10);
  CHECK(cfg.max_steps == 100);
  CHECK(cfg.temperature == 0.0);
  CHECK(kWebQaMaxSteps == 60);
  cfg.tau = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.tau = 1;
  cfg.max_steps = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("immediate finish uses one step and no tools") {
  Harness h({done("nothing to do")});
  auto r = h.run({});
  CHECK(r.status == RunStatus::finished);
  CHECK(r.steps_used == 1);
  CHECK(r.final_message == "nothing to do");
  CHECK(count_actions(r) == 1);
  auto events = r.stream.events();
  REQUIRE(events.back().action());
  CHECK(events.back().action()->tool == "finish");
  CHECK(r.stream.sealed());
  CHECK(r.usage_totals.input_tokens == 10);
}

TEST_CASE("planning cadence follows (i - 1) mod tau") {
  for (int i = 1; i <= 40; ++i) CHECK(planning_due(i, 10) == (i > 1 && (i - 1) % 10 == 0));
  const std::pair<int, std::size_t> cases[] = {{5, 0}, {10, 0}, {11, 1}, {25, 2}, {100, 9}};
  for (auto [length, expected] : cases) {
    Harness h(echo_transcript(length));
    AgentConfig cfg;
    auto r = h.run(cfg);
    CAPTURE(length);
    CHECK(r.status == RunStatus::finished);
    CHECK(r.steps_used == length);
    CHECK(count_planning(r) == expected);

    // Each planning event sits right before the request of step 11, 21, ...
    std::size_t decisions = 0;
    for (const auto& e : r.stream.events()) {
      if (e.action()) ++decisions;
      if (e.message() && e.source == events::Source::system) CHECK(planning_due(static_cast<int>(decisions) + 1, 10));
    }
  }
}

TEST_CASE("planning does not consume steps") {
  Harness h(echo_transcript(25));
  AgentConfig cfg;
  cfg.max_steps = 25;
  auto r = h.run(cfg);
  CHECK(r.status == RunStatus::finished);
  CHECK(r.steps_used == 25);
  CHECK(h.spy->requests.size() == 25);
}

TEST_CASE("step cap stops an endless transcript") {
  Harness h(echo_transcript(50));
  AgentConfig cfg;
  cfg.max_steps = 5;
  auto r = h.run(cfg);
  CHECK(r.status == RunStatus::step_limit);
  CHECK(r.steps_used == 5);
  CHECK_FALSE(r.final_message);
  CHECK(r.stream.sealed());
}

TEST_CASE("backend failure is fatal and keeps the stream") {
  Harness h({call("echo", {{"text", "a"}})});
  auto r = h.run({});
  CHECK(r.status == RunStatus::fatal_error);
  CHECK(r.steps_used == 1);
  REQUIRE(r.error);
  CHECK(r.stream.size() == 3);
}

TEST_CASE("unknown tools and bad arguments cost a step and return an error") {
  Harness h({call("teleport", json::object()), call("echo", {{"text", 3}}), done("ok")});
  auto r = h.run({});
  CHECK(r.status == RunStatus::finished);
  CHECK(r.steps_used == 3);
  int errors = 0;
  for (const auto& e : r.stream.events()) {
    if (e.observation() && e.observation()->kind == events::ObservationKind::error) ++errors;
  }
  CHECK(errors == 2);
}

TEST_CASE("every prompt carries at most one browsing image at k=1") {
  std::vector<llm::LLMResponse> responses{
      call("browse", {{"action", "goto"}, {"url", "http://shop.test/links.html"}}),
      call("browse", {{"action", "goto"}, {"url", "http://shop.test/form.html"}}),
      call("echo", {{"text", "between"}}),
      call("browse", {{"action", "goto"}, {"url", "http://shop.test/hidden.html"}}),
      call("browse", {{"action", "scroll"}, {"dy", 100}}),
      done("browsed")};
  Harness h(responses);
  browser::BrowserSession session(std::make_unique<browser::OfflineDriver>(
      browser::directory_site(std::string(VERSA_TEST_FIXTURES) + "/browser/site")));
  h.ctx.browser = &session;
  auto r = h.run({});
  REQUIRE(r.status == RunStatus::finished);
  REQUIRE(h.spy->images.size() == 6);
  CHECK(h.spy->images[0] == 0);
  for (std::size_t i = 1; i < h.spy->images.size(); ++i) CHECK(h.spy->images[i] == 1);

  for (std::size_t k = 0; k <= 3; ++k) {
    Harness hk(responses);
    hk.ctx.browser = &session;
    AgentConfig cfg;
    cfg.k = k;
    hk.run(cfg);
    for (std::size_t i = 0; i < hk.spy->images.size(); ++i) CHECK(hk.spy->images[i] <= std::min(k, i));
  }
}

TEST_CASE("context overflow retries once with reduced budgets") {
  std::string big(60000, 'x');
  std::vector<llm::LLMResponse> responses{call("echo", {{"text", big}}), done("fit")};

  // Measure the normal prompt size at step 2, then pick a window between the
  // reduced and the normal size.
  Harness probe(responses);
  AgentConfig cfg;
  cfg.output_byte_budget = 40000;
  probe.run(cfg);
  REQUIRE(probe.spy->tokens.size() == 2);
  const std::size_t normal = probe.spy->tokens[1];

  Harness h(responses, normal - 1);
  auto r = h.run(cfg);
  CHECK(r.status == RunStatus::finished);
  REQUIRE(h.spy->tokens.size() == 2);
  CHECK(h.spy->tokens[1] < normal);
  CHECK(r.warnings.size() == 1);

  Harness tiny(responses, 2000);
  auto f = tiny.run(cfg);
  CHECK(f.status == RunStatus::fatal_error);
  REQUIRE(f.error);
  CHECK(f.error->find("context overflow") != std::string::npos);
}

TEST_CASE("loop nudge is off by default and fires after three repeats") {
  auto repeats = [] {
    std::vector<llm::LLMResponse> v(4, call("echo", {{"text", "same"}}));
    v.push_back(done("x"));
    return v;
  };
  const std::string nudge = loop_nudge_prompt();
  auto nudges = [&](const RunResult& r) {
    int n = 0;
    for (const auto& e : r.stream.events()) n += e.message() && e.message()->text == nudge;
    return n;
  };
  Harness off(repeats());
  CHECK(nudges(off.run({})) == 0);
  Harness on(repeats());
  AgentConfig cfg;
  cfg.loop_nudge = true;
  auto r = on.run(cfg);
  CHECK(nudges(r) == 1);
  CHECK(r.steps_used == 5);
}

TEST_CASE("runs are reproducible with a stepping clock") {
  Harness a(echo_transcript(12));
  Harness b(echo_transcript(12));
  auto ra = a.run({});
  auto rb = b.run({});
  CHECK(ra.stream.events() == rb.stream.events());
}

TEST_CASE("answer extraction keeps the final message") {
  llm::BackendSpec spec;
  spec.transcript_path = "scripted";
  auto gw = llm::Gateway(spec, std::make_unique<llm::ScriptedBackend>(script({done("five hundred")})));
  Harness h({done("The total is 500")});
  auto r = resolve_answer(h.run({}, "How many pages, in words?"), "How many pages, in words?", gw);
  CHECK(r.final_message == "The total is 500");
  CHECK(r.extracted_answer == "five hundred");

  auto failing = llm::Gateway(spec, std::make_unique<llm::ScriptedBackend>(script({})));
  Harness h2({done("The total is 500")});
  auto r2 = resolve_answer(h2.run({}), "q", failing);
  CHECK_FALSE(r2.extracted_answer);
  CHECK(r2.warnings.size() == 1);
}

TEST_CASE("recorded extractor turns 500 into five hundred") {
  const std::string task = "How many pages does the report have? Write the number in words.";
  const std::string thought = "I opened the PDF and the last page is numbered 500, so the report has 500 pages.";
  llm::BackendSpec spec;
  spec.transcript_path = std::string(VERSA_TEST_FIXTURES) + "/agent/extract_500.jsonl";
  llm::Gateway gw(spec, std::make_unique<llm::ScriptedBackend>(spec.transcript_path));
  Harness h({done(thought)});
  auto r = resolve_answer(h.run({}, task), task, gw);
  CHECK(r.extracted_answer == "five hundred");
  CHECK(r.final_message == thought);
  CHECK(r.warnings.empty());
}

TEST_CASE("a set cancel flag stops the run before the next step") {
  Harness h(echo_transcript(5));
  std::atomic<bool> cancel{true};
  Controller c({}, *h.gateway, h.registry, h.ctx);
  c.set_cancel_flag(&cancel);
  auto r = c.run("task");
  CHECK(r.status == RunStatus::fatal_error);
  CHECK(r.error == "interrupted");
  CHECK(r.steps_used == 0);
  CHECK(r.stream.size() == 1);
}
