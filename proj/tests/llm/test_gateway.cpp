#include <doctest.h>

#include <httplib.h>

#include <atomic>
#include <thread>

#include "versa/llm/gateway.hpp"

using namespace versa;
using namespace versa::llm;

namespace {

LLMRequest simple_request(std::string text) {
  LLMRequest r;
  r.turns.push_back(ChatTurn{Role::system, {TextPart{"sys"}}});
  r.turns.push_back(ChatTurn{Role::user, {TextPart{std::move(text)}}});
  r.tools.push_back(tools::ToolSchema{"execute_bash", "run", {}, {}});
  return r;
}

LLMResponse finish(std::string msg) {
  LLMResponse r;
  r.finish = std::move(msg);
  return r;
}

BackendSpec scripted_spec() {
  BackendSpec spec;
  spec.kind = BackendKind::scripted;
  spec.transcript_path = "unused.jsonl";
  return spec;
}

// Minimal OpenAI-compatible server on loopback.
struct FakeCompletionServer {
  httplib::Server server;
  std::thread thread;
  int port = 0;
  std::atomic<int> hits{0};
  std::atomic<int> fail_first{0};
  std::string reply;
  std::string last_body;

  FakeCompletionServer() {
    server.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      ++hits;
      last_body = req.body;
      if (fail_first > 0) {
        --fail_first;
        res.status = 503;
        res.set_content("overloaded", "text/plain");
        return;
      }
      res.set_content(reply, "application/json");
    });
    port = server.bind_to_any_port("127.0.0.1");
    thread = std::thread([this] { server.listen_after_bind(); });
    server.wait_until_ready();
  }
  ~FakeCompletionServer() {
    server.stop();
    thread.join();
  }
};

BackendSpec live_spec(int port) {
  BackendSpec spec;
  spec.kind = BackendKind::live;
  spec.model_id = "test-model";
  spec.api_key = "k";
  spec.base_url = "http://127.0.0.1:" + std::to_string(port) + "/v1";
  spec.initial_backoff = std::chrono::milliseconds(1);
  spec.request_timeout_s = 5;
  return spec;
}

}  // namespace

TEST_CASE("scripted replay returns the matching entry") {
  auto req = simple_request("hello");
  ScriptedBackend backend({TranscriptEntry{fingerprint(req), turn_fingerprints(req), finish("hi")}});
  CHECK(backend.complete(req).finish == std::optional<std::string>("hi"));
  CHECK(backend.remaining() == 0);
}

TEST_CASE("second call on a one-entry transcript is exhausted") {
  auto req = simple_request("hello");
  ScriptedBackend backend({TranscriptEntry{std::nullopt, {}, finish("hi")}});
  backend.complete(req);
  try {
    backend.complete(req);
    FAIL("expected exhaustion");
  } catch (const ReplayError& e) {
    CHECK(std::string(e.what()).find("transcript exhausted") != std::string::npos);
  }
}

TEST_CASE("mismatch names the first divergent turn") {
  auto recorded = simple_request("hello");
  ScriptedBackend backend({TranscriptEntry{fingerprint(recorded), turn_fingerprints(recorded), finish("hi")}});
  try {
    backend.complete(simple_request("goodbye"));
    FAIL("expected mismatch");
  } catch (const ReplayError& e) {
    REQUIRE(e.divergent_turn().has_value());
    CHECK(*e.divergent_turn() == 1);
  }
  // The cursor did not advance.
  CHECK(backend.remaining() == 1);
}

TEST_CASE("fingerprint ignores image bytes but not text or tools") {
  auto a = simple_request("x");
  auto b = simple_request("x");
  a.turns.push_back(ChatTurn{Role::tool, {TextPart{"page"}, ImagePart{"image/png", {1}}}});
  b.turns.push_back(ChatTurn{Role::tool, {TextPart{"page"}, ImagePart{"image/png", {2, 3}}}});
  CHECK(fingerprint(a) == fingerprint(b));
  b.tools.push_back(tools::ToolSchema{"browse", "", {}, {}});
  CHECK(fingerprint(a) != fingerprint(b));
  CHECK(fingerprint(simple_request("x")) != fingerprint(simple_request("y")));
}

TEST_CASE("scripted runs are deterministic") {
  std::vector<TranscriptEntry> entries;
  for (int i = 0; i < 5; ++i) {
    LLMResponse r;
    r.tool_call = tools::ToolCall{"execute_bash", {{"command", "echo " + std::to_string(i)}}};
    entries.push_back(TranscriptEntry{std::nullopt, {}, r});
  }
  ScriptedBackend one(entries), two(entries);
  for (int i = 0; i < 5; ++i) {
    auto req = simple_request(std::to_string(i));
    CHECK(to_json(one.complete(req)).dump() == to_json(two.complete(req)).dump());
  }
}

TEST_CASE("context overflow is raised before the backend is called") {
  struct CountingBackend : Backend {
    int calls = 0;
    LLMResponse complete(const LLMRequest&) override {
      ++calls;
      LLMResponse r;
      r.finish = "done";
      return r;
    }
  };
  auto counting = std::make_unique<CountingBackend>();
  auto* raw = counting.get();
  BackendSpec spec = scripted_spec();
  spec.context_window_tokens = 10;
  Gateway gw(spec, std::move(counting));
  try {
    gw.complete(simple_request(std::string(100, 'x')));
    FAIL("expected overflow");
  } catch (const ContextOverflowError& e) {
    CHECK(e.estimated_tokens() == 26);  // ceil((3 + 100) / 4)
  }
  CHECK(raw->calls == 0);
  CHECK_NOTHROW(gw.complete(simple_request("")));
  CHECK(raw->calls == 1);
}

TEST_CASE("token estimate") {
  std::vector<ChatTurn> turns{ChatTurn{Role::user, {TextPart{"abcde"}, ImagePart{"image/png", {1}}}}};
  CHECK(estimate_tokens(turns) == 2 + kTokensPerImage);
}

TEST_CASE("chat turn invariants") {
  CHECK_THROWS(ChatTurn{Role::user, {}}.validate());
  CHECK_THROWS(ChatTurn{Role::user, {ImagePart{"image/gif", {1}}}}.validate());
  CHECK_NOTHROW(ChatTurn{Role::user, {ImagePart{"image/jpeg", {1}}}}.validate());
}

TEST_CASE("fenced tool calls parse and round-trip") {
  tools::ToolCall call{"execute_bash", {{"command", "echo hi"}}};
  auto text = "I will list.\n" + render_fenced_tool_call(call);
  auto parsed = parse_fenced_tool_call(text);
  REQUIRE(parsed);
  CHECK(*parsed == call);
  CHECK_FALSE(parse_fenced_tool_call("no block here"));
  CHECK_FALSE(parse_fenced_tool_call("```tool_call\n{not json}\n```"));
}

TEST_CASE("response must carry exactly one of tool_call or finish") {
  CHECK_THROWS(response_from_json(json::object()));
  json both = {{"finish", "x"}, {"tool_call", {{"tool", "execute_bash"}, {"arguments", json::object()}}}};
  CHECK_THROWS(response_from_json(both));
  auto r = response_from_json({{"finish", "x"}, {"thought", "t"}});
  CHECK(r.finish == std::optional<std::string>("x"));
  CHECK(response_from_json(to_json(r)) == r);
}

TEST_CASE("live backend parses native tool calls") {
  FakeCompletionServer srv;
  srv.reply = json{{"choices",
                    {{{"message",
                       {{"content", "checking"},
                        {"tool_calls",
                         {{{"id", "c1"},
                           {"type", "function"},
                           {"function", {{"name", "execute_bash"}, {"arguments", "{\"command\":\"ls\"}"}}}}}}}}}}},
                   {"usage", {{"prompt_tokens", 11}, {"completion_tokens", 3}}}}
                  .dump();
  LiveBackend backend(live_spec(srv.port));
  auto req = simple_request("hi");
  req.turns.push_back(ChatTurn{Role::tool, {TextPart{"page"}, ImagePart{"image/png", {1, 2}}}});
  auto r = backend.complete(req);
  REQUIRE(r.tool_call);
  CHECK(r.tool_call->tool == "execute_bash");
  CHECK(r.tool_call->arguments["command"] == "ls");
  CHECK(r.thought == std::optional<std::string>("checking"));
  CHECK(r.usage.input_tokens == 11);
  json sent = json::parse(srv.last_body);
  CHECK(sent["temperature"] == 0.0);
  CHECK(sent["tools"][0]["function"]["name"] == "execute_bash");
  CHECK(sent["messages"][2]["content"][1]["image_url"]["url"] == "data:image/png;base64,AQI=");
}

TEST_CASE("live backend falls back to fenced blocks and plain answers") {
  auto fenced = json{{"choices", {{{"message", {{"content", "ok\n```tool_call\n{\"tool\":\"search_web\","
                                                              "\"arguments\":{\"query\":\"x\"}}\n```"}}}}}}};
  auto r = LiveBackend::parse_completion(fenced);
  REQUIRE(r.tool_call);
  CHECK(r.tool_call->tool == "search_web");
  CHECK(r.thought == std::optional<std::string>("ok"));

  auto plain = json{{"choices", {{{"message", {{"content", "All done."}}}}}}};
  CHECK(LiveBackend::parse_completion(plain).finish == std::optional<std::string>("All done."));
}

TEST_CASE("live backend retries 5xx then succeeds") {
  FakeCompletionServer srv;
  srv.fail_first = 2;
  srv.reply = json{{"choices", {{{"message", {{"content", "done"}}}}}}}.dump();
  LiveBackend backend(live_spec(srv.port));
  CHECK(backend.complete(simple_request("hi")).finish == std::optional<std::string>("done"));
  CHECK(srv.hits == 3);
}

TEST_CASE("live backend gives up after three attempts with a transport error") {
  FakeCompletionServer srv;
  srv.fail_first = 10;
  LiveBackend backend(live_spec(srv.port));
  CHECK_THROWS_AS(backend.complete(simple_request("hi")), TransportError);
  CHECK(srv.hits == 3);
}

TEST_CASE("unreachable live endpoint is a transport error") {
  BackendSpec spec = live_spec(1);  // nothing listens on port 1
  spec.max_attempts = 2;
  LiveBackend backend(spec);
  CHECK_THROWS_AS(backend.complete(simple_request("hi")), TransportError);
}

TEST_CASE("live spec validation names missing credentials") {
  BackendSpec spec;
  spec.kind = BackendKind::live;
  try {
    spec.validate();
    FAIL("expected validation failure");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("LLM_API_KEY") != std::string::npos);
  }
}

TEST_CASE("recording then replaying reproduces responses") {
  auto path = std::filesystem::temp_directory_path() / "versa_record_test.jsonl";
  auto req = simple_request("hello");
  {
    auto inner = std::make_unique<ScriptedBackend>(std::vector<TranscriptEntry>{{std::nullopt, {}, finish("hi")}});
    RecordingBackend rec(std::move(inner), path);
    rec.complete(req);
  }
  auto entries = load_transcript(path);
  REQUIRE(entries.size() == 1);
  CHECK(entries[0].fingerprint == std::optional<std::string>(fingerprint(req)));
  ScriptedBackend replay(entries);
  CHECK(replay.complete(req).finish == std::optional<std::string>("hi"));
  std::filesystem::remove(path);
}

TEST_CASE("extraction uses the versioned prompt and returns one line") {
  auto req = extraction_request("How many?", "I counted. The answer is 500");
  REQUIRE(req.turns.size() == 2);
  CHECK(req.turns[0].text().find("five hundred") != std::string::npos);
  CHECK(req.temperature == 0.0);

  BackendSpec spec = scripted_spec();
  Gateway gw(spec, std::make_unique<ScriptedBackend>(
                       std::vector<TranscriptEntry>{{fingerprint(req), {}, finish("  five hundred\nextra")}}));
  CHECK(extract_final_answer("How many?", "I counted. The answer is 500", gw) == "five hundred");
  CHECK_THROWS_AS(extract_final_answer("How many?", "   ", gw), std::invalid_argument);
}
