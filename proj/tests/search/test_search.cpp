#include <doctest.h>

#include <chrono>
#include <fstream>
#include <sstream>

#include "versa/search/search.hpp"

using namespace versa;
using namespace versa::search;

namespace {

std::string fixture_path(const std::string& name) { return std::string(VERSA_TEST_FIXTURES) + "/search/" + name; }

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct FakeHttp : net::HttpClient {
  int calls = 0;
  net::HttpRequest last;
  net::HttpResponse reply;
  bool transport_failure = false;
  net::HttpResponse send(const net::HttpRequest& r) override {
    ++calls;
    last = r;
    if (transport_failure) throw net::TransportError("connection refused");
    return reply;
  }
};

}  // namespace

TEST_CASE("mock provider passes fixture results through in order") {
  auto mock = MockProvider::from_file(fixture_path("mock.json"));
  auto r = mock->search({"Capital of Australia ", 5, true});
  REQUIRE(r.results.size() == 3);
  CHECK(r.results[0].url == "https://en.example.org/wiki/Canberra");
  CHECK(r.results[1].url == "https://travel.example.com/canberra");
  CHECK(r.results[2].url == "https://history.example.net/act");
  CHECK(r.results[0].score == doctest::Approx(0.97));
  CHECK(r.answer == "Canberra is the capital of Australia.");
  CHECK(r.provider == Provider::mock);
}

TEST_CASE("max_results keeps the top results in seed order") {
  auto mock = MockProvider::from_file(fixture_path("mock.json"));
  for (int n = 1; n <= 6; ++n) {
    auto r = mock->search({"five results", n, false});
    REQUIRE(r.results.size() == static_cast<std::size_t>(std::min(n, 5)));
    for (int i = 0; i < static_cast<int>(r.results.size()); ++i) {
      CHECK(r.results[static_cast<std::size_t>(i)].url == "https://r.example/" + std::to_string(i + 1));
    }
  }
}

TEST_CASE("fallback moves to the next provider and all-fail names every provider") {
  std::shared_ptr<SearchProvider> a = MockProvider::failing("quota exceeded", "tavily");
  std::shared_ptr<SearchProvider> b = MockProvider::from_file(fixture_path("mock.json"));
  SearchService svc({a, b});
  auto r = svc.search({"capital of australia"});
  CHECK(r.provider == Provider::mock);
  CHECK(r.results.size() == 3);

  auto mock_b = MockProvider::from_file(fixture_path("mock.json"));
  auto* b_raw = mock_b.get();
  SearchService first_wins({std::shared_ptr<SearchProvider>(std::move(mock_b)),
                            std::shared_ptr<SearchProvider>(MockProvider::failing("never reached", "brave"))});
  first_wins.search({"five results"});
  CHECK(b_raw->calls() == 1);

  SearchService doomed({std::shared_ptr<SearchProvider>(MockProvider::failing("quota exceeded", "tavily")),
                        std::shared_ptr<SearchProvider>(MockProvider::failing("HTTP 503", "exa"))});
  try {
    doomed.search({"anything"});
    FAIL("expected AllProvidersFailed");
  } catch (const AllProvidersFailed& e) {
    REQUIRE(e.failures().size() == 2);
    CHECK(e.failures()[0].provider == "tavily");
    CHECK(e.failures()[1].provider == "exa");
    std::string what = e.what();
    CHECK(what.find("tavily (quota exceeded)") != std::string::npos);
    CHECK(what.find("exa (HTTP 503)") != std::string::npos);
  }
}

TEST_CASE("empty queries fail validation before any request") {
  auto http = std::make_shared<FakeHttp>();
  SearchService svc({std::make_shared<HttpProvider>(provider_spec(Provider::tavily), "k", http, nullptr)});
  CHECK_THROWS_AS(svc.search({"   "}), QueryError);
  CHECK_THROWS_AS(svc.search({""}), QueryError);
  CHECK(http->calls == 0);
}

TEST_CASE("rendered observation matches the golden bytes") {
  auto mock = MockProvider::from_file(fixture_path("mock.json"));
  auto obs = render_observation(mock->search({"capital of australia"}));
  CHECK(obs.kind == events::ObservationKind::search_results);
  std::string text = std::get<events::TextContent>(obs.content).text;
  CHECK(text == slurp(fixture_path("render_golden.txt")));
  CHECK(render_text(mock->search({"capital of australia"})) == text);
}

TEST_CASE("provider payloads normalize to the unified model") {
  auto http = std::make_shared<FakeHttp>();
  SearchQuery q{"rust borrow checker", 2, true};

  http->reply = {200, R"({"answer":"It enforces ownership.","results":[
      {"url":"https://a.example/1","title":"A","content":"first","score":0.9},
      {"url":"https://a.example/2","title":"B","content":"second","score":0.5},
      {"url":"https://a.example/3","title":"C","content":"third"}]})"};
  HttpProvider tavily(provider_spec(Provider::tavily), "tv-key", http, nullptr);
  auto t = tavily.search(q);
  CHECK(t.provider == Provider::tavily);
  CHECK(t.answer == "It enforces ownership.");
  CHECK(t.results.size() == 2);
  CHECK(http->last.method == "POST");
  CHECK(json::parse(http->last.body)["api_key"] == "tv-key");
  CHECK(json::parse(http->last.body)["max_results"] == 2);

  http->reply = {200, R"({"results":[{"url":"https://e.example/x","title":"X","text":"body text","score":0.3}]})"};
  HttpProvider exa(provider_spec(Provider::exa), "ex-key", http, nullptr);
  auto e = exa.search(q);
  CHECK(e.results.at(0).snippet == "body text");
  CHECK_FALSE(e.answer.has_value());
  bool has_key = false;
  for (auto& [k, v] : http->last.headers) has_key = has_key || (k == "x-api-key" && v == "ex-key");
  CHECK(has_key);

  http->reply = {200, R"({"web":{"results":[{"url":"https://b.example/y","title":"Y","description":"desc"}]}})"};
  HttpProvider brave(provider_spec(Provider::brave), "br-key", http, nullptr);
  auto b = brave.search(q);
  CHECK(b.results.at(0).snippet == "desc");
  CHECK(http->last.method == "GET");
  CHECK(http->last.url.find("q=rust%20borrow%20checker") != std::string::npos);

  http->reply = {200, R"({"unexpected":true})"};
  CHECK_THROWS_AS(brave.search(q), ProviderError);
  http->reply = {429, "{}"};
  CHECK_THROWS_WITH_AS(tavily.search(q), doctest::Contains("429"), ProviderError);
  http->transport_failure = true;
  CHECK_THROWS_WITH_AS(exa.search(q), doctest::Contains("transport"), ProviderError);
  HttpProvider keyless(provider_spec(Provider::exa), "", http, nullptr);
  CHECK_THROWS_WITH_AS(keyless.search(q), doctest::Contains("SEARCH_API_KEY_EXA"), ProviderError);
}

TEST_CASE("token bucket spaces requests") {
  RateLimiter limiter(20.0, 1.0);
  auto start = std::chrono::steady_clock::now();
  for (int i = 0; i < 4; ++i) limiter.acquire();
  auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  CHECK(elapsed >= 0.14);
}

TEST_CASE("provider names parse") {
  CHECK(parse_provider("Tavily") == Provider::tavily);
  CHECK(parse_provider("brave") == Provider::brave);
  CHECK_THROWS(parse_provider("bing"));
  CHECK(kDefaultChain.size() == 3);
}
