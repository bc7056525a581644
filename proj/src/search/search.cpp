#include "versa/search/search.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <set>
#include <thread>

#include "versa/core/text.hpp"

namespace versa::search {

std::string_view to_string(Provider p) {
  switch (p) {
    case Provider::tavily: return "tavily";
    case Provider::exa: return "exa";
    case Provider::brave: return "brave";
    case Provider::mock: return "mock";
  }
  return "mock";
}

Provider parse_provider(std::string_view s) {
  std::string l = text::to_lower(s);
  if (l == "tavily") return Provider::tavily;
  if (l == "exa") return Provider::exa;
  if (l == "brave") return Provider::brave;
  if (l == "mock") return Provider::mock;
  throw std::invalid_argument("unknown search provider '" + std::string(s) + "' (expected tavily, exa, brave or mock)");
}

void SearchQuery::validate() const {
  if (text::trim(query).empty()) throw QueryError("search query is empty; provide a non-empty query");
  if (max_results < 1) throw QueryError("max_results must be a positive integer");
}

json to_json(const SearchResponse& r) {
  json results = json::array();
  for (const auto& x : r.results) {
    json j = {{"url", x.url}, {"title", x.title}, {"snippet", x.snippet}};
    if (x.score) j["score"] = *x.score;
    results.push_back(std::move(j));
  }
  json j = {{"provider", to_string(r.provider)}, {"results", results}};
  if (r.answer) j["answer"] = *r.answer;
  return j;
}

namespace {

std::string describe(const std::vector<ProviderFailure>& failures) {
  std::string s = "all search providers failed:";
  for (const auto& f : failures) s += " " + f.provider + " (" + f.reason + ");";
  if (s.back() == ';') s.pop_back();
  return s;
}

bool absolute_url(const std::string& u) { return u.starts_with("http://") || u.starts_with("https://"); }

const json* at_pointer(const json& j, const std::string& pointer) {
  if (pointer.empty()) return &j;
  json::json_pointer p(pointer);
  if (!j.contains(p)) return nullptr;
  return &j.at(p);
}

std::string string_field(const json& obj, const std::string& key) {
  if (key.empty() || !obj.contains(key) || !obj[key].is_string()) return {};
  return obj[key].get<std::string>();
}

std::string one_line(std::string s) {
  for (char& c : s) {
    if (c == '\n' || c == '\r' || c == '\t') c = ' ';
  }
  std::string out;
  for (char c : s) {
    if (c == ' ' && !out.empty() && out.back() == ' ') continue;
    out += c;
  }
  return text::trim(out);
}

// Dedupe by URL, keep order, cap at max_results.
void finish(SearchResponse& r, const SearchQuery& q) {
  std::set<std::string> seen;
  std::vector<SearchResult> kept;
  for (auto& x : r.results) {
    if (!absolute_url(x.url) || !seen.insert(x.url).second) continue;
    x.title = one_line(text::clean_text(x.title));
    x.snippet = one_line(text::clean_text(x.snippet));
    kept.push_back(std::move(x));
    if (static_cast<int>(kept.size()) >= q.max_results) break;
  }
  r.results = std::move(kept);
  if (r.answer) {
    std::string a = text::trim(text::clean_text(*r.answer));
    if (a.empty() || !q.include_answer) r.answer.reset();
    else r.answer = a;
  }
}

}  // namespace

AllProvidersFailed::AllProvidersFailed(std::vector<ProviderFailure> failures)
    : std::runtime_error(describe(failures)), failures_(std::move(failures)) {}

net::HttpRequest ProviderSpec::build_request(const SearchQuery& q, const std::string& api_key) const {
  net::HttpRequest req;
  req.method = method;
  req.url = endpoint;
  req.timeout_s = 30;
  if (!auth_header.empty()) req.headers.emplace_back(auth_header, auth_prefix + api_key);
  req.headers.emplace_back("Accept", "application/json");
  switch (kind) {
    case Provider::tavily:
      req.body = json{{"api_key", api_key},
                      {"query", q.query},
                      {"max_results", q.max_results},
                      {"include_answer", q.include_answer}}
                     .dump();
      break;
    case Provider::exa:
      req.body = json{{"query", q.query},
                      {"numResults", q.max_results},
                      {"contents", {{"text", {{"maxCharacters", 500}}}}}}
                     .dump();
      break;
    case Provider::brave:
      req.url += "?q=" + net::url_encode(q.query) + "&count=" + std::to_string(q.max_results);
      req.body.clear();
      req.content_type.clear();
      break;
    case Provider::mock:
      break;
  }
  return req;
}

SearchResponse ProviderSpec::normalize(const json& payload, const SearchQuery& q) const {
  const json* list = at_pointer(payload, results_path);
  if (!list || !list->is_array()) {
    throw ProviderError("response has no result list at " + (results_path.empty() ? "/" : results_path));
  }
  SearchResponse r;
  r.provider = kind;
  for (const auto& item : *list) {
    if (!item.is_object()) continue;
    SearchResult x;
    x.url = string_field(item, url_field);
    x.title = string_field(item, title_field);
    x.snippet = string_field(item, snippet_field);
    if (!score_field.empty() && item.contains(score_field) && item[score_field].is_number()) {
      x.score = item[score_field].get<double>();
    }
    if (x.url.empty()) continue;
    if (x.title.empty()) x.title = x.url;
    r.results.push_back(std::move(x));
  }
  if (!answer_path.empty()) {
    if (const json* a = at_pointer(payload, answer_path); a && a->is_string()) r.answer = a->get<std::string>();
  }
  finish(r, q);
  return r;
}

const ProviderSpec& provider_spec(Provider p) {
  static const std::map<Provider, ProviderSpec> kSpecs = {
      {Provider::tavily,
       {Provider::tavily, "https://api.tavily.com/search", "POST", "", "", "SEARCH_API_KEY_TAVILY", "/results", "url",
        "title", "content", "score", "/answer"}},
      {Provider::exa,
       {Provider::exa, "https://api.exa.ai/search", "POST", "x-api-key", "", "SEARCH_API_KEY_EXA", "/results", "url",
        "title", "text", "score", ""}},
      {Provider::brave,
       {Provider::brave, "https://api.search.brave.com/res/v1/web/search", "GET", "X-Subscription-Token", "",
        "SEARCH_API_KEY_BRAVE", "/web/results", "url", "title", "description", "", ""}},
  };
  auto it = kSpecs.find(p);
  if (it == kSpecs.end()) throw std::invalid_argument("provider has no HTTP spec: " + std::string(to_string(p)));
  return it->second;
}

RateLimiter::RateLimiter(double per_second, double burst)
    : rate_(per_second), burst_(burst), tokens_(burst), last_(std::chrono::steady_clock::now()) {}

void RateLimiter::acquire() {
  for (;;) {
    std::chrono::duration<double> wait{0};
    {
      std::lock_guard lock(mu_);
      auto now = std::chrono::steady_clock::now();
      tokens_ = std::min(burst_, tokens_ + std::chrono::duration<double>(now - last_).count() * rate_);
      last_ = now;
      if (tokens_ >= 1.0) {
        tokens_ -= 1.0;
        return;
      }
      wait = std::chrono::duration<double>((1.0 - tokens_) / rate_);
    }
    std::this_thread::sleep_for(wait);
  }
}

RateLimiter& shared_limiter(Provider p) {
  static RateLimiter tavily(1.0, 1.0), exa(1.0, 1.0), brave(1.0, 1.0), mock(1e9, 1e9);
  switch (p) {
    case Provider::tavily: return tavily;
    case Provider::exa: return exa;
    case Provider::brave: return brave;
    case Provider::mock: return mock;
  }
  return mock;
}

HttpProvider::HttpProvider(const ProviderSpec& spec, std::string api_key, std::shared_ptr<net::HttpClient> http,
                           RateLimiter* limiter)
    : spec_(spec), api_key_(std::move(api_key)), http_(std::move(http)), limiter_(limiter) {}

SearchResponse HttpProvider::search(const SearchQuery& q) {
  if (api_key_.empty()) throw ProviderError("no API key configured (set " + spec_.key_env + ")");
  if (limiter_) limiter_->acquire();
  net::HttpResponse resp;
  try {
    resp = http_->send(spec_.build_request(q, api_key_));
  } catch (const net::TransportError& e) {
    throw ProviderError(std::string("transport failure: ") + e.what());
  }
  if (resp.status == 401 || resp.status == 403) throw ProviderError("authentication failed (HTTP " + std::to_string(resp.status) + ")");
  if (resp.status == 429) throw ProviderError("quota or rate limit exceeded (HTTP 429)");
  if (resp.status < 200 || resp.status >= 300) throw ProviderError("HTTP " + std::to_string(resp.status));
  json payload = json::parse(resp.body, nullptr, false);
  if (payload.is_discarded()) throw ProviderError("response is not valid JSON");
  return spec_.normalize(payload, q);
}

MockProvider::MockProvider(json fixture, std::string label) : fixture_(std::move(fixture)), label_(std::move(label)) {
  if (!fixture_.is_object()) throw std::invalid_argument("mock search fixture must be a JSON object");
}

std::unique_ptr<MockProvider> MockProvider::from_file(const std::filesystem::path& path, std::string label) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open mock search fixture " + path.string());
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw std::invalid_argument("mock search fixture is not valid JSON: " + path.string());
  return std::make_unique<MockProvider>(std::move(j), std::move(label));
}

std::unique_ptr<MockProvider> MockProvider::failing(std::string reason, std::string label) {
  auto p = std::make_unique<MockProvider>(json::object(), std::move(label));
  p->failure_ = std::move(reason);
  return p;
}

SearchResponse MockProvider::search(const SearchQuery& q) {
  ++calls_;
  if (failure_) throw ProviderError(*failure_);
  std::string key = text::to_lower(text::trim(q.query));
  const json* entry = nullptr;
  for (const auto& [k, v] : fixture_.items()) {
    if (text::to_lower(text::trim(k)) == key) entry = &v;
  }
  if (!entry && fixture_.contains("*")) entry = &fixture_["*"];
  SearchResponse r;
  r.provider = Provider::mock;
  if (!entry) {
    finish(r, q);
    return r;
  }
  if (!entry->contains("results") || !(*entry)["results"].is_array()) {
    throw ProviderError("mock fixture entry for '" + q.query + "' has no results array");
  }
  ProviderSpec spec{Provider::mock, "", "", "", "", "", "/results", "url", "title", "snippet", "score", "/answer"};
  return spec.normalize(*entry, q);
}

SearchService::SearchService(std::vector<std::shared_ptr<SearchProvider>> chain) : chain_(std::move(chain)) {
  if (chain_.empty()) throw std::invalid_argument("search needs at least one provider");
}

SearchResponse SearchService::search(const SearchQuery& q) {
  q.validate();
  std::vector<ProviderFailure> failures;
  for (const auto& p : chain_) {
    try {
      return p->search(q);
    } catch (const ProviderError& e) {
      failures.push_back({p->name(), e.what()});
    }
  }
  throw AllProvidersFailed(std::move(failures));
}

std::vector<std::shared_ptr<SearchProvider>> make_chain(const std::vector<std::string>& names,
                                                        std::optional<std::filesystem::path> mock_fixture,
                                                        std::shared_ptr<net::HttpClient> http) {
  std::vector<std::shared_ptr<SearchProvider>> chain;
  for (const auto& n : names) {
    Provider p = parse_provider(n);
    if (p == Provider::mock) {
      if (!mock_fixture) throw std::invalid_argument("the mock search provider needs a fixture file");
      chain.push_back(MockProvider::from_file(*mock_fixture));
      continue;
    }
    const ProviderSpec& spec = provider_spec(p);
    const char* key = std::getenv(spec.key_env.c_str());
    if (!http) http = net::default_http_client();
    chain.push_back(std::make_shared<HttpProvider>(spec, key ? key : "", http, &shared_limiter(p)));
  }
  return chain;
}

std::string render_text(const SearchResponse& r) {
  std::string s;
  if (r.answer) s += "Answer: " + *r.answer + "\n\n";
  if (r.results.empty()) {
    s += "No results found.\n";
    return s;
  }
  for (std::size_t i = 0; i < r.results.size(); ++i) {
    const auto& x = r.results[i];
    if (i) s += "\n";
    s += std::to_string(i + 1) + ". " + x.title + "\n   " + x.url + "\n";
    if (!x.snippet.empty()) s += "   " + x.snippet + "\n";
  }
  return s;
}

events::ObservationBody render_observation(const SearchResponse& r) {
  return events::ObservationBody::text(events::ObservationKind::search_results, render_text(r));
}

}  // namespace versa::search
