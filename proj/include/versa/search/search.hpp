#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "versa/core/events.hpp"
#include "versa/core/json.hpp"
#include "versa/net/http.hpp"

namespace versa::search {

enum class Provider { tavily, exa, brave, mock };

std::string_view to_string(Provider p);
Provider parse_provider(std::string_view s);

// Default fallback order.
inline const std::vector<Provider> kDefaultChain = {Provider::tavily, Provider::exa, Provider::brave};

struct SearchQuery {
  std::string query;
  int max_results = 5;
  bool include_answer = true;

  void validate() const;  // throws QueryError
};

struct SearchResult {
  std::string url;
  std::string title;
  std::string snippet;
  std::optional<double> score;

  bool operator==(const SearchResult&) const = default;
};

struct SearchResponse {
  std::vector<SearchResult> results;
  std::optional<std::string> answer;
  Provider provider = Provider::mock;

  bool operator==(const SearchResponse&) const = default;
};

json to_json(const SearchResponse& r);

class QueryError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// One provider could not answer (quota, auth, transport, bad payload).
class ProviderError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ProviderFailure {
  std::string provider;
  std::string reason;
};

class AllProvidersFailed : public std::runtime_error {
 public:
  explicit AllProvidersFailed(std::vector<ProviderFailure> failures);
  const std::vector<ProviderFailure>& failures() const { return failures_; }

 private:
  std::vector<ProviderFailure> failures_;
};

class SearchProvider {
 public:
  virtual ~SearchProvider() = default;
  virtual Provider kind() const = 0;
  virtual std::string name() const { return std::string(to_string(kind())); }
  // Raw provider answer mapped to the unified model, or ProviderError.
  virtual SearchResponse search(const SearchQuery& q) = 0;
};

// Endpoint template plus field mapping for one HTTP provider.
struct ProviderSpec {
  Provider kind;
  std::string endpoint;
  std::string method;        // GET or POST
  std::string auth_header;   // header carrying the key; empty for a body field
  std::string auth_prefix;   // e.g. "Bearer "
  std::string key_env;       // environment variable holding the key
  std::string results_path;  // JSON pointer to the result array
  std::string url_field, title_field, snippet_field, score_field;
  std::string answer_path;   // JSON pointer, empty if none

  // The request for a query: method, url and body filled from the template.
  net::HttpRequest build_request(const SearchQuery& q, const std::string& api_key) const;
  // Raw payload -> unified response. Throws ProviderError when required
  // fields are missing, never returns a partially filled record.
  SearchResponse normalize(const json& payload, const SearchQuery& q) const;
};

const ProviderSpec& provider_spec(Provider p);

// Token bucket shared by every caller of the same provider.
class RateLimiter {
 public:
  RateLimiter(double per_second, double burst);
  void acquire();  // blocks until a token is available

 private:
  std::mutex mu_;
  double rate_;
  double burst_;
  double tokens_;
  std::chrono::steady_clock::time_point last_;
};

RateLimiter& shared_limiter(Provider p);

class HttpProvider final : public SearchProvider {
 public:
  HttpProvider(const ProviderSpec& spec, std::string api_key, std::shared_ptr<net::HttpClient> http,
               RateLimiter* limiter);
  Provider kind() const override { return spec_.kind; }
  SearchResponse search(const SearchQuery& q) override;

 private:
  ProviderSpec spec_;
  std::string api_key_;
  std::shared_ptr<net::HttpClient> http_;
  RateLimiter* limiter_;
};

// Fixture-backed provider: {"<query>": {"answer": ..., "results": [...]}, "*": {...}}.
// Queries are matched after trimming and case-folding; "*" is the fallback.
class MockProvider final : public SearchProvider {
 public:
  explicit MockProvider(json fixture, std::string label = "mock");
  static std::unique_ptr<MockProvider> from_file(const std::filesystem::path& path, std::string label = "mock");
  // A provider that always fails with `reason`, for fallback tests.
  static std::unique_ptr<MockProvider> failing(std::string reason, std::string label);

  Provider kind() const override { return Provider::mock; }
  std::string name() const override { return label_; }
  SearchResponse search(const SearchQuery& q) override;
  int calls() const { return calls_; }

 private:
  json fixture_;
  std::string label_;
  std::optional<std::string> failure_;
  int calls_ = 0;
};

// Ordered fallback across providers; the first success wins.
class SearchService {
 public:
  explicit SearchService(std::vector<std::shared_ptr<SearchProvider>> chain);
  SearchResponse search(const SearchQuery& q);  // QueryError / AllProvidersFailed
  const std::vector<std::shared_ptr<SearchProvider>>& chain() const { return chain_; }

 private:
  std::vector<std::shared_ptr<SearchProvider>> chain_;
};

// Providers from names; keys from SEARCH_API_KEY_<NAME>. "mock" needs a fixture.
std::vector<std::shared_ptr<SearchProvider>> make_chain(const std::vector<std::string>& names,
                                                        std::optional<std::filesystem::path> mock_fixture = {},
                                                        std::shared_ptr<net::HttpClient> http = nullptr);

// "Answer: ..." line if present, then numbered result blocks.
std::string render_text(const SearchResponse& r);
events::ObservationBody render_observation(const SearchResponse& r);

}  // namespace versa::search
