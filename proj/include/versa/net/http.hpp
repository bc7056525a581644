#pragma once

#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace versa::net {

// Connection refused, DNS failure, read timeout: anything that never
// produced an HTTP status.
class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct HttpRequest {
  std::string method = "GET";
  std::string url;  // absolute, http or https
  std::vector<std::pair<std::string, std::string>> headers;
  std::string body;
  std::string content_type = "application/json";
  double timeout_s = 60;
};

struct HttpResponse {
  int status = 0;
  std::string body;
};

class HttpClient {
 public:
  virtual ~HttpClient() = default;
  virtual HttpResponse send(const HttpRequest& request) = 0;
};

std::shared_ptr<HttpClient> default_http_client();

struct UrlParts {
  std::string scheme;
  std::string host;
  int port = 0;
  std::string path;  // includes query, begins with '/'
};

// Throws std::invalid_argument for anything but absolute http(s) URLs.
UrlParts parse_url(const std::string& url);

std::string url_encode(const std::string& s);

}  // namespace versa::net
