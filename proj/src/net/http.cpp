#include <httplib.h>

#include "versa/net/http.hpp"

namespace versa::net {

UrlParts parse_url(const std::string& url) {
  UrlParts p;
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw std::invalid_argument("not an absolute URL: " + url);
  p.scheme = url.substr(0, scheme_end);
  if (p.scheme != "http" && p.scheme != "https") throw std::invalid_argument("unsupported scheme: " + p.scheme);
  auto host_start = scheme_end + 3;
  auto path_start = url.find_first_of("/?#", host_start);
  std::string authority = url.substr(host_start, path_start == std::string::npos ? std::string::npos
                                                                                  : path_start - host_start);
  if (authority.empty()) throw std::invalid_argument("URL has no host: " + url);
  p.port = p.scheme == "https" ? 443 : 80;
  if (auto colon = authority.rfind(':'); colon != std::string::npos && authority.find(']') == std::string::npos) {
    p.host = authority.substr(0, colon);
    p.port = std::stoi(authority.substr(colon + 1));
  } else {
    p.host = authority;
  }
  p.path = path_start == std::string::npos ? "/" : url.substr(path_start);
  if (p.path.front() != '/') p.path = "/" + p.path;
  if (auto hash = p.path.find('#'); hash != std::string::npos) p.path.resize(hash);
  return p;
}

std::string url_encode(const std::string& s) {
  static constexpr char kHex[] = "0123456789ABCDEF";
  std::string out;
  for (unsigned char c : s) {
    if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
      out.push_back(static_cast<char>(c));
    } else {
      out.push_back('%');
      out.push_back(kHex[c >> 4]);
      out.push_back(kHex[c & 15]);
    }
  }
  return out;
}

namespace {

class HttplibClient final : public HttpClient {
 public:
  HttpResponse send(const HttpRequest& request) override {
    UrlParts url = parse_url(request.url);
    httplib::Client client(url.scheme + "://" + url.host + ":" + std::to_string(url.port));
    auto secs = static_cast<time_t>(request.timeout_s);
    auto usecs = static_cast<time_t>((request.timeout_s - static_cast<double>(secs)) * 1e6);
    client.set_connection_timeout(secs, usecs);
    client.set_read_timeout(secs, usecs);
    client.set_write_timeout(secs, usecs);
    if (const char* proxy = std::getenv(url.scheme == "https" ? "HTTPS_PROXY" : "HTTP_PROXY")) {
      try {
        UrlParts p = parse_url(proxy);
        client.set_proxy(p.host, p.port);
      } catch (const std::exception&) {
      }
    }
    httplib::Headers headers;
    for (const auto& [k, v] : request.headers) headers.emplace(k, v);
    httplib::Result res;
    if (request.method == "GET") {
      res = client.Get(url.path, headers);
    } else if (request.method == "POST") {
      res = client.Post(url.path, headers, request.body, request.content_type);
    } else {
      throw std::invalid_argument("unsupported HTTP method: " + request.method);
    }
    if (!res) throw TransportError(request.method + " " + request.url + ": " + httplib::to_string(res.error()));
    return HttpResponse{res->status, res->body};
  }
};

}  // namespace

std::shared_ptr<HttpClient> default_http_client() { return std::make_shared<HttplibClient>(); }

}  // namespace versa::net
