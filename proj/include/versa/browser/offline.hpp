#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>

#include "versa/browser/driver.hpp"

namespace versa::browser {

struct Resource {
  std::string url;  // final URL after any redirect
  std::string content_type = "text/html";
  std::string body;
};

// Resolves an absolute URL to content; nullopt means the request failed.
using Site = std::function<std::optional<Resource>(const std::string& url)>;

// Serves http(s)://host/path from root/host/path, with index.html for
// directories. "{{name}}" in HTML bodies is replaced by the HTML-escaped
// query parameter `name` (empty if absent).
Site directory_site(std::filesystem::path root);

struct OfflineOptions {
  int width = 1280;
  int height = 720;
  // Non-HTML responses are saved here when set; otherwise shown as text.
  std::optional<std::filesystem::path> download_dir;
};

// A self-contained browser for fixture sites: HTML parsing, a simple block
// and inline-flow layout, bitmap-font rendering, forms, tabs and history.
// Supports two declarative behaviours for dynamic pages:
//   data-toggle="ID"               click shows/hides element ID
//   data-append-to="ID" data-append-html="..."  click appends markup to ID
class OfflineDriver : public BrowserDriver {
 public:
  explicit OfflineDriver(Site site, OfflineOptions options = {});
  ~OfflineDriver() override;

  void perform(const BrowserAction& action) override;
  PageState snapshot() override;
  void set_viewport(int width, int height) override;

  // Loads markup directly as the current page of the active tab.
  void load_html(const std::string& url, const std::string& html);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Resolves `ref` against `base` (RFC 3986 reference resolution, simplified).
std::string resolve_url(const std::string& base, const std::string& ref);

}  // namespace versa::browser
