#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "versa/browser/driver.hpp"
#include "versa/core/json.hpp"

namespace versa::browser {

// A devtools-protocol connection. `session_id` empty means the browser
// target. Throws BrowserCrashed when the connection is gone and
// std::runtime_error carrying the protocol error message otherwise.
class CdpTransport {
 public:
  using EventHandler = std::function<void(const std::string& method, const json& params)>;
  virtual ~CdpTransport() = default;
  virtual json call(const std::string& method, const json& params, const std::string& session_id = {}) = 0;
  virtual void on_event(EventHandler handler) = 0;
  // Delivers incoming events for up to `seconds`.
  virtual void poll(double seconds) = 0;
};

// Blocking websocket client with a background reader thread.
std::shared_ptr<CdpTransport> connect_websocket(const std::string& ws_url, double timeout_s = 30);

struct CdpOptions {
  std::string browser_path;  // chrome or chromium binary
  std::vector<std::string> extra_args;
  std::optional<std::filesystem::path> download_dir;
  std::string annotator_script;  // JS source; see annotation.hpp
  double navigation_timeout_s = 30;
  double settle_cap_s = 2;
  double quiet_period_s = 0.3;
};

// Drives Chromium over the devtools protocol. The annotator script assigns
// bids in the page; the accessibility tree comes from the browser and is
// joined to bids through a DOM snapshot.
class CdpDriver : public BrowserDriver {
 public:
  CdpDriver(std::shared_ptr<CdpTransport> transport, CdpOptions options);
  ~CdpDriver() override;

  // Starts a headless browser (honouring HTTP(S)_PROXY) and connects to it.
  static std::unique_ptr<CdpDriver> launch(CdpOptions options);

  void perform(const BrowserAction& action) override;
  PageState snapshot() override;
  void set_viewport(int width, int height) override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Pure conversions, exposed for tests.
struct DomIndex {
  std::map<long long, std::string> bid_of;     // backend node id -> bid
  std::map<long long, events::BBox> bounds;    // backend node id -> document box
};
DomIndex index_dom_snapshot(const json& snapshot, std::string_view bid_attribute);

// Builds the tree from Accessibility.getFullAXTree nodes. Ignored and
// generic nodes are flattened into their parents; boxes become
// viewport-relative via the scroll offsets.
AxNode ax_tree_from_cdp(const json& nodes, const DomIndex& dom, double scroll_x, double scroll_y);

}  // namespace versa::browser
