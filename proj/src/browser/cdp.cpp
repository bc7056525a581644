#include "versa/browser/cdp.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>
#include <chrono>
#include <cstdlib>
#include <cstring>
#include <deque>
#include <regex>
#include <set>
#include <thread>

#include "versa/core/bytes.hpp"

extern char** environ;

namespace versa::browser {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;
using Clock = std::chrono::steady_clock;

namespace {

std::chrono::milliseconds to_ms(double seconds) {
  return std::chrono::milliseconds(static_cast<long long>(seconds * 1000));
}

class WsTransport : public CdpTransport {
 public:
  WsTransport(const std::string& url, double timeout_s) : ws_(ioc_), timeout_s_(timeout_s) {
    std::smatch m;
    static const std::regex re(R"(^ws://([^/:]+):(\d+)(/.*)?$)");
    if (!std::regex_match(url, m, re)) throw std::invalid_argument("not a ws:// devtools url: " + url);
    std::string host = m[1];
    std::string port = m[2];
    std::string path = m[3].matched ? m[3].str() : "/";
    tcp::resolver resolver(ioc_);
    auto endpoints = resolver.resolve(host, port);
    asio::connect(ws_.next_layer(), endpoints);
    ws_.read_message_max(512u << 20);
    ws_.handshake(host + ":" + port, path);
  }

  ~WsTransport() override {
    beast::error_code ec;
    ws_.next_layer().shutdown(tcp::socket::shutdown_both, ec);
    ws_.next_layer().close(ec);
  }

  json call(const std::string& method, const json& params, const std::string& session_id) override {
    const long long id = next_id_++;
    json msg{{"id", id}, {"method", method}, {"params", params.is_null() ? json::object() : params}};
    if (!session_id.empty()) msg["sessionId"] = session_id;
    write(msg.dump());
    auto deadline = Clock::now() + to_ms(timeout_s_);
    pump_until(deadline, [&] { return replies_.contains(id); });
    auto it = replies_.find(id);
    if (it == replies_.end()) throw std::runtime_error(method + " timed out after " + std::to_string(timeout_s_) + "s");
    json reply = std::move(it->second);
    replies_.erase(it);
    if (auto err = reply.find("error"); err != reply.end()) {
      throw std::runtime_error(method + ": " + err->value("message", std::string("protocol error")));
    }
    return reply.value("result", json::object());
  }

  void on_event(EventHandler handler) override { handler_ = std::move(handler); }

  void poll(double seconds) override {
    pump_until(Clock::now() + to_ms(seconds), [] { return false; });
  }

 private:
  asio::io_context ioc_;
  websocket::stream<tcp::socket> ws_;
  double timeout_s_;
  long long next_id_ = 1;
  beast::flat_buffer buffer_;
  bool reading_ = false;
  bool closed_ = false;
  std::string close_reason_;
  std::map<long long, json> replies_;
  EventHandler handler_;

  void write(const std::string& text) {
    if (closed_) throw BrowserCrashed("devtools connection closed: " + close_reason_);
    bool done = false;
    beast::error_code result;
    ws_.text(true);
    ws_.async_write(asio::buffer(text), [&](beast::error_code ec, std::size_t) {
      result = ec;
      done = true;
    });
    auto deadline = Clock::now() + to_ms(timeout_s_);
    while (!done) {
      ioc_.restart();
      if (ioc_.run_one_until(deadline) == 0 && Clock::now() >= deadline) {
        throw BrowserCrashed("devtools write timed out");
      }
      dispatch();
    }
    if (result) {
      closed_ = true;
      close_reason_ = result.message();
      throw BrowserCrashed("devtools connection lost: " + result.message());
    }
  }

  void arm() {
    if (reading_ || closed_) return;
    reading_ = true;
    ws_.async_read(buffer_, [this](beast::error_code ec, std::size_t) {
      reading_ = false;
      if (ec) {
        closed_ = true;
        close_reason_ = ec.message();
        return;
      }
      inbox_.push_back(json::parse(beast::buffers_to_string(buffer_.data()), nullptr, false));
      buffer_.consume(buffer_.size());
    });
  }

  std::deque<json> inbox_;

  void dispatch() {
    while (!inbox_.empty()) {
      json m = std::move(inbox_.front());
      inbox_.pop_front();
      if (m.is_discarded()) continue;
      if (auto id = m.find("id"); id != m.end() && id->is_number_integer()) {
        replies_[id->get<long long>()] = std::move(m);
      } else if (m.contains("method") && handler_) {
        handler_(m["method"].get<std::string>(), m.value("params", json::object()));
      }
    }
  }

  template <typename Pred>
  void pump_until(Clock::time_point deadline, Pred done) {
    dispatch();
    while (!done()) {
      if (closed_) throw BrowserCrashed("devtools connection closed: " + close_reason_);
      arm();
      ioc_.restart();
      if (ioc_.run_one_until(deadline) == 0 && Clock::now() >= deadline) return;
      dispatch();
    }
  }
};

class BrowserProcess {
 public:
  BrowserProcess(const CdpOptions& o, int width, int height) {
    char tmpl[] = "/tmp/versa-browser-XXXXXX";
    if (!::mkdtemp(tmpl)) throw std::runtime_error("cannot create browser profile directory");
    profile_ = tmpl;
    std::vector<std::string> args{o.browser_path,
                                  "--headless=new",
                                  "--remote-debugging-port=0",
                                  "--user-data-dir=" + profile_.string(),
                                  "--no-first-run",
                                  "--no-default-browser-check",
                                  "--disable-gpu",
                                  "--hide-scrollbars",
                                  "--window-size=" + std::to_string(width) + "," + std::to_string(height)};
    if (::geteuid() == 0) args.push_back("--no-sandbox");
    for (const char* var : {"HTTPS_PROXY", "https_proxy", "HTTP_PROXY", "http_proxy"}) {
      if (const char* v = std::getenv(var); v && *v) {
        args.push_back(std::string("--proxy-server=") + v);
        break;
      }
    }
    for (const auto& a : o.extra_args) args.push_back(a);
    args.push_back("about:blank");

    int pipefd[2];
    if (::pipe(pipefd) != 0) throw std::runtime_error("pipe failed");
    posix_spawn_file_actions_t fa;
    posix_spawn_file_actions_init(&fa);
    posix_spawn_file_actions_adddup2(&fa, pipefd[1], 2);
    posix_spawn_file_actions_addclose(&fa, pipefd[0]);
    posix_spawn_file_actions_addopen(&fa, 1, "/dev/null", O_WRONLY, 0);
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    argv.push_back(nullptr);
    int rc = ::posix_spawnp(&pid_, argv[0], &fa, nullptr, argv.data(), environ);
    posix_spawn_file_actions_destroy(&fa);
    ::close(pipefd[1]);
    if (rc != 0) {
      ::close(pipefd[0]);
      std::error_code ec;
      std::filesystem::remove_all(profile_, ec);
      throw std::runtime_error("cannot start browser '" + o.browser_path + "': " + std::strerror(rc));
    }
    // The browser prints "DevTools listening on ws://..." on stderr.
    std::string out;
    auto deadline = Clock::now() + std::chrono::seconds(30);
    static const std::regex re(R"(DevTools listening on (ws://\S+))");
    std::smatch m;
    while (Clock::now() < deadline) {
      pollfd pfd{pipefd[0], POLLIN, 0};
      if (::poll(&pfd, 1, 200) <= 0) continue;
      char buf[4096];
      ssize_t n = ::read(pipefd[0], buf, sizeof buf);
      if (n <= 0) break;
      out.append(buf, static_cast<std::size_t>(n));
      if (std::regex_search(out, m, re)) {
        ws_url_ = m[1];
        break;
      }
    }
    stderr_fd_ = pipefd[0];
    if (ws_url_.empty()) {
      stop();
      throw std::runtime_error("browser did not expose a devtools endpoint; output: " + out.substr(0, 2000));
    }
    // Keep draining stderr so the browser never blocks on a full pipe.
    drain_ = std::thread([fd = stderr_fd_] {
      char buf[4096];
      while (::read(fd, buf, sizeof buf) > 0) {
      }
    });
  }

  ~BrowserProcess() { stop(); }

  const std::string& ws_url() const { return ws_url_; }

 private:
  pid_t pid_ = -1;
  int stderr_fd_ = -1;
  std::string ws_url_;
  std::filesystem::path profile_;
  std::thread drain_;

  void stop() {
    if (pid_ > 0) {
      ::kill(pid_, SIGTERM);
      for (int i = 0; i < 50; ++i) {
        int status = 0;
        if (::waitpid(pid_, &status, WNOHANG) == pid_) {
          pid_ = -1;
          break;
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(100));
      }
      if (pid_ > 0) {
        ::kill(pid_, SIGKILL);
        ::waitpid(pid_, nullptr, 0);
        pid_ = -1;
      }
    }
    if (drain_.joinable()) drain_.join();
    if (stderr_fd_ >= 0) ::close(stderr_fd_);
    stderr_fd_ = -1;
    std::error_code ec;
    if (!profile_.empty()) std::filesystem::remove_all(profile_, ec);
  }
};

std::string js_string(const std::string& s) { return json(s).dump(); }

std::string element_js(const std::string& bid) {
  return "document.querySelector('[" + std::string(kBidAttribute) + "=\"" + bid + "\"]')";
}

struct Key {
  std::string key;
  std::string code;
  int vk = 0;
  std::string text;
};

Key key_info(const std::string& name) {
  static const std::map<std::string, Key> kKeys{
      {"enter", {"Enter", "Enter", 13, "\r"}},     {"return", {"Enter", "Enter", 13, "\r"}},
      {"tab", {"Tab", "Tab", 9, ""}},              {"backspace", {"Backspace", "Backspace", 8, ""}},
      {"escape", {"Escape", "Escape", 27, ""}},    {"delete", {"Delete", "Delete", 46, ""}},
      {"pageup", {"PageUp", "PageUp", 33, ""}},    {"pagedown", {"PageDown", "PageDown", 34, ""}},
      {"end", {"End", "End", 35, ""}},             {"home", {"Home", "Home", 36, ""}},
      {"arrowleft", {"ArrowLeft", "ArrowLeft", 37, ""}}, {"arrowup", {"ArrowUp", "ArrowUp", 38, ""}},
      {"arrowright", {"ArrowRight", "ArrowRight", 39, ""}}, {"arrowdown", {"ArrowDown", "ArrowDown", 40, ""}},
      {"space", {" ", "Space", 32, " "}},
  };
  std::string lower;
  for (char c : name) lower += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (auto it = kKeys.find(lower); it != kKeys.end()) return it->second;
  if (name.size() == 1) {
    char c = name[0];
    int vk = std::isalpha(static_cast<unsigned char>(c)) ? std::toupper(static_cast<unsigned char>(c))
                                                          : static_cast<unsigned char>(c);
    return {name, "", vk, name};
  }
  throw ActionFailed("unsupported key '" + name + "'");
}

events::BBox shift(const events::BBox& b, double sx, double sy) { return {b.x - sx, b.y - sy, b.width, b.height}; }

events::BBox unite(const events::BBox& a, const events::BBox& b) {
  if (!a.has_area()) return b;
  if (!b.has_area()) return a;
  double x0 = std::min(a.x, b.x);
  double y0 = std::min(a.y, b.y);
  return {x0, y0, std::max(a.right(), b.right()) - x0, std::max(a.bottom(), b.bottom()) - y0};
}

std::string value_text(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  if (v.is_number()) return json(v).dump();
  return {};
}

}  // namespace

std::shared_ptr<CdpTransport> connect_websocket(const std::string& ws_url, double timeout_s) {
  return std::make_shared<WsTransport>(ws_url, timeout_s);
}

DomIndex index_dom_snapshot(const json& snapshot, std::string_view bid_attribute) {
  DomIndex idx;
  const auto& strings = snapshot.at("strings");
  auto str = [&](const json& i) -> std::string {
    if (!i.is_number_integer()) return {};
    auto k = i.get<long long>();
    return k >= 0 && static_cast<std::size_t>(k) < strings.size() ? strings[static_cast<std::size_t>(k)].get<std::string>()
                                                                   : std::string();
  };
  const auto& docs = snapshot.at("documents");
  if (docs.empty()) return idx;
  const auto& doc = docs[0];
  const auto& nodes = doc.at("nodes");
  const auto& backend = nodes.at("backendNodeId");
  if (auto attrs = nodes.find("attributes"); attrs != nodes.end()) {
    for (std::size_t i = 0; i < attrs->size() && i < backend.size(); ++i) {
      const auto& a = (*attrs)[i];
      for (std::size_t k = 0; k + 1 < a.size(); k += 2) {
        if (str(a[k]) == bid_attribute) idx.bid_of[backend[i].get<long long>()] = str(a[k + 1]);
      }
    }
  }
  const auto& layout = doc.at("layout");
  const auto& node_index = layout.at("nodeIndex");
  const auto& bounds = layout.at("bounds");
  for (std::size_t j = 0; j < node_index.size() && j < bounds.size(); ++j) {
    auto ni = node_index[j].get<std::size_t>();
    const auto& b = bounds[j];
    if (ni >= backend.size() || b.size() < 4) continue;
    events::BBox box{b[0].get<double>(), b[1].get<double>(), b[2].get<double>(), b[3].get<double>()};
    auto& slot = idx.bounds[backend[ni].get<long long>()];
    slot = unite(slot, box);
  }
  return idx;
}

AxNode ax_tree_from_cdp(const json& nodes, const DomIndex& dom, double scroll_x, double scroll_y) {
  std::map<std::string, const json*> by_id;
  const json* root = nullptr;
  for (const auto& n : nodes) {
    std::string id = value_text(n.at("nodeId"));
    by_id[id] = &n;
    if (!root && (!n.contains("parentId") || n["parentId"].is_null())) root = &n;
  }
  AxNode out;
  out.role = "RootWebArea";
  if (!root) return out;

  static const std::set<std::string> kFlatten{"generic", "none", "presentation", "", "Ignored", "IframePresentational"};
  static const std::set<std::string> kFlags{"focused", "disabled", "required", "selected", "readonly", "multiselectable"};
  static const std::set<std::string> kValued{"checked", "level", "expanded", "pressed"};
  std::set<std::string> active;

  std::function<std::vector<AxNode>(const json&)> build = [&](const json& n) -> std::vector<AxNode> {
    std::string id = value_text(n.at("nodeId"));
    if (!active.insert(id).second) return {};  // defensive against cycles
    std::vector<AxNode> kids;
    if (auto c = n.find("childIds"); c != n.end()) {
      for (const auto& cid : *c) {
        auto it = by_id.find(value_text(cid));
        if (it == by_id.end()) continue;
        for (auto& k : build(*it->second)) kids.push_back(std::move(k));
      }
    }
    active.erase(id);
    std::string role = n.contains("role") ? value_text(n["role"].value("value", json())) : "";
    if (role == "InlineTextBox" || role == "LineBreak") return {};
    if (n.value("ignored", false) || kFlatten.contains(role)) return kids;

    AxNode a;
    a.role = role;
    if (auto nm = n.find("name"); nm != n.end()) a.name = value_text(nm->value("value", json()));
    long long backend = n.value("backendDOMNodeId", -1LL);
    if (auto b = dom.bid_of.find(backend); b != dom.bid_of.end()) a.bid = b->second;
    if (auto b = dom.bounds.find(backend); b != dom.bounds.end()) {
      a.bbox = shift(b->second, scroll_x, scroll_y);
    } else {
      for (const auto& k : kids) a.bbox = unite(a.bbox, k.bbox);
    }
    if (auto props = n.find("properties"); props != n.end()) {
      for (const auto& p : *props) {
        std::string name = p.value("name", "");
        std::string v = value_text(p.value("value", json::object()).value("value", json()));
        if (kFlags.contains(name) && v == "true") a.properties.push_back(name);
        if (kValued.contains(name) && !v.empty()) a.properties.push_back(name + "=" + v);
      }
    }
    if (auto v = n.find("value"); v != n.end()) {
      std::string text = value_text(v->value("value", json()));
      if (!text.empty()) a.properties.push_back("value='" + text + "'");
    }
    a.children = std::move(kids);
    return {std::move(a)};
  };

  auto top = build(*root);
  if (top.size() == 1 && top[0].role == "RootWebArea") return std::move(top[0]);
  out.children = std::move(top);
  return out;
}

struct CdpDriver::Impl {
  struct Tab {
    std::string target_id;
    std::string session_id;
  };

  std::shared_ptr<CdpTransport> t;
  CdpOptions o;
  std::unique_ptr<BrowserProcess> process;
  std::vector<Tab> tabs;
  std::size_t active = 0;
  int width = 1280;
  int height = 720;
  int inflight = 0;
  Clock::time_point last_network = Clock::now();

  Impl(std::shared_ptr<CdpTransport> transport, CdpOptions options) : t(std::move(transport)), o(std::move(options)) {
    if (o.annotator_script.empty()) {
      throw std::invalid_argument("the devtools driver needs the annotator script (browser/som_annotator.js)");
    }
    t->on_event([this](const std::string& method, const json&) {
      if (method == "Network.requestWillBeSent") {
        ++inflight;
        last_network = Clock::now();
      } else if (method == "Network.loadingFinished" || method == "Network.loadingFailed") {
        inflight = std::max(0, inflight - 1);
        last_network = Clock::now();
      }
    });
    if (o.download_dir) {
      std::filesystem::create_directories(*o.download_dir);
      t->call("Browser.setDownloadBehavior", {{"behavior", "allow"}, {"downloadPath", o.download_dir->string()}});
    }
    open_tab("about:blank");
  }

  json call(const std::string& method, const json& params = json::object()) {
    return t->call(method, params, tabs.at(active).session_id);
  }

  void init_session() {
    for (const char* domain : {"Page.enable", "Network.enable", "Runtime.enable", "Accessibility.enable"}) call(domain);
    call("Emulation.setDeviceMetricsOverride",
         {{"width", width}, {"height", height}, {"deviceScaleFactor", 1}, {"mobile", false}});
  }

  void open_tab(const std::string& url) {
    auto created = t->call("Target.createTarget", {{"url", "about:blank"}});
    std::string target = created.at("targetId");
    auto attached = t->call("Target.attachToTarget", {{"targetId", target}, {"flatten", true}});
    tabs.push_back({target, attached.at("sessionId")});
    active = tabs.size() - 1;
    init_session();
    if (url != "about:blank") navigate(url);
  }

  json eval(const std::string& expr) {
    auto r = call("Runtime.evaluate", {{"expression", expr}, {"returnByValue", true}, {"awaitPromise", true}});
    if (auto ex = r.find("exceptionDetails"); ex != r.end()) {
      std::string text = ex->value("text", "script error");
      if (auto e = ex->find("exception"); e != ex->end()) text += ": " + e->value("description", "");
      throw ActionFailed("page script failed: " + text);
    }
    return r.value("result", json::object()).value("value", json());
  }

  void settle() {
    auto start = Clock::now();
    while (inflight > 0 && Clock::now() - start < to_ms(o.settle_cap_s)) t->poll(0.05);
    auto quiet_start = Clock::now();
    while (Clock::now() - quiet_start < to_ms(o.quiet_period_s)) t->poll(0.05);
  }

  void wait_loaded() {
    auto deadline = Clock::now() + to_ms(o.navigation_timeout_s);
    while (Clock::now() < deadline) {
      json state;
      try {
        state = eval("document.readyState");
      } catch (const ActionFailed&) {
      }
      if (state == "complete" || state == "interactive") break;
      t->poll(0.1);
    }
    settle();
  }

  void navigate(const std::string& url) {
    auto r = call("Page.navigate", {{"url", url}});
    if (auto err = r.find("errorText"); err != r.end() && !err->get<std::string>().empty()) {
      // Downloads abort the navigation but are not failures.
      if (err->get<std::string>() != "net::ERR_ABORTED" || !o.download_dir) {
        throw ActionFailed("navigation to " + url + " failed: " + err->get<std::string>());
      }
    }
    inflight = 0;
    wait_loaded();
  }

  // Scrolls the element into view; returns its centre in viewport pixels.
  std::pair<double, double> locate(const std::string& bid) {
    json r = eval("(() => { const el = " + element_js(bid) +
                  "; if (!el) return null; el.scrollIntoView({block: 'center', inline: 'center'});"
                  " const r = el.getBoundingClientRect(); const s = getComputedStyle(el);"
                  " return [r.x + r.width / 2, r.y + r.height / 2, r.width, r.height,"
                  " s.visibility !== 'hidden' && s.display !== 'none', !!el.disabled]; })()");
    if (r.is_null()) throw ActionFailed("no element with bid '" + bid + "' on the current page");
    if (r[2].get<double>() <= 0 || r[3].get<double>() <= 0 || !r[4].get<bool>()) {
      throw ActionFailed("element " + bid + " is not visible");
    }
    if (r[5].get<bool>()) throw ActionFailed("element " + bid + " is disabled");
    return {r[0].get<double>(), r[1].get<double>()};
  }

  void mouse(const std::string& type, double x, double y, json extra = json::object()) {
    json p{{"type", type}, {"x", x}, {"y", y}};
    for (auto& [k, v] : extra.items()) p[k] = v;
    call("Input.dispatchMouseEvent", p);
  }

  void press(const std::string& combo) {
    std::vector<std::string> parts;
    std::size_t pos = 0;
    while (true) {
      auto plus = combo.find('+', pos);
      if (plus == std::string::npos || plus + 1 == combo.size()) {
        parts.push_back(combo.substr(pos));
        break;
      }
      parts.push_back(combo.substr(pos, plus - pos));
      pos = plus + 1;
    }
    int modifiers = 0;
    for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
      std::string m;
      for (char c : parts[i]) m += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      if (m == "alt") modifiers |= 1;
      else if (m == "control" || m == "ctrl") modifiers |= 2;
      else if (m == "meta") modifiers |= 4;
      else if (m == "shift") modifiers |= 8;
      else throw ActionFailed("unsupported modifier '" + parts[i] + "'");
    }
    Key k = key_info(parts.back());
    json down{{"type", k.text.empty() || (modifiers & 7) ? "rawKeyDown" : "keyDown"},
              {"key", k.key},
              {"windowsVirtualKeyCode", k.vk},
              {"modifiers", modifiers}};
    if (!k.code.empty()) down["code"] = k.code;
    if (!k.text.empty() && !(modifiers & 7)) down["text"] = k.text;
    call("Input.dispatchKeyEvent", down);
    json up{{"type", "keyUp"}, {"key", k.key}, {"windowsVirtualKeyCode", k.vk}, {"modifiers", modifiers}};
    call("Input.dispatchKeyEvent", up);
  }

  void history(int step) {
    auto h = call("Page.getNavigationHistory");
    int index = h.at("currentIndex").get<int>() + step;
    const auto& entries = h.at("entries");
    if (index < 0 || static_cast<std::size_t>(index) >= entries.size()) {
      throw ActionFailed(step < 0 ? "no previous page in this tab" : "no next page in this tab");
    }
    call("Page.navigateToHistoryEntry", {{"entryId", entries[static_cast<std::size_t>(index)].at("id")}});
    wait_loaded();
  }

  void perform(const BrowserAction& a) {
    switch (a.verb) {
      case Verb::goto_url: navigate(*a.url); break;
      case Verb::click: {
        auto [x, y] = locate(*a.bid);
        mouse("mouseMoved", x, y);
        mouse("mousePressed", x, y, {{"button", "left"}, {"clickCount", 1}});
        mouse("mouseReleased", x, y, {{"button", "left"}, {"clickCount", 1}});
        wait_loaded();
        break;
      }
      case Verb::hover: {
        auto [x, y] = locate(*a.bid);
        mouse("mouseMoved", x, y);
        settle();
        break;
      }
      case Verb::fill: {
        locate(*a.bid);
        json r = eval("(() => { const el = " + element_js(*a.bid) +
                      "; const text = " + js_string(*a.text) +
                      "; if (el.readOnly) return 'readonly';"
                      " if (el instanceof HTMLInputElement || el instanceof HTMLTextAreaElement) {"
                      " el.focus(); const d = Object.getOwnPropertyDescriptor(Object.getPrototypeOf(el), 'value');"
                      " d.set.call(el, text); } else if (el.isContentEditable) { el.focus(); el.textContent = text; }"
                      " else return 'notfillable';"
                      " el.dispatchEvent(new Event('input', {bubbles: true}));"
                      " el.dispatchEvent(new Event('change', {bubbles: true})); return 'ok'; })()");
        if (r == "readonly") throw ActionFailed("element " + *a.bid + " is read-only");
        if (r != "ok") throw ActionFailed("element " + *a.bid + " cannot be filled");
        settle();
        break;
      }
      case Verb::select_option: {
        locate(*a.bid);
        json r = eval("(() => { const el = " + element_js(*a.bid) + "; const want = " + js_string(*a.value) +
                      "; if (!(el instanceof HTMLSelectElement)) return ['notselect'];"
                      " const opts = Array.from(el.options);"
                      " let o = opts.find(o => o.value === want || o.text.trim() === want) ||"
                      " opts.find(o => o.text.trim().toLowerCase() === want.toLowerCase());"
                      " if (!o) return ['missing'].concat(opts.map(o => o.text.trim()));"
                      " el.value = o.value; el.dispatchEvent(new Event('input', {bubbles: true}));"
                      " el.dispatchEvent(new Event('change', {bubbles: true})); return ['ok']; })()");
        std::string status = r.at(0);
        if (status == "notselect") throw ActionFailed("element " + *a.bid + " is not a select box");
        if (status == "missing") {
          std::string list;
          for (std::size_t i = 1; i < r.size(); ++i) list += (i == 1 ? "'" : ", '") + r[i].get<std::string>() + "'";
          throw ActionFailed("no option '" + *a.value + "' in " + *a.bid + "; options: " + list);
        }
        settle();
        break;
      }
      case Verb::press:
        press(*a.key);
        wait_loaded();
        break;
      case Verb::scroll:
        mouse("mouseWheel", width / 2.0, height / 2.0, {{"deltaX", a.dx}, {"deltaY", a.dy}});
        settle();
        break;
      case Verb::go_back: history(-1); break;
      case Verb::go_forward: history(1); break;
      case Verb::new_tab: open_tab(a.url.value_or("about:blank")); break;
      case Verb::close_tab:
        t->call("Target.closeTarget", {{"targetId", tabs[active].target_id}});
        tabs.erase(tabs.begin() + static_cast<std::ptrdiff_t>(active));
        if (tabs.empty()) {
          open_tab("about:blank");
        } else {
          active = std::min(active, tabs.size() - 1);
          t->call("Target.activateTarget", {{"targetId", tabs[active].target_id}});
        }
        break;
      case Verb::switch_tab:
        if (static_cast<std::size_t>(*a.tab) >= tabs.size()) {
          throw ActionFailed("tab " + std::to_string(*a.tab) + " does not exist; " + std::to_string(tabs.size()) +
                             " tab(s) open");
        }
        active = static_cast<std::size_t>(*a.tab);
        t->call("Target.activateTarget", {{"targetId", tabs[active].target_id}});
        break;
      case Verb::noop: break;
    }
  }

  PageState snapshot() {
    PageState s;
    json payload = eval("(" + o.annotator_script + ").annotate()");
    try {
      s.annotation = payload_from_json(payload);
    } catch (const std::invalid_argument& e) {
      throw BrowserCrashed(std::string("annotator returned a bad payload: ") + e.what());
    }
    json meta = eval("[location.href, document.title]");
    s.url = meta.at(0);
    s.title = meta.at(1);
    auto snap = call("DOMSnapshot.captureSnapshot", {{"computedStyles", json::array()}});
    DomIndex dom = index_dom_snapshot(snap, kBidAttribute);
    auto tree = call("Accessibility.getFullAXTree");
    const auto& vp = s.annotation.viewport;
    s.axtree = ax_tree_from_cdp(tree.at("nodes"), dom, vp.scroll_x, vp.scroll_y);
    s.axtree.bbox = {0, -vp.scroll_y, static_cast<double>(vp.width), std::max<double>(vp.page_height, vp.height)};
    auto shot = call("Page.captureScreenshot", {{"format", "png"}});
    s.screenshot_png = base64_decode(shot.at("data").get<std::string>());
    auto targets = t->call("Target.getTargets", json::object());
    for (const auto& tab : tabs) {
      std::string url;
      for (const auto& info : targets.at("targetInfos")) {
        if (info.value("targetId", "") == tab.target_id) url = info.value("url", "");
      }
      s.tabs.push_back(url);
    }
    s.active_tab = static_cast<int>(active);
    return s;
  }
};

CdpDriver::CdpDriver(std::shared_ptr<CdpTransport> transport, CdpOptions options)
    : impl_(std::make_unique<Impl>(std::move(transport), std::move(options))) {}

CdpDriver::~CdpDriver() = default;

std::unique_ptr<CdpDriver> CdpDriver::launch(CdpOptions options) {
  if (options.browser_path.empty()) throw std::invalid_argument("no browser binary configured");
  auto process = std::make_unique<BrowserProcess>(options, 1280, 720);
  auto transport = connect_websocket(process->ws_url(), options.navigation_timeout_s);
  auto driver = std::make_unique<CdpDriver>(transport, std::move(options));
  driver->impl_->process = std::move(process);
  return driver;
}

void CdpDriver::perform(const BrowserAction& action) {
  try {
    validate(action);
    impl_->perform(action);
  } catch (const ActionError& e) {
    throw ActionFailed(std::string("invalid action: ") + e.what());
  } catch (const BrowserCrashed&) {
    throw;
  } catch (const ActionFailed&) {
    throw;
  } catch (const std::runtime_error& e) {
    throw ActionFailed(e.what());
  }
}

PageState CdpDriver::snapshot() { return impl_->snapshot(); }

void CdpDriver::set_viewport(int width, int height) {
  impl_->width = width;
  impl_->height = height;
  for (std::size_t i = 0; i < impl_->tabs.size(); ++i) {
    impl_->t->call("Emulation.setDeviceMetricsOverride",
                   {{"width", width}, {"height", height}, {"deviceScaleFactor", 1}, {"mobile", false}},
                   impl_->tabs[i].session_id);
  }
}

}  // namespace versa::browser
