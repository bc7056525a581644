#include <doctest.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <thread>

#include "versa/core/text.hpp"
#include "versa/runtime/client.hpp"
#include "versa/runtime/runtime.hpp"
#include "versa/runtime/sandbox_fs.hpp"
#include "versa/runtime/server.hpp"

using namespace versa;
using namespace versa::runtime;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("versa-rt-" + new_call_id());
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

events::ExecOutput exec_of(const Response& r) {
  REQUIRE(r.ok);
  REQUIRE(r.observation.has_value());
  return std::get<events::ExecOutput>(r.observation->content);
}

events::FileView file_of(const Response& r) {
  REQUIRE(r.ok);
  return std::get<events::FileView>(r.observation->content);
}

std::string text_of(const Response& r) {
  REQUIRE(r.observation.has_value());
  return std::get<events::TextContent>(r.observation->content).text;
}

struct Fixture {
  TempDir tmp;
  fs::path root;
  fs::path outside;
  std::unique_ptr<Runtime> rt;
  std::unique_ptr<InProcessEndpoint> ep;

  explicit Fixture(std::chrono::seconds idle = std::chrono::seconds(1800)) {
    root = tmp.path / "sandbox";
    outside = tmp.path / "outside";
    fs::create_directories(root);
    fs::create_directories(outside);
    std::ofstream(outside / "secret.txt") << "TOP-SECRET-VALUE\n";
    RuntimeConfig cfg;
    cfg.sandbox_root = root;
    cfg.idle_timeout = idle;
    rt = std::make_unique<Runtime>(cfg);
    ep = std::make_unique<InProcessEndpoint>(*rt);
  }
};

}  // namespace

TEST_CASE("shell output, exit status and persistent state") {
  Fixture f;
  SessionClient s(*f.ep);
  auto hi = exec_of(s.call("run_shell", {{"command", "echo hi"}}));
  CHECK(hi.stdout_text == "hi\n");
  CHECK(hi.exit_code == 0);
  CHECK_FALSE(hi.timed_out);

  s.call("run_shell", {{"command", "cd /tmp"}});
  CHECK(exec_of(s.call("run_shell", {{"command", "pwd"}})).stdout_text == "/tmp\n");

  s.call("run_shell", {{"command", "export GREETING=hello; mkdir -p " + f.root.string() + "/d && cd " + f.root.string() + "/d"}});
  CHECK(exec_of(s.call("run_shell", {{"command", "echo $GREETING; basename $(pwd)"}})).stdout_text == "hello\nd\n");

  auto fail = exec_of(s.call("run_shell", {{"command", "echo oops >&2; false"}}));
  CHECK(fail.exit_code == 1);
  CHECK(fail.stderr_text == "oops\n");

  auto ex = exec_of(s.call("run_shell", {{"command", "exit 3"}}));
  CHECK(ex.exit_code == 3);
  CHECK(exec_of(s.call("run_shell", {{"command", "echo alive"}})).stdout_text.find("alive") != std::string::npos);
}

TEST_CASE("shell timeout kills the command and keeps the session usable") {
  Fixture f;
  SessionClient s(*f.ep);
  s.call("run_shell", {{"command", "export KEEP=1"}});
  auto r = exec_of(s.call("run_shell", {{"command", "sleep 60"}}, 1.0));
  CHECK(r.timed_out);
  CHECK(r.exit_code == 124);
  CHECK(r.duration_ms < 10000);
  auto after = exec_of(s.call("run_shell", {{"command", "echo ok-$KEEP"}}));
  CHECK(after.stdout_text == "ok-1\n");
}

TEST_CASE("shell output beyond the byte budget is truncated with a marker") {
  Fixture f;
  SessionClient s(*f.ep);
  auto r = s.call("run_shell", {{"command", "head -c 200000 /dev/zero | tr '\\0' x"}});
  const auto& out = exec_of(r);
  CHECK(r.observation->truncated);
  CHECK(out.stdout_text.size() <= kOutputByteBudget);
  CHECK(out.stdout_text.find(text::kTruncationMarker) != std::string::npos);
}

TEST_CASE("interpreter keeps bindings and reports errors") {
  Fixture f;
  SessionClient s(*f.ep);
  s.call("run_code", {{"code", "x = 2"}});
  CHECK(exec_of(s.call("run_code", {{"code", "x + 3"}})).stdout_text.find("5") != std::string::npos);
  auto empty = exec_of(s.call("run_code", {{"code", ""}}));
  CHECK(empty.exit_code == 0);
  CHECK(empty.stdout_text.empty());
  auto err = exec_of(s.call("run_code", {{"code", "1/0"}}));
  CHECK(err.exit_code != 0);
  CHECK(err.stderr_text.find("Traceback") != std::string::npos);
  CHECK(err.stderr_text.find("ZeroDivisionError") != std::string::npos);
  auto printed = exec_of(s.call("run_code", {{"code", "print('a')\nprint('b')\n'tail'"}}));
  CHECK(printed.stdout_text == "a\nb\n'tail'\n");
}

TEST_CASE("interpreter timeout and crash restart the interpreter") {
  Fixture f;
  SessionClient s(*f.ep);
  s.call("run_code", {{"code", "y = 41"}});
  auto spin = exec_of(s.call("run_code", {{"code", "while True:\n    pass"}}, 1.0));
  CHECK(spin.timed_out);
  CHECK(spin.exit_code == 124);
  CHECK(exec_of(s.call("run_code", {{"code", "1 + 1"}})).stdout_text.find("2") != std::string::npos);

  auto crash = s.call("run_code", {{"code", "import os; os._exit(9)"}});
  REQUIRE(crash.ok);
  CHECK(crash.observation->kind == events::ObservationKind::error);
  CHECK(text_of(crash).find("restart") != std::string::npos);
  auto lost = exec_of(s.call("run_code", {{"code", "y"}}));
  CHECK(lost.stderr_text.find("NameError") != std::string::npos);
}

TEST_CASE("file write, read, edit and ambiguity reporting") {
  Fixture f;
  SessionClient s(*f.ep);
  REQUIRE(s.call("write_file", {{"path", "notes/a.txt"}, {"content", "a\nb\n"}}).ok);
  auto v = file_of(s.call("read_file", {{"path", "notes/a.txt"}}));
  CHECK(v.text == "a\nb\n");
  CHECK(v.line_count == 2);

  auto edited = s.call("edit_file", {{"path", "notes/a.txt"}, {"old_str", "b"}, {"new_str", "c"}});
  REQUIRE(edited.ok);
  CHECK(slurp(f.root / "notes/a.txt") == "a\nc\n");
  CHECK(text_of(edited).find("+c") != std::string::npos);

  s.call("write_file", {{"path", "dup.txt"}, {"content", "a\na\n"}});
  auto amb = s.call("edit_file", {{"path", "dup.txt"}, {"old_str", "a"}, {"new_str", "z"}});
  REQUIRE_FALSE(amb.ok);
  CHECK(amb.error->code == ErrorCode::edit_conflict);
  CHECK(amb.error->message.find("ambiguous edit") != std::string::npos);
  CHECK(amb.error->message.find("lines 1, 2") != std::string::npos);
  CHECK(slurp(f.root / "dup.txt") == "a\na\n");

  auto none = s.call("edit_file", {{"path", "dup.txt"}, {"old_str", "q"}, {"new_str", "z"}});
  REQUIRE_FALSE(none.ok);
  CHECK(none.error->message.find("no match") != std::string::npos);

  auto range = file_of(s.call("read_file", {{"path", "dup.txt"}, {"view_range", {2, 2}}}));
  CHECK(range.text == "a\n");
  CHECK(range.first_line == 2);
}

TEST_CASE("ambiguous-edit line numbers match a brute-force count") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    std::string hay;
    std::uniform_int_distribution<int> ch(0, 3);
    int len = 1 + static_cast<int>(rng() % 40);
    for (int i = 0; i < len; ++i) hay += "ab\n "[ch(rng)];
    std::string needle = (rng() % 2) ? "a" : "ab";
    std::vector<std::size_t> expected;
    for (std::size_t i = 0; i + needle.size() <= hay.size(); ++i) {
      if (hay.compare(i, needle.size(), needle) == 0) {
        expected.push_back(1 + static_cast<std::size_t>(std::count(hay.begin(), hay.begin() + static_cast<long>(i), '\n')));
      }
    }
    CHECK(occurrence_lines(hay, needle) == expected);
  }
}

TEST_CASE("read_file returns exactly what write_file stored") {
  Fixture f;
  SessionClient s(*f.ep);
  std::mt19937_64 rng(11);
  const std::vector<std::string> pieces = {"a", "line", "\n", "\r\n", "\t", " ", "é", "日本", "\n\n", "x y z"};
  for (int i = 0; i < 100; ++i) {
    std::string content;
    int n = static_cast<int>(rng() % 12);
    for (int k = 0; k < n; ++k) content += pieces[rng() % pieces.size()];
    REQUIRE(s.call("write_file", {{"path", "rt/f.txt"}, {"content", content}}).ok);
    CHECK(file_of(s.call("read_file", {{"path", "rt/f.txt"}})).text == content);
    CHECK(slurp(f.root / "rt/f.txt") == content);
  }
}

TEST_CASE("no file operation escapes the sandbox root") {
  Fixture f;
  SessionClient s(*f.ep);
  const std::string out = f.outside.string();
  fs::create_symlink(f.outside, f.root / "link_out");
  fs::create_symlink(f.outside / "secret.txt", f.root / "secret_link");
  fs::create_symlink(f.outside / "missing.txt", f.root / "dangling");
  fs::create_directories(f.root / "sub");
  fs::create_symlink("../../outside", f.root / "sub/up");

  const std::vector<std::string> escapes = {
      "../outside/secret.txt",
      "../../etc/passwd",
      out + "/secret.txt",
      "/etc/passwd",
      "/etc/shadow",
      "link_out/secret.txt",
      "secret_link",
      "sub/up/secret.txt",
      "sub/../../outside/secret.txt",
      "./../outside/secret.txt",
      "sub/../../../etc/hosts",
      "..",
      "../",
      "..//outside//secret.txt",
      f.root.string() + "/../outside/secret.txt",
      f.root.string() + "/link_out/secret.txt",
      "dangling",
      std::string("ok.txt\0../outside/secret.txt", 28),
      "link_out",
      "/proc/self/environ",
      "/",
      "sub/up",
  };
  REQUIRE(escapes.size() >= 20);

  int refused = 0;
  for (const auto& path : escapes) {
    CAPTURE(path);
    for (const char* tool : {"read_file", "view_file", "write_file", "edit_file"}) {
      json args = {{"path", path}};
      if (std::string(tool) == "write_file") args["content"] = "PWNED";
      if (std::string(tool) == "edit_file") {
        args["old_str"] = "TOP";
        args["new_str"] = "PWNED";
      }
      auto r = s.call(tool, args);
      CHECK_FALSE(r.ok);
      if (!r.ok) {
        CHECK(r.error->code == ErrorCode::forbidden);
        CHECK(r.error->message.find("TOP-SECRET") == std::string::npos);
        ++refused;
      }
    }
  }
  CHECK(refused == static_cast<int>(escapes.size()) * 4);
  CHECK(slurp(f.outside / "secret.txt") == "TOP-SECRET-VALUE\n");
  CHECK_FALSE(fs::exists(f.outside / "missing.txt"));
  std::size_t outside_entries = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(f.outside)) ++outside_entries;
  CHECK(outside_entries == 1);

  // Inside paths keep working, including through an in-root symlink.
  fs::create_symlink("sub", f.root / "alias");
  CHECK(s.call("write_file", {{"path", "alias/inside.txt"}, {"content", "fine"}}).ok);
  CHECK(slurp(f.root / "sub/inside.txt") == "fine");
}

TEST_CASE("a resent call_id returns the cached response without re-executing") {
  Fixture f;
  SessionClient s(*f.ep);
  Request req;
  req.call_id = "dup-1";
  req.session_id = s.session_id();
  req.tool = "run_shell";
  req.arguments = {{"command", "echo tick >> counter.txt; wc -l < counter.txt"}};
  s.call("run_shell", {{"command", "cd " + f.root.string()}});
  Response first = f.ep->call(req);
  Response second = f.ep->call(req);
  CHECK(to_json(first) == to_json(second));
  CHECK(slurp(f.root / "counter.txt") == "tick\n");

  // Concurrent duplicates wait for the single execution.
  req.call_id = "dup-2";
  req.arguments = {{"command", "sleep 0.3; echo tock >> counter2.txt"}};
  std::vector<std::thread> threads;
  std::vector<Response> replies(4);
  for (int i = 0; i < 4; ++i) threads.emplace_back([&, i] { replies[i] = f.ep->call(req); });
  for (auto& t : threads) t.join();
  for (const auto& r : replies) CHECK(to_json(r) == to_json(replies[0]));
  CHECK(slurp(f.root / "counter2.txt") == "tock\n");
}

TEST_CASE("protocol errors leave the session intact") {
  Fixture f;
  SessionClient s(*f.ep);
  s.call("run_shell", {{"command", "export MARK=kept"}});
  auto r = s.call("browse_web2", json::object());
  REQUIRE_FALSE(r.ok);
  CHECK(r.error->code == ErrorCode::unknown_tool);
  CHECK(r.error->message.find("run_shell") != std::string::npos);
  CHECK(exec_of(s.call("run_shell", {{"command", "echo $MARK"}})).stdout_text == "kept\n");

  auto missing = s.call("run_shell", json::object());
  REQUIRE_FALSE(missing.ok);
  CHECK(missing.error->code == ErrorCode::bad_request);
  CHECK(missing.error->message.find("command") != std::string::npos);

  CHECK(f.rt->handle_line("not json").find("\"code\":400") != std::string::npos);
}

TEST_CASE("sessions close, expire and report health") {
  Fixture f(std::chrono::seconds(0));
  auto health = [&] {
    Request h;
    h.call_id = new_call_id();
    h.tool = "health";
    return f.ep->call(h).result;
  };
  {
    SessionClient a(*f.ep);
    SessionClient b(*f.ep);
    CHECK(health()["status"] == "ok");
    CHECK(health()["active_sessions"] == 2);
    std::string id = b.session_id();
    b.close();
    CHECK(health()["active_sessions"] == 1);
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
    CHECK(f.rt->reap_idle() == 1);
    auto gone = a.call("run_shell", {{"command", "echo hi"}});
    REQUIRE_FALSE(gone.ok);
    CHECK(gone.error->code == ErrorCode::session_gone);
  }
  CHECK(health()["active_sessions"] == 0);
}

TEST_CASE("loopback calls match in-process calls") {
  Fixture fl;
  Fixture fr;
  Server server(*fr.rt, parse_bind("127.0.0.1:0"));
  server.start();
  RemoteEndpoint remote("127.0.0.1", server.port());
  SessionClient local(*fl.ep);
  SessionClient over(remote);
  const std::vector<std::pair<std::string, json>> script = {
      {"run_shell", {{"command", "echo hi"}}},
      {"run_shell", {{"command", "cd /tmp && pwd"}}},
      {"run_shell", {{"command", "printf 'a\\nb' ; echo err >&2; exit 4"}}},
      {"run_code", {{"code", "z = [1, 2]\nz * 2"}}},
      {"write_file", {{"path", "eq.txt"}, {"content", "one\ntwo\n"}}},
      {"read_file", {{"path", "eq.txt"}}},
      {"edit_file", {{"path", "eq.txt"}, {"old_str", "two"}, {"new_str", "three"}}},
      {"read_file", {{"path", "missing.txt"}}},
      {"view_file", {{"path", "eq.txt"}}},
  };
  // Each side has its own sandbox; compare with the root path factored out.
  auto normalized = [](const Response& r, const fs::path& root) {
    json j = to_json(r);
    j.erase("call_id");
    if (j.contains("observation") && j["observation"]["content"].contains("duration_ms")) {
      j["observation"]["content"].erase("duration_ms");
    }
    std::string s = j.dump();
    std::string canon = fs::canonical(root).string();
    for (auto p = s.find(canon); p != std::string::npos; p = s.find(canon)) s.replace(p, canon.size(), "{root}");
    return s;
  };
  for (const auto& [tool, args] : script) {
    CAPTURE(tool);
    CHECK(normalized(local.call(tool, args), fl.root) == normalized(over.call(tool, args), fr.root));
  }
  over.close();
  server.stop();
}

TEST_CASE("remote endpoint resends the same call_id after a dropped connection") {
  Fixture f;
  Server server(*f.rt, parse_bind(":0"));
  server.start();
  RemoteEndpoint remote("127.0.0.1", server.port());
  SessionClient s(remote);
  s.call("run_shell", {{"command", "cd " + f.root.string()}});
  remote.drop_after_send(2);
  auto r = s.call("run_shell", {{"command", "echo tick >> counter.txt; wc -l < counter.txt"}});
  CHECK(exec_of(r).stdout_text == "1\n");
  CHECK(slurp(f.root / "counter.txt") == "tick\n");
  s.close();
  server.stop();
}

TEST_CASE("an unreachable runtime raises a transport error") {
  int port = 0;
  {
    Fixture f;
    Server probe(*f.rt, parse_bind("127.0.0.1:0"));
    port = probe.port();
  }
  RetryPolicy fast;
  fast.attempts = 2;
  fast.backoff = std::chrono::milliseconds(10);
  RemoteEndpoint remote("127.0.0.1", static_cast<std::uint16_t>(port), fast);
  Request h;
  h.call_id = new_call_id();
  h.tool = "health";
  CHECK_THROWS_AS(remote.call(h), TransportError);
}

TEST_CASE("view_file converts rich formats inside the sandbox") {
  Fixture f;
  SessionClient s(*f.ep);
  fs::copy_file(fs::path(VERSA_TEST_FIXTURES) / "convert/two_sheets.xlsx", f.root / "book.xlsx");
  auto v = file_of(s.call("view_file", {{"path", "book.xlsx"}}));
  CHECK(v.kind == events::FileKind::converted_markdown);
  CHECK(v.text.find("## Inventory") != std::string::npos);
  std::ofstream(f.root / "blob.bin", std::ios::binary) << std::string("\x00\x01\x02\x03", 4);
  auto bad = s.call("view_file", {{"path", "blob.bin"}});
  REQUIRE_FALSE(bad.ok);
  CHECK(bad.error->code == ErrorCode::unprocessable);
  CHECK(bad.error->message.find("shell") != std::string::npos);
}

TEST_CASE("bind addresses parse") {
  CHECK(parse_bind("0.0.0.0:8700").host == "0.0.0.0");
  CHECK(parse_bind("0.0.0.0:8700").port == 8700);
  CHECK(parse_bind(":9").host == "127.0.0.1");
  CHECK(parse_bind("9000").port == 9000);
  CHECK_THROWS(parse_bind("host:99999"));
}
