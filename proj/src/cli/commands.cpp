#include "versa/cli/commands.hpp"

#include <glob.h>

#include <CLI11.hpp>
#include <atomic>
#include <chrono>
#include <csignal>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <thread>

#include "versa/agent/controller.hpp"
#include "versa/browser/cdp.hpp"
#include "versa/browser/offline.hpp"
#include "versa/browser/session.hpp"
#include "versa/cli/config.hpp"
#include "versa/core/assets.hpp"
#include "versa/core/text.hpp"
#include "versa/core/trajectory.hpp"
#include "versa/eval/suite.hpp"
#include "versa/llm/prompt.hpp"
#include "versa/runtime/client.hpp"
#include "versa/runtime/server.hpp"
#include "versa/search/search.hpp"

namespace versa::cli {

namespace fs = std::filesystem;

namespace {

std::atomic<bool> g_interrupted{false};

extern "C" void on_signal(int) { g_interrupted.store(true); }

void install_signal_handlers() {
  g_interrupted.store(false);
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
}

// Option storage for the shared settings of one subcommand.
struct SettingFlags {
  std::map<std::string, std::string> values;
  std::map<std::string, bool> switches;
  std::vector<std::pair<std::string, CLI::Option*>> options;

  void attach(CLI::App* cmd, const std::vector<std::string>& keys) {
    for (const auto& key : keys) {
      const SettingSpec* spec = find_setting(key);
      if (!spec) throw std::logic_error("no setting " + key);
      CLI::Option* opt = nullptr;
      if (spec->type == SettingType::boolean) {
        opt = cmd->add_flag(flag_name(*spec), switches[key], spec->help);
      } else {
        opt = cmd->add_option(flag_name(*spec), values[key], spec->help);
      }
      options.emplace_back(key, opt);
    }
  }

  std::map<std::string, std::string> given() const {
    std::map<std::string, std::string> out;
    for (const auto& [key, opt] : options) {
      if (opt->count() == 0) continue;
      auto sw = switches.find(key);
      out[key] = sw != switches.end() ? (sw->second ? "true" : "false") : values.at(key);
    }
    return out;
  }
};

const std::vector<std::string> kAgentKeys = {
    "k",          "tau",          "max_steps",     "temperature", "search_provider", "search_fixture", "backend",
    "transcript", "model",        "base_url",      "context_window", "viewport",     "axtree_budget",  "output_budget",
    "output_dir", "loop_nudge",   "sandbox",       "sandbox_root", "runtime",        "runtime_config", "browser",
    "browser_path", "site",       "record"};

std::string timestamp_dir() {
  auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream ss;
  ss << "runs/" << std::put_time(&tm, "%Y%m%d-%H%M%S");
  return ss.str();
}

CliConfig load_cli_config(const std::string& config_path, const SettingFlags& flags, std::ostream& err) {
  std::map<std::string, std::string> file_values;
  std::string path = config_path;
  if (path.empty()) {
    if (const char* env = std::getenv("VERSA_CONFIG"); env && *env) path = env;
  }
  if (!path.empty()) file_values = load_config_file(path);
  auto settings = resolve_settings(file_values, process_environment(), flags.given());
  CliConfig cfg = build_config(settings);
  if (cfg.output_dir.empty()) cfg.output_dir = timestamp_dir();
  err << "effective configuration:\n" << render_settings(cfg.settings);
  return cfg;
}

void write_text(const fs::path& path, const std::string& body) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << body;
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

struct RuntimeHandle {
  std::unique_ptr<runtime::Runtime> runtime;
  std::unique_ptr<runtime::Endpoint> endpoint;
  std::optional<fs::path> local_root;
};

runtime::RuntimeConfig runtime_config_for(const CliConfig& c, const fs::path& default_root) {
  runtime::RuntimeConfig rc;
  if (c.runtime_config) rc = runtime::RuntimeConfig::from_json(json::parse(assets::read_file(*c.runtime_config)));
  if (c.settings.at("sandbox").source != Layer::fallback || !c.runtime_config) rc.mode = c.sandbox;
  if (c.sandbox_root) rc.sandbox_root = *c.sandbox_root;
  if (rc.sandbox_root.empty()) rc.sandbox_root = default_root;
  rc.output_budget = c.agent.output_byte_budget;
  fs::create_directories(rc.sandbox_root);
  rc.validate();
  return rc;
}

RuntimeHandle make_runtime(const CliConfig& c) {
  RuntimeHandle h;
  if (c.runtime_address) {
    auto bind = runtime::parse_bind(*c.runtime_address);
    h.endpoint = std::make_unique<runtime::RemoteEndpoint>(bind.host, bind.port);
    return h;
  }
  auto rc = runtime_config_for(c, c.output_dir / "sandbox");
  h.local_root = rc.sandbox_root;
  h.runtime = std::make_unique<runtime::Runtime>(rc);
  h.endpoint = std::make_unique<runtime::InProcessEndpoint>(*h.runtime);
  return h;
}

std::unique_ptr<browser::BrowserDriver> make_driver(const CliConfig& c, const std::optional<fs::path>& site,
                                                    const fs::path& download_dir) {
  if (c.browser == BrowserKind::cdp) {
    const fs::path annotator = assets::root() / browser::kAnnotatorAsset;
    if (!fs::exists(annotator)) {
      throw ConfigError("the cdp browser needs the Set-of-Marks annotator script at " + annotator.string());
    }
    if (c.browser_path.empty()) throw ConfigError("the cdp browser needs --browser-path");
    browser::CdpOptions o;
    o.browser_path = c.browser_path;
    o.download_dir = download_dir;
    o.annotator_script = assets::read_file(annotator);
    return browser::CdpDriver::launch(o);
  }
  browser::Site s = site ? browser::directory_site(*site) : browser::Site([](const std::string&) { return std::nullopt; });
  browser::OfflineOptions o;
  o.width = c.viewport_width;
  o.height = c.viewport_height;
  o.download_dir = download_dir;
  return std::make_unique<browser::OfflineDriver>(std::move(s), o);
}

std::unique_ptr<search::SearchService> make_search(const CliConfig& c, std::ostream& err) {
  try {
    return std::make_unique<search::SearchService>(search::make_chain(c.agent.provider_chain, c.search_fixture));
  } catch (const std::exception& e) {
    err << "warning: search disabled: " << e.what() << "\n";
    return nullptr;
  }
}

llm::BackendSpec backend_spec(const CliConfig& c) {
  llm::BackendSpec spec = c.agent.backend;
  spec.apply_environment();
  try {
    spec.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return spec;
}

std::string read_task(const std::string& arg) {
  std::error_code ec;
  if (fs::is_regular_file(arg, ec)) return text::trim(assets::read_file(arg));
  return arg;
}

json result_json(const agent::RunResult& r) {
  json j{{"status", agent::to_string(r.status)},
         {"steps_used", r.steps_used},
         {"usage", {{"input_tokens", r.usage_totals.input_tokens}, {"output_tokens", r.usage_totals.output_tokens}}},
         {"warnings", r.warnings}};
  j["final_message"] = r.final_message ? json(*r.final_message) : json(nullptr);
  j["extracted_answer"] = r.extracted_answer ? json(*r.extracted_answer) : json(nullptr);
  j["error"] = r.error ? json(*r.error) : json(nullptr);
  return j;
}

int exit_code_for(agent::RunStatus s) {
  switch (s) {
    case agent::RunStatus::finished: return kExitOk;
    case agent::RunStatus::step_limit: return kExitStepLimit;
    case agent::RunStatus::fatal_error: return kExitFatal;
  }
  return kExitFatal;
}

int cmd_run(const std::string& task_arg, const std::string& config_path, const SettingFlags& flags, std::ostream& out,
            std::ostream& err) {
  CliConfig cfg = load_cli_config(config_path, flags, err);
  llm::BackendSpec spec = backend_spec(cfg);
  const std::string task = read_task(task_arg);
  if (text::trim(task).empty()) throw ConfigError("the task is empty");
  fs::create_directories(cfg.output_dir);

  auto rt = make_runtime(cfg);
  runtime::SessionClient session(*rt.endpoint);
  fs::path downloads = rt.local_root ? *rt.local_root / "downloads" : cfg.output_dir / "downloads";
  std::unique_ptr<browser::BrowserSession> browser;
  if (cfg.browser != BrowserKind::none) {
    browser::SessionOptions so{cfg.viewport_width, cfg.viewport_height, cfg.agent.token_budget_axtree};
    browser = std::make_unique<browser::BrowserSession>(make_driver(cfg, cfg.site, downloads), so);
  }
  auto search = make_search(cfg, err);
  llm::Gateway gateway(spec, llm::make_backend(spec));
  auto registry = tools::default_registry();
  tools::ToolContext ctx{&session, browser.get(), search.get(), 120};

  install_signal_handlers();
  agent::Controller controller(cfg.agent, gateway, registry, ctx);
  controller.set_cancel_flag(&g_interrupted);
  auto result = controller.run(task);
  if (result.status == agent::RunStatus::finished) result = agent::resolve_answer(std::move(result), task, gateway);

  const fs::path trajectory = cfg.output_dir / "trajectory.jsonl";
  events::write_trajectory(trajectory, result.stream.events());
  write_text(cfg.output_dir / "result.json", result_json(result).dump(2) + "\n");

  out << "status: " << agent::to_string(result.status) << "\n";
  out << "steps: " << result.steps_used << "\n";
  if (result.final_message) out << "final message: " << *result.final_message << "\n";
  if (result.extracted_answer) out << "answer: " << *result.extracted_answer << "\n";
  if (result.error) out << "error: " << *result.error << "\n";
  for (const auto& w : result.warnings) err << "warning: " << w << "\n";
  out << "trajectory: " << trajectory.string() << "\n";
  return exit_code_for(result.status);
}

std::string pct(double v) {
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(2) << v << "%";
  return ss.str();
}

int cmd_eval(const std::string& suite_dir, const std::string& mode, const std::vector<std::string>& only,
             bool require_all, const std::string& config_path, const SettingFlags& flags, std::ostream& out,
             std::ostream& err) {
  CliConfig cfg = load_cli_config(config_path, flags, err);
  if (mode != "ci" && mode != "live") throw ConfigError("--mode must be ci or live");
  eval::SuiteOptions opts;
  opts.agent = cfg.agent;
  opts.ci_mode = mode == "ci";
  if (!opts.ci_mode) opts.agent.backend = backend_spec(cfg);
  opts.parallelism = cfg.parallel;
  opts.output_dir = cfg.output_dir;
  opts.sandbox_base = cfg.sandbox_root ? *cfg.sandbox_root : cfg.output_dir / "sandbox";
  opts.search_fixture = cfg.search_fixture;
  opts.only_tasks = only;
  if (cfg.browser == BrowserKind::cdp && !opts.ci_mode) {
    opts.browser_factory = [cfg](const eval::BenchmarkTask& t, const fs::path& downloads) {
      return make_driver(cfg, t.fixtures.site, downloads);
    };
  }
  install_signal_handlers();
  opts.cancel = &g_interrupted;

  auto run = eval::run_suite(suite_dir, opts);
  out << std::left << std::setw(28) << "task" << std::setw(12) << "status" << std::setw(10) << "resolved"
      << std::setw(6) << "full" << std::setw(9) << "partial" << "steps\n";
  for (const auto& o : run.outcomes) {
    std::ostringstream partial;
    partial << std::fixed << std::setprecision(3) << o.report.partial_score;
    out << std::left << std::setw(28) << o.report.task_id << std::setw(12) << agent::to_string(o.status)
        << std::setw(10) << (o.report.resolved ? "yes" : "no") << std::setw(6) << o.report.full_score << std::setw(9)
        << partial.str() << o.report.steps_used << "\n";
  }
  const auto& s = run.summary;
  out << "\nresolve rate: " << pct(s.resolve_rate) << " (" << s.resolved_count << "/" << s.task_count << ")\n";
  out << "full completion: " << pct(s.full_completion_pct) << "\n";
  out << "partial completion: " << pct(s.partial_completion_pct) << "\n";
  out << "mean steps: " << s.mean_steps << "\n";
  out << "summary: " << (cfg.output_dir / "summary.json").string() << "\n";
  if (require_all && s.resolved_count != s.task_count) return kExitFatal;
  return kExitOk;
}

std::string indent(const std::string& body) {
  std::string out;
  for (const auto& line : text::split_lines(body)) out += "  " + line + "\n";
  return out;
}

std::string render_event(const events::Event& e) {
  std::string head = "#" + std::to_string(e.seq) + " " + std::string(events::to_string(e.source)) + " ";
  if (const auto* a = e.action()) {
    std::string body;
    if (a->thought) body += "Thought: " + *a->thought + "\n";
    body += llm::render_action(*a);
    return head + "action " + a->tool + "\n" + indent(body);
  }
  if (const auto* o = e.observation()) {
    return head + "observation " + std::string(events::to_string(o->kind)) + " (cause #" + std::to_string(o->cause_seq) +
           ")\n" + indent(llm::render_observation_text(*o));
  }
  return head + "message\n" + indent(e.message()->text);
}

int cmd_replay(const std::string& path, std::ostream& out) {
  for (const auto& e : events::read_trajectory(path)) out << render_event(e);
  return kExitOk;
}

std::vector<fs::path> expand_inputs(const std::string& arg) {
  std::vector<fs::path> out;
  if (arg.find_first_of("*?[") != std::string::npos) {
    glob_t g{};
    if (::glob(arg.c_str(), 0, nullptr, &g) == 0) {
      for (std::size_t i = 0; i < g.gl_pathc; ++i) {
        auto more = expand_inputs(g.gl_pathv[i]);
        out.insert(out.end(), more.begin(), more.end());
      }
    }
    globfree(&g);
  } else if (fs::is_directory(arg)) {
    for (const auto& entry : fs::recursive_directory_iterator(arg)) {
      if (entry.is_regular_file() && entry.path().extension() == ".jsonl") out.push_back(entry.path());
    }
  } else if (fs::exists(arg)) {
    out.emplace_back(arg);
  }
  std::sort(out.begin(), out.end());
  return out;
}

void print_table(std::ostream& out, const std::string& title, const eval::ToolCounts& counts) {
  out << title << "\n";
  out << std::left << std::setw(22) << "tool" << std::right << std::setw(8) << "calls" << std::setw(10) << "percent"
      << "\n";
  auto h = counts.percentages();
  for (const auto& [name, n] : counts.counts) {
    out << std::left << std::setw(22) << name << std::right << std::setw(8) << n << std::setw(10) << pct(h.at(name))
        << "\n";
  }
  out << std::left << std::setw(22) << "total" << std::right << std::setw(8) << counts.total << std::setw(10)
      << pct(100.0) << "\n";
}

int cmd_stats(const std::vector<std::string>& inputs, const std::string& by, const std::string& csv, std::ostream& out,
              std::ostream& err) {
  if (by != "tool" && by != "category") throw ConfigError("--by must be tool or category");
  std::vector<std::pair<std::string, eval::ToolCounts>> groups;
  eval::ToolCounts overall;
  for (const auto& arg : inputs) {
    eval::ToolCounts counts;
    for (const auto& path : expand_inputs(arg)) {
      std::vector<events::Event> events;
      try {
        events = events::read_trajectory(path);
      } catch (const std::exception& e) {
        err << "skipping " << path.string() << ": " << e.what() << "\n";
        continue;
      }
      for (const auto& e : events) {
        if (const auto* a = e.action()) {
          std::string name = by == "tool" ? a->tool : tools::tool_category(*a);
          ++counts.counts[name];
          ++counts.total;
          ++overall.counts[name];
          ++overall.total;
        }
      }
    }
    groups.emplace_back(arg, std::move(counts));
  }
  if (overall.total == 0) {
    err << "no tool calls found in the given trajectories\n";
    return kExitFatal;
  }
  std::string rows = "group,name,calls,percent\n";
  auto add_rows = [&](const std::string& group, const eval::ToolCounts& c) {
    auto h = c.percentages();
    for (const auto& [name, n] : c.counts) {
      std::ostringstream line;
      line << std::setprecision(17) << group << "," << name << "," << n << "," << h.at(name) << "\n";
      rows += line.str();
    }
  };
  if (groups.size() > 1) {
    for (const auto& [name, c] : groups) {
      if (c.total == 0) continue;
      print_table(out, name, c);
      out << "\n";
      add_rows(name, c);
    }
  }
  print_table(out, "all trajectories", overall);
  add_rows("all", overall);
  if (!csv.empty()) write_text(csv, rows);
  return kExitOk;
}

int cmd_runtime(const std::string& bind, const std::string& config_path, const SettingFlags& flags, std::ostream& out,
                std::ostream& err) {
  CliConfig cfg = load_cli_config(config_path, flags, err);
  auto rc = runtime_config_for(cfg, fs::temp_directory_path() / "versa-runtime");
  runtime::Runtime rt(rc);
  runtime::Server server(rt, runtime::parse_bind(bind));
  install_signal_handlers();
  server.start();
  out << "versa runtime listening on " << server.host() << ":" << server.port() << " (sandbox "
      << rc.sandbox_root.string() << ")" << std::endl;
  while (!g_interrupted.load()) std::this_thread::sleep_for(std::chrono::milliseconds(100));
  server.stop();
  out << "runtime stopped" << std::endl;
  return kExitOk;
}

int cmd_extract(const std::string& task, const std::string& thought, const std::string& config_path,
                const SettingFlags& flags, std::ostream& out, std::ostream& err) {
  CliConfig cfg = load_cli_config(config_path, flags, err);
  llm::BackendSpec spec = backend_spec(cfg);
  llm::Gateway gateway(spec, llm::make_backend(spec));
  out << llm::extract_final_answer(read_task(task), read_task(thought), gateway) << "\n";
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"versa: a generalist agent with shell, code, file, browser and search tools"};
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("--config", config_path, "JSON config file (also VERSA_CONFIG)");

  SettingFlags run_flags, eval_flags, runtime_flags, extract_flags;

  std::string task;
  auto* run = app.add_subcommand("run", "run one task");
  run->add_option("task", task, "task text or a file holding it")->required();
  run_flags.attach(run, kAgentKeys);

  std::string suite_dir, mode = "ci";
  std::vector<std::string> only;
  bool require_all = false;
  auto* ev = app.add_subcommand("eval", "run a benchmark suite");
  ev->add_option("suite", suite_dir, "suite directory")->required();
  ev->add_option("--mode", mode, "ci (scripted, offline) or live")->capture_default_str();
  ev->add_option("--only", only, "task ids to run");
  ev->add_flag("--require-all", require_all, "exit 1 unless every task is resolved");
  eval_flags.attach(ev, {"k", "tau", "max_steps", "temperature", "search_provider", "search_fixture", "backend", "model",
                         "base_url", "context_window", "axtree_budget", "output_budget", "output_dir", "loop_nudge",
                         "sandbox_root", "browser", "browser_path", "parallel"});

  std::string trajectory;
  auto* replay = app.add_subcommand("replay", "render a trajectory as text");
  replay->add_option("trajectory", trajectory, "trajectory file")->required()->check(CLI::ExistingFile);

  std::vector<std::string> inputs;
  std::string by = "tool", csv;
  auto* stats = app.add_subcommand("stats", "tool usage percentages over trajectories");
  stats->add_option("trajectories", inputs, "files, directories or glob patterns")->required();
  stats->add_option("--by", by, "tool or category")->capture_default_str();
  stats->add_option("--csv", csv, "also write a CSV table here");

  std::string bind = "127.0.0.1:7300";
  auto* rtcmd = app.add_subcommand("runtime", "serve the sandbox runtime over TCP");
  rtcmd->add_option("--bind", bind, "host:port")->capture_default_str();
  runtime_flags.attach(rtcmd, {"sandbox", "sandbox_root", "runtime_config", "output_budget"});

  std::string ex_task, ex_thought;
  auto* extract = app.add_subcommand("extract", "extract a final answer from an agent's last message");
  extract->add_option("--task", ex_task, "task text or file")->required();
  extract->add_option("--thought", ex_thought, "final message text or file")->required();
  extract_flags.attach(extract, {"backend", "transcript", "model", "base_url", "context_window", "record"});

  try {
    std::vector<std::string> args;
    for (int i = argc - 1; i > 0; --i) args.emplace_back(argv[i]);
    app.parse(std::move(args));
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "versa: " << e.what() << "\n";
    for (auto* sub : app.get_subcommands()) err << sub->help();
    if (app.get_subcommands().empty()) err << app.help();
    return kExitUsage;
  }

  try {
    if (run->parsed()) return cmd_run(task, config_path, run_flags, out, err);
    if (ev->parsed()) return cmd_eval(suite_dir, mode, only, require_all, config_path, eval_flags, out, err);
    if (replay->parsed()) return cmd_replay(trajectory, out);
    if (stats->parsed()) return cmd_stats(inputs, by, csv, out, err);
    if (rtcmd->parsed()) return cmd_runtime(bind, config_path, runtime_flags, out, err);
    if (extract->parsed()) return cmd_extract(ex_task, ex_thought, config_path, extract_flags, out, err);
  } catch (const ConfigError& e) {
    err << "versa: configuration error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "versa: " << e.what() << "\n";
    return kExitFatal;
  }
  return kExitUsage;
}

}  // namespace versa::cli
