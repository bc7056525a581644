#include "versa/eval/suite.hpp"

#include <atomic>
#include <fstream>
#include <thread>

#include "versa/browser/offline.hpp"
#include "versa/browser/session.hpp"
#include "versa/core/assets.hpp"
#include "versa/core/text.hpp"
#include "versa/core/trajectory.hpp"
#include "versa/llm/prompt.hpp"
#include "versa/runtime/client.hpp"
#include "versa/runtime/runtime.hpp"
#include "versa/search/search.hpp"

namespace versa::eval {

namespace fs = std::filesystem;

namespace {

void write_text(const fs::path& path, const std::string& body) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << body;
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

std::unique_ptr<browser::BrowserDriver> default_browser(const BenchmarkTask& task, const fs::path& download_dir) {
  browser::Site site = task.fixtures.site ? browser::directory_site(*task.fixtures.site)
                                          : browser::Site([](const std::string&) { return std::nullopt; });
  browser::OfflineOptions opts;
  opts.download_dir = download_dir;
  return std::make_unique<browser::OfflineDriver>(std::move(site), opts);
}

void blank_measurements(json& j) {
  if (j.is_object()) {
    for (auto& [key, value] : j.items()) {
      if (key == "timestamp") value = "";
      else if (key == "duration_ms") value = 0;
      else blank_measurements(value);
    }
  } else if (j.is_array()) {
    for (auto& v : j) blank_measurements(v);
  }
}

}  // namespace

Timestamp ci_epoch() { return parse_rfc3339("2025-01-01T00:00:00Z"); }

json to_json(const TaskOutcome& o) {
  json j{{"task_id", o.report.task_id},
         {"status", agent::to_string(o.status)},
         {"steps_used", o.report.steps_used},
         {"resolved", o.report.resolved},
         {"warnings", o.warnings}};
  j["final_message"] = o.final_message ? json(*o.final_message) : json(nullptr);
  j["extracted_answer"] = o.extracted_answer ? json(*o.extracted_answer) : json(nullptr);
  j["error"] = o.error ? json(*o.error) : json(nullptr);
  return j;
}

TaskOutcome run_task(const BenchmarkTask& task, const SuiteOptions& options) {
  if (options.sandbox_base.empty()) throw std::invalid_argument("sandbox_base must be set");
  const fs::path sandbox = fs::absolute(options.sandbox_base / task.task_id).lexically_normal();
  const fs::path task_out = options.output_dir / "tasks" / task.task_id;
  fs::remove_all(sandbox);
  fs::create_directories(sandbox);

  TaskOutcome outcome;
  std::vector<events::Event> trajectory;
  FinalState state;
  state.workdir = sandbox;

  runtime::RuntimeConfig rc;
  rc.sandbox_root = sandbox;
  rc.output_budget = options.agent.output_byte_budget;
  std::unique_ptr<runtime::Runtime> rt;
  std::unique_ptr<runtime::InProcessEndpoint> endpoint;
  try {
    if (task.fixtures.files) {
      fs::copy(*task.fixtures.files, sandbox, fs::copy_options::recursive | fs::copy_options::overwrite_existing);
    }
    rt = std::make_unique<runtime::Runtime>(rc);
    endpoint = std::make_unique<runtime::InProcessEndpoint>(*rt);
    runtime::SessionClient session(*endpoint);

    auto factory = options.browser_factory ? options.browser_factory : BrowserFactory(default_browser);
    browser::SessionOptions bo;
    bo.axtree_token_budget = options.agent.token_budget_axtree;
    browser::BrowserSession browser(factory(task, sandbox / "downloads"), bo);

    std::unique_ptr<search::SearchService> search;
    if (options.ci_mode) {
      if (task.fixtures.search) {
        search = std::make_unique<search::SearchService>(
            std::vector<std::shared_ptr<search::SearchProvider>>{search::MockProvider::from_file(*task.fixtures.search)});
      }
    } else {
      search = std::make_unique<search::SearchService>(
          search::make_chain(options.agent.provider_chain, options.search_fixture));
    }

    llm::BackendSpec spec = options.agent.backend;
    std::unique_ptr<llm::Backend> backend;
    if (options.ci_mode) {
      if (!task.fixtures.transcript) throw ManifestError(task.task_id + ": CI mode needs a scripted transcript");
      spec.kind = llm::BackendKind::scripted;
      spec.transcript_path = *task.fixtures.transcript;
      backend = std::make_unique<llm::ScriptedBackend>(spec.transcript_path);
    } else {
      backend = llm::make_backend(spec);
    }
    llm::Gateway gateway(spec, std::move(backend));

    auto registry = tools::default_registry();
    tools::ToolContext ctx{&session, &browser, search.get(), 120};
    agent::AgentConfig cfg = options.agent;
    if (task.step_cap_override) cfg.max_steps = *task.step_cap_override;
    Clock clock = options.ci_mode ? stepping_clock(ci_epoch(), std::chrono::seconds(1)) : system_clock();
    agent::Controller controller(cfg, gateway, registry, ctx, clock);
    controller.set_cancel_flag(options.cancel);
    auto result = controller.run(task.instruction);
    if (task.answer_key) result = agent::resolve_answer(std::move(result), task.instruction, gateway);

    trajectory = result.stream.events();
    outcome.status = result.status;
    outcome.final_message = result.final_message;
    outcome.extracted_answer = result.extracted_answer;
    outcome.error = result.error;
    outcome.warnings = result.warnings;
    outcome.report.steps_used = result.steps_used;
    state.answer = result.extracted_answer ? result.extracted_answer : result.final_message;
  } catch (const std::exception& e) {
    outcome.status = agent::RunStatus::fatal_error;
    outcome.error = std::string("task setup failed: ") + e.what();
  }

  if (endpoint) {
    state.probe = [&endpoint](const std::string& command, double timeout_s) {
      runtime::SessionClient probe(*endpoint);
      auto obs = probe.observe("run_shell", {{"command", command}}, timeout_s);
      if (auto* out = std::get_if<events::ExecOutput>(&obs.content)) return *out;
      throw std::runtime_error(llm::render_observation_text(obs));
    };
  }
  int steps = outcome.report.steps_used;
  outcome.report = score_task(task, state, trajectory, steps, options.normalize);

  if (!options.output_dir.empty()) {
    events::write_trajectory(task_out / "trajectory.jsonl", trajectory);
    write_text(task_out / "report.json", to_json(outcome.report).dump(2) + "\n");
    write_text(task_out / "result.json", to_json(outcome).dump(2) + "\n");
  }
  return outcome;
}

SuiteRun run_suite(const Suite& suite, const SuiteOptions& options) {
  std::vector<const BenchmarkTask*> selected;
  for (const auto& t : suite.tasks) {
    if (options.only_tasks.empty() ||
        std::find(options.only_tasks.begin(), options.only_tasks.end(), t.task_id) != options.only_tasks.end()) {
      selected.push_back(&t);
    }
  }
  if (selected.empty()) throw std::invalid_argument("no tasks selected from suite " + suite.name);

  SuiteRun run;
  run.outcomes.resize(selected.size());
  std::vector<std::string> failures(selected.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < selected.size(); i = next++) {
      try {
        run.outcomes[i] = run_task(*selected[i], options);
      } catch (const std::exception& e) {
        failures[i] = selected[i]->task_id + ": " + e.what();
      }
    }
  };
  const std::size_t n = std::max<std::size_t>(1, std::min(options.parallelism, selected.size()));
  std::vector<std::thread> pool;
  for (std::size_t i = 1; i < n; ++i) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (const auto& f : failures) {
    if (!f.empty()) throw std::runtime_error("suite run failed: " + f);
  }

  std::vector<ScoreReport> reports;
  for (const auto& o : run.outcomes) reports.push_back(o.report);
  run.summary = aggregate(reports);
  if (!options.output_dir.empty()) write_text(options.output_dir / "summary.json", to_json(run.summary).dump(2) + "\n");
  return run;
}

SuiteRun run_suite(const fs::path& suite_dir, const SuiteOptions& options) {
  return run_suite(load_suite(suite_dir), options);
}

std::string normalized_trajectory(const fs::path& path) {
  std::string out;
  for (const auto& line : text::split_lines(assets::read_file(path))) {
    if (text::trim(line).empty()) continue;
    json j = json::parse(line);
    blank_measurements(j);
    out += j.dump() + "\n";
  }
  return out;
}

}  // namespace versa::eval
