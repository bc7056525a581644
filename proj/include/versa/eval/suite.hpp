#pragma once

#include <atomic>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "versa/agent/controller.hpp"
#include "versa/browser/driver.hpp"
#include "versa/eval/scoring.hpp"
#include "versa/eval/task.hpp"

namespace versa::eval {

using BrowserFactory = std::function<std::unique_ptr<browser::BrowserDriver>(const BenchmarkTask& task,
                                                                             const std::filesystem::path& download_dir)>;

struct SuiteOptions {
  agent::AgentConfig agent;
  std::size_t parallelism = 1;
  std::filesystem::path output_dir;
  // Per-task sandboxes live at sandbox_base/<task_id>; wiped before each task.
  std::filesystem::path sandbox_base;
  // Scripted backends, mock search and a fixed clock: fully offline and repeatable.
  bool ci_mode = true;
  NormalizeOptions normalize;
  std::optional<std::filesystem::path> search_fixture;  // live mode only
  BrowserFactory browser_factory;                       // default: offline driver on the task's site
  std::vector<std::string> only_tasks;                  // empty: all
  const std::atomic<bool>* cancel = nullptr;            // stops every controller before its next step
};

struct TaskOutcome {
  ScoreReport report;
  agent::RunStatus status = agent::RunStatus::fatal_error;
  std::optional<std::string> final_message;
  std::optional<std::string> extracted_answer;
  std::optional<std::string> error;
  std::vector<std::string> warnings;
};

json to_json(const TaskOutcome& o);

struct SuiteRun {
  SuiteSummary summary;
  std::vector<TaskOutcome> outcomes;  // suite order
};

// Writes <output_dir>/summary.json and <output_dir>/tasks/<id>/{trajectory.jsonl,report.json,result.json}.
SuiteRun run_suite(const Suite& suite, const SuiteOptions& options);
SuiteRun run_suite(const std::filesystem::path& suite_dir, const SuiteOptions& options);

TaskOutcome run_task(const BenchmarkTask& task, const SuiteOptions& options);

// Fixed start time for CI-mode clocks.
Timestamp ci_epoch();

// Trajectory text with timestamps and measured durations blanked, for
// comparing runs.
std::string normalized_trajectory(const std::filesystem::path& path);

}  // namespace versa::eval
