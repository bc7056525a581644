#pragma once

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "versa/core/events.hpp"
#include "versa/eval/task.hpp"

namespace versa::eval {

struct NormalizeOptions {
  bool case_fold = true;
  bool collapse_spaces = true;
  bool canonical_numbers = true;  // "1,000" == "1000", "2.50" == "2.5"

  static NormalizeOptions strict() { return {false, false, false}; }
};

std::string normalize_answer(std::string_view answer, const NormalizeOptions& opts = {});
bool answers_match(std::string_view got, std::string_view expected, const NormalizeOptions& opts = {});

// What validators may inspect after a run.
struct FinalState {
  std::filesystem::path workdir;
  std::optional<std::string> answer;  // extracted answer, else final message
  // Runs a command in a fresh shell at the workdir.
  std::function<events::ExecOutput(const std::string& command, double timeout_s)> probe;
};

struct CheckpointResult {
  std::string checkpoint_id;
  bool passed = false;
  int points_earned = 0;
  std::string reason;

  bool operator==(const CheckpointResult&) const = default;
};

using ToolHistogram = std::map<std::string, double>;  // name -> percent of tool calls

struct ScoreReport {
  std::string task_id;
  bool resolved = false;
  std::vector<CheckpointResult> checkpoint_results;
  int full_score = 0;
  double partial_score = 0;
  int steps_used = 0;
  std::map<std::string, std::size_t> tool_counts;
  ToolHistogram tool_histogram;  // empty when no tool was called

  bool operator==(const ScoreReport&) const = default;
};

json to_json(const ScoreReport& r);
ScoreReport score_report_from_json(const json& j);

// 0.5 * full + 0.5 * earned / total.
double partial_score(int full_score, int points_earned, int total_points);

CheckpointResult evaluate_checkpoint(const Checkpoint& cp, const BenchmarkTask& task, const FinalState& state,
                                     std::span<const events::Event> trajectory);

ScoreReport score_task(const BenchmarkTask& task, const FinalState& state, std::span<const events::Event> trajectory,
                       int steps_used, const NormalizeOptions& opts = {});

// Every URL shown in a browser observation, in order of first appearance.
std::vector<std::string> visited_urls(std::span<const events::Event> trajectory);

struct ToolCounts {
  std::map<std::string, std::size_t> counts;
  std::size_t total = 0;

  void add(std::span<const events::Event> trajectory);
  // Throws std::invalid_argument when no tool call was counted.
  ToolHistogram percentages() const;
};

ToolHistogram tool_histogram(std::span<const events::Event> trajectory);
ToolHistogram tool_histogram(const std::vector<std::vector<events::Event>>& trajectories);
// Same, bucketed by tools::tool_category (view and edit split apart).
ToolHistogram category_histogram(const std::vector<std::vector<events::Event>>& trajectories);

struct SuiteSummary {
  std::size_t task_count = 0;
  std::size_t resolved_count = 0;
  double resolve_rate = 0;            // percent
  double full_completion_pct = 0;     // mean full score, percent
  double partial_completion_pct = 0;  // mean partial score, percent
  double mean_steps = 0;
  ToolHistogram tool_histogram;       // pooled tool calls of all tasks

  bool operator==(const SuiteSummary&) const = default;
};

json to_json(const SuiteSummary& s);

// Throws std::invalid_argument on an empty list.
SuiteSummary aggregate(std::span<const ScoreReport> reports);

}  // namespace versa::eval
