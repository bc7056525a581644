#include "versa/eval/scoring.hpp"

#include <algorithm>
#include <cctype>
#include <regex>
#include <set>
#include <stdexcept>

#include "versa/core/assets.hpp"
#include "versa/core/text.hpp"
#include "versa/tools/registry.hpp"

namespace versa::eval {

namespace fs = std::filesystem;

namespace {

bool is_number_token(const std::string& t) {
  static const std::regex grouped(R"([+-]?\d{1,3}(,\d{3})+(\.\d+)?)");
  static const std::regex plain(R"([+-]?\d+(\.\d+)?)");
  return std::regex_match(t, grouped) || std::regex_match(t, plain);
}

std::string canonical_number(std::string t) {
  t.erase(std::remove(t.begin(), t.end(), ','), t.end());
  std::string sign;
  if (t[0] == '+' || t[0] == '-') {
    if (t[0] == '-') sign = "-";
    t.erase(0, 1);
  }
  auto dot = t.find('.');
  std::string whole = t.substr(0, dot);
  std::string frac = dot == std::string::npos ? "" : t.substr(dot + 1);
  while (whole.size() > 1 && whole[0] == '0') whole.erase(0, 1);
  while (!frac.empty() && frac.back() == '0') frac.pop_back();
  std::string out = frac.empty() ? whole : whole + "." + frac;
  if (out == "0") sign.clear();
  return sign + out;
}

std::optional<fs::path> inside(const fs::path& workdir, const std::string& rel) {
  fs::path p = (fs::path(rel).is_absolute() ? fs::path(rel) : workdir / rel).lexically_normal();
  fs::path r = p.lexically_relative(workdir.lexically_normal());
  if (r.empty() || *r.begin() == "..") return std::nullopt;
  return p;
}

CheckpointResult fail(const Checkpoint& cp, std::string reason) { return {cp.checkpoint_id, false, 0, std::move(reason)}; }
CheckpointResult pass(const Checkpoint& cp) { return {cp.checkpoint_id, true, cp.points, "ok"}; }

CheckpointResult check(const Checkpoint& cp, const BenchmarkTask& task, const FinalState& state,
                       std::span<const events::Event> trajectory) {
  const json& p = cp.validator.params;
  switch (cp.validator.kind) {
    case ValidatorKind::file_exists: {
      auto path = inside(state.workdir, p["path"].get<std::string>());
      if (!path) return fail(cp, "path escapes the workdir");
      return fs::exists(*path) ? pass(cp) : fail(cp, "missing file " + p["path"].get<std::string>());
    }
    case ValidatorKind::file_contains: {
      auto path = inside(state.workdir, p["path"].get<std::string>());
      if (!path) return fail(cp, "path escapes the workdir");
      if (!fs::is_regular_file(*path)) return fail(cp, "missing file " + p["path"].get<std::string>());
      std::string body = assets::read_file(*path);
      std::string want = p["text"].get<std::string>();
      if (p.value("normalize", false)) {
        body = normalize_answer(body);
        want = normalize_answer(want);
      }
      return body.find(want) != std::string::npos ? pass(cp) : fail(cp, "text not found in " + p["path"].get<std::string>());
    }
    case ValidatorKind::url_visited: {
      const std::string want = p["url"];
      const bool prefix = p.value("match", std::string("exact")) == "prefix";
      for (const auto& url : visited_urls(trajectory)) {
        if (prefix ? url.starts_with(want) : url == want) return pass(cp);
      }
      return fail(cp, "url never visited: " + want);
    }
    case ValidatorKind::answer_equals: {
      std::string expected = p.contains("expected") ? p["expected"].get<std::string>() : task.answer_key.value_or("");
      if (!state.answer) return fail(cp, "no answer");
      return answers_match(*state.answer, expected) ? pass(cp) : fail(cp, "answer '" + *state.answer + "' != '" + expected + "'");
    }
    case ValidatorKind::shell_probe: {
      if (!state.probe) return fail(cp, "no shell available for probes");
      auto out = state.probe(p["command"].get<std::string>(), p.value("timeout_s", 30.0));
      if (out.timed_out) return fail(cp, "timeout");
      int want_exit = p.value("expect_exit", 0);
      if (out.exit_code != want_exit) {
        return fail(cp, "exit code " + std::to_string(out.exit_code) + ", expected " + std::to_string(want_exit));
      }
      if (p.contains("stdout_contains") && out.stdout_text.find(p["stdout_contains"].get<std::string>()) == std::string::npos) {
        return fail(cp, "probe output lacks expected text");
      }
      return pass(cp);
    }
  }
  return fail(cp, "unknown validator");
}

}  // namespace

std::string normalize_answer(std::string_view answer, const NormalizeOptions& opts) {
  std::string s = text::trim(answer);
  if (opts.case_fold) {
    for (auto& c : s) {
      if (static_cast<unsigned char>(c) < 0x80) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
  }
  if (!opts.collapse_spaces && !opts.canonical_numbers) return s;
  std::vector<std::string> tokens;
  std::string cur;
  std::vector<std::string> gaps{""};
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!cur.empty()) {
        tokens.push_back(std::move(cur));
        cur.clear();
        gaps.emplace_back();
      }
      gaps.back() += c;
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i > 0) out += opts.collapse_spaces ? std::string(" ") : gaps[i];
    out += opts.canonical_numbers && is_number_token(tokens[i]) ? canonical_number(tokens[i]) : tokens[i];
  }
  return out;
}

bool answers_match(std::string_view got, std::string_view expected, const NormalizeOptions& opts) {
  return normalize_answer(got, opts) == normalize_answer(expected, opts);
}

double partial_score(int full_score, int points_earned, int total_points) {
  if (total_points <= 0) throw std::invalid_argument("total_points must be positive");
  if (points_earned < 0 || points_earned > total_points) throw std::invalid_argument("points_earned out of range");
  if (full_score != 0 && full_score != 1) throw std::invalid_argument("full_score must be 0 or 1");
  return 0.5 * full_score + 0.5 * (static_cast<double>(points_earned) / static_cast<double>(total_points));
}

CheckpointResult evaluate_checkpoint(const Checkpoint& cp, const BenchmarkTask& task, const FinalState& state,
                                     std::span<const events::Event> trajectory) {
  try {
    return check(cp, task, state, trajectory);
  } catch (const std::exception& e) {
    return fail(cp, std::string("validator error: ") + e.what());
  }
}

ScoreReport score_task(const BenchmarkTask& task, const FinalState& state, std::span<const events::Event> trajectory,
                       int steps_used, const NormalizeOptions& opts) {
  ScoreReport r;
  r.task_id = task.task_id;
  r.steps_used = steps_used;
  int earned = 0;
  bool all = true;
  for (const auto& cp : task.checkpoints) {
    auto res = evaluate_checkpoint(cp, task, state, trajectory);
    earned += res.points_earned;
    all = all && res.passed;
    r.checkpoint_results.push_back(std::move(res));
  }
  r.full_score = all ? 1 : 0;
  r.partial_score = partial_score(r.full_score, earned, task.total_points());
  bool answer_ok = !task.answer_key || (state.answer && answers_match(*state.answer, *task.answer_key, opts));
  r.resolved = all && answer_ok;
  ToolCounts counts;
  counts.add(trajectory);
  r.tool_counts = counts.counts;
  if (counts.total > 0) r.tool_histogram = counts.percentages();
  return r;
}

std::vector<std::string> visited_urls(std::span<const events::Event> trajectory) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const auto& e : trajectory) {
    const auto* obs = e.observation();
    if (!obs || !obs->is_browser()) continue;
    const auto& url = std::get<events::BrowserObservation>(obs->content).url;
    if (seen.insert(url).second) out.push_back(url);
  }
  return out;
}

void ToolCounts::add(std::span<const events::Event> trajectory) {
  for (const auto& e : trajectory) {
    if (const auto* a = e.action()) {
      ++counts[a->tool];
      ++total;
    }
  }
}

ToolHistogram ToolCounts::percentages() const {
  if (total == 0) throw std::invalid_argument("tool histogram needs at least one tool call");
  ToolHistogram h;
  for (const auto& [name, n] : counts) h[name] = 100.0 * static_cast<double>(n) / static_cast<double>(total);
  return h;
}

ToolHistogram tool_histogram(std::span<const events::Event> trajectory) {
  ToolCounts c;
  c.add(trajectory);
  return c.percentages();
}

ToolHistogram tool_histogram(const std::vector<std::vector<events::Event>>& trajectories) {
  ToolCounts c;
  for (const auto& t : trajectories) c.add(t);
  return c.percentages();
}

ToolHistogram category_histogram(const std::vector<std::vector<events::Event>>& trajectories) {
  ToolCounts c;
  for (const auto& t : trajectories) {
    for (const auto& e : t) {
      if (const auto* a = e.action()) {
        ++c.counts[tools::tool_category(*a)];
        ++c.total;
      }
    }
  }
  return c.percentages();
}

json to_json(const ScoreReport& r) {
  json cps = json::array();
  for (const auto& c : r.checkpoint_results) {
    cps.push_back({{"checkpoint_id", c.checkpoint_id}, {"passed", c.passed}, {"points_earned", c.points_earned},
                   {"reason", c.reason}});
  }
  return {{"task_id", r.task_id},           {"resolved", r.resolved},         {"checkpoint_results", cps},
          {"full_score", r.full_score},     {"partial_score", r.partial_score}, {"steps_used", r.steps_used},
          {"tool_counts", r.tool_counts},   {"tool_histogram", r.tool_histogram}};
}

ScoreReport score_report_from_json(const json& j) {
  ScoreReport r;
  r.task_id = j.at("task_id").get<std::string>();
  r.resolved = j.at("resolved").get<bool>();
  for (const auto& c : j.at("checkpoint_results")) {
    r.checkpoint_results.push_back({c.at("checkpoint_id").get<std::string>(), c.at("passed").get<bool>(),
                                    c.at("points_earned").get<int>(), c.value("reason", "")});
  }
  r.full_score = j.at("full_score").get<int>();
  r.partial_score = j.at("partial_score").get<double>();
  r.steps_used = j.value("steps_used", 0);
  if (j.contains("tool_counts")) r.tool_counts = j["tool_counts"].get<std::map<std::string, std::size_t>>();
  if (j.contains("tool_histogram")) r.tool_histogram = j["tool_histogram"].get<ToolHistogram>();
  return r;
}

json to_json(const SuiteSummary& s) {
  return {{"task_count", s.task_count},
          {"resolved_count", s.resolved_count},
          {"resolve_rate", s.resolve_rate},
          {"full_completion_pct", s.full_completion_pct},
          {"partial_completion_pct", s.partial_completion_pct},
          {"mean_steps", s.mean_steps},
          {"tool_histogram", s.tool_histogram}};
}

SuiteSummary aggregate(std::span<const ScoreReport> reports) {
  if (reports.empty()) throw std::invalid_argument("cannot aggregate an empty suite");
  SuiteSummary s;
  s.task_count = reports.size();
  double full = 0, partial = 0, steps = 0;
  ToolCounts pooled;
  for (const auto& r : reports) {
    s.resolved_count += r.resolved ? 1 : 0;
    full += r.full_score;
    partial += r.partial_score;
    steps += r.steps_used;
    for (const auto& [name, n] : r.tool_counts) {
      pooled.counts[name] += n;
      pooled.total += n;
    }
  }
  const double n = static_cast<double>(reports.size());
  s.resolve_rate = 100.0 * static_cast<double>(s.resolved_count) / n;
  s.full_completion_pct = 100.0 * full / n;
  s.partial_completion_pct = 100.0 * partial / n;
  s.mean_steps = steps / n;
  if (pooled.total > 0) s.tool_histogram = pooled.percentages();
  return s;
}

}  // namespace versa::eval
