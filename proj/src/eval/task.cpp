#include "versa/eval/task.hpp"

#include <algorithm>
#include <set>

#include "versa/core/assets.hpp"

namespace versa::eval {

namespace fs = std::filesystem;

namespace {

constexpr std::pair<ValidatorKind, std::string_view> kKinds[] = {
    {ValidatorKind::file_exists, "file_exists"},   {ValidatorKind::file_contains, "file_contains"},
    {ValidatorKind::url_visited, "url_visited"},   {ValidatorKind::answer_equals, "answer_equals"},
    {ValidatorKind::shell_probe, "shell_probe"},
};

void need_string(const json& params, const char* key, ValidatorKind kind) {
  if (!params.contains(key) || !params[key].is_string() || params[key].get<std::string>().empty()) {
    throw ManifestError(std::string(to_string(kind)) + " validator needs a non-empty string '" + key + "'");
  }
}

std::optional<fs::path> fixture_path(const json& fixtures, const char* key, const fs::path& dir) {
  if (!fixtures.contains(key) || fixtures[key].is_null()) return std::nullopt;
  fs::path p = fixtures[key].get<std::string>();
  return p.is_absolute() ? p : (dir / p).lexically_normal();
}

}  // namespace

std::string_view to_string(ValidatorKind k) {
  for (auto [kind, name] : kKinds) {
    if (kind == k) return name;
  }
  return "?";
}

ValidatorKind parse_validator_kind(std::string_view s) {
  for (auto [kind, name] : kKinds) {
    if (name == s) return kind;
  }
  throw ManifestError("unknown validator type: " + std::string(s));
}

void Validator::validate() const {
  if (!params.is_object()) throw ManifestError("validator parameters must be an object");
  switch (kind) {
    case ValidatorKind::file_exists: need_string(params, "path", kind); break;
    case ValidatorKind::file_contains:
      need_string(params, "path", kind);
      need_string(params, "text", kind);
      break;
    case ValidatorKind::url_visited: need_string(params, "url", kind); break;
    case ValidatorKind::answer_equals: break;  // falls back to the task's answer key
    case ValidatorKind::shell_probe:
      need_string(params, "command", kind);
      if (params.contains("timeout_s") && (!params["timeout_s"].is_number() || params["timeout_s"].get<double>() <= 0)) {
        throw ManifestError("shell_probe timeout_s must be a positive number");
      }
      break;
  }
}

int BenchmarkTask::total_points() const {
  int total = 0;
  for (const auto& c : checkpoints) total += c.points;
  return total;
}

void BenchmarkTask::validate() const {
  if (task_id.empty()) throw ManifestError("task_id must be non-empty");
  if (instruction.empty()) throw ManifestError(task_id + ": instruction must be non-empty");
  if (checkpoints.empty()) throw ManifestError(task_id + ": at least one checkpoint is required");
  std::set<std::string> ids;
  for (const auto& c : checkpoints) {
    if (c.checkpoint_id.empty()) throw ManifestError(task_id + ": checkpoint id must be non-empty");
    if (!ids.insert(c.checkpoint_id).second) throw ManifestError(task_id + ": duplicate checkpoint " + c.checkpoint_id);
    if (c.points < 1) throw ManifestError(task_id + "/" + c.checkpoint_id + ": points must be >= 1");
    c.validator.validate();
    if (c.validator.kind == ValidatorKind::answer_equals && !c.validator.params.contains("expected") && !answer_key) {
      throw ManifestError(task_id + "/" + c.checkpoint_id + ": answer_equals needs 'expected' or an answer_key");
    }
  }
  if (step_cap_override && *step_cap_override < 1) throw ManifestError(task_id + ": step_cap must be >= 1");
}

BenchmarkTask task_from_json(const json& j, const fs::path& task_dir) {
  try {
    BenchmarkTask t;
    t.task_id = j.at("task_id").get<std::string>();
    t.instruction = j.at("instruction").get<std::string>();
    t.category = j.value("category", "");
    t.directory = task_dir;
    if (j.contains("fixtures")) {
      const json& f = j["fixtures"];
      t.fixtures.files = fixture_path(f, "files", task_dir);
      t.fixtures.site = fixture_path(f, "site", task_dir);
      t.fixtures.search = fixture_path(f, "search", task_dir);
      t.fixtures.transcript = fixture_path(f, "transcript", task_dir);
    }
    for (const auto& c : j.at("checkpoints")) {
      Checkpoint cp;
      cp.checkpoint_id = c.at("id").get<std::string>();
      cp.description = c.value("description", "");
      cp.points = c.value("points", 1);
      json v = c.at("validator");
      cp.validator.kind = parse_validator_kind(v.at("type").get<std::string>());
      v.erase("type");
      cp.validator.params = std::move(v);
      t.checkpoints.push_back(std::move(cp));
    }
    if (j.contains("answer_key") && !j["answer_key"].is_null()) t.answer_key = j["answer_key"].get<std::string>();
    if (j.contains("step_cap") && !j["step_cap"].is_null()) t.step_cap_override = j["step_cap"].get<int>();
    t.validate();
    return t;
  } catch (const json::exception& e) {
    throw ManifestError("malformed task manifest in " + task_dir.string() + ": " + e.what());
  }
}

json to_json(const BenchmarkTask& t) {
  json j{{"task_id", t.task_id}, {"instruction", t.instruction}};
  if (!t.category.empty()) j["category"] = t.category;
  json f = json::object();
  auto rel = [&](const std::optional<fs::path>& p, const char* key) {
    if (p) f[key] = p->lexically_relative(t.directory).generic_string();
  };
  rel(t.fixtures.files, "files");
  rel(t.fixtures.site, "site");
  rel(t.fixtures.search, "search");
  rel(t.fixtures.transcript, "transcript");
  if (!f.empty()) j["fixtures"] = f;
  json cps = json::array();
  for (const auto& c : t.checkpoints) {
    json v = c.validator.params;
    v["type"] = to_string(c.validator.kind);
    cps.push_back({{"id", c.checkpoint_id}, {"description", c.description}, {"points", c.points}, {"validator", v}});
  }
  j["checkpoints"] = cps;
  if (t.answer_key) j["answer_key"] = *t.answer_key;
  if (t.step_cap_override) j["step_cap"] = *t.step_cap_override;
  return j;
}

BenchmarkTask load_task(const fs::path& task_dir) {
  fs::path manifest = task_dir / kManifestName;
  if (!fs::exists(manifest)) throw ManifestError("missing " + manifest.string());
  json j;
  try {
    j = json::parse(assets::read_file(manifest));
  } catch (const json::exception& e) {
    throw ManifestError("cannot parse " + manifest.string() + ": " + e.what());
  }
  return task_from_json(j, fs::absolute(task_dir).lexically_normal());
}

Suite load_suite(const fs::path& root_in) {
  fs::path root = fs::absolute(root_in).lexically_normal();
  if (!fs::is_directory(root)) throw ManifestError("suite directory not found: " + root.string());
  Suite s;
  s.root = root;
  s.name = root.filename().string();
  if (s.name.empty()) s.name = root.parent_path().filename().string();
  fs::path task_root = fs::is_directory(root / "tasks") ? root / "tasks" : root;
  for (const auto& entry : fs::directory_iterator(task_root)) {
    if (entry.is_directory() && fs::exists(entry.path() / kManifestName)) s.tasks.push_back(load_task(entry.path()));
  }
  if (s.tasks.empty()) throw ManifestError("no tasks found under " + task_root.string());
  std::sort(s.tasks.begin(), s.tasks.end(), [](const auto& a, const auto& b) { return a.task_id < b.task_id; });
  for (std::size_t i = 1; i < s.tasks.size(); ++i) {
    if (s.tasks[i].task_id == s.tasks[i - 1].task_id) throw ManifestError("duplicate task_id " + s.tasks[i].task_id);
  }
  for (auto& t : s.tasks) {
    if (!t.fixtures.site && fs::is_directory(root / "sites")) t.fixtures.site = root / "sites";
    if (!t.fixtures.search && fs::exists(root / "search.json")) t.fixtures.search = root / "search.json";
  }
  return s;
}

}  // namespace versa::eval
