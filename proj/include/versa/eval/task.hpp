#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "versa/core/json.hpp"

namespace versa::eval {

enum class ValidatorKind { file_exists, file_contains, url_visited, answer_equals, shell_probe };

std::string_view to_string(ValidatorKind k);
ValidatorKind parse_validator_kind(std::string_view s);

// {"type": "file_contains", "path": "answer.txt", "text": "4.50"} etc.
struct Validator {
  ValidatorKind kind = ValidatorKind::file_exists;
  json params = json::object();

  void validate() const;  // required params per kind
};

struct Checkpoint {
  std::string checkpoint_id;
  std::string description;
  int points = 1;
  Validator validator;
};

// Paths are resolved against the task directory at load time.
struct TaskFixtures {
  std::optional<std::filesystem::path> files;       // copied into the sandbox workdir
  std::optional<std::filesystem::path> site;        // offline web root for the browser
  std::optional<std::filesystem::path> search;      // mock search provider fixture
  std::optional<std::filesystem::path> transcript;  // scripted backend for CI mode
};

struct BenchmarkTask {
  std::string task_id;
  std::string instruction;
  std::string category;
  TaskFixtures fixtures;
  std::vector<Checkpoint> checkpoints;
  std::optional<std::string> answer_key;
  std::optional<int> step_cap_override;
  std::filesystem::path directory;

  int total_points() const;
  void validate() const;
};

class ManifestError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::string_view kManifestName = "task.json";

BenchmarkTask task_from_json(const json& j, const std::filesystem::path& task_dir);
json to_json(const BenchmarkTask& t);
BenchmarkTask load_task(const std::filesystem::path& task_dir);

struct Suite {
  std::string name;
  std::filesystem::path root;
  std::vector<BenchmarkTask> tasks;  // sorted by task_id
};

// Every subdirectory of `root/tasks` (or of `root` itself) holding a task.json.
// Suite-level "sites" and "search.json" are used when a task names none.
Suite load_suite(const std::filesystem::path& root);

}  // namespace versa::eval
