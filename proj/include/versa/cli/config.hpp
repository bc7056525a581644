#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "versa/agent/controller.hpp"
#include "versa/core/json.hpp"
#include "versa/runtime/runtime.hpp"

namespace versa::cli {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class SettingType { integer, number, boolean, string, list };

struct SettingSpec {
  std::string key;    // config-file key; the flag is --key with '_' as '-'
  SettingType type;
  std::string env;    // environment variable
  std::string fallback;
  std::string help;
  bool secret = false;
};

const std::vector<SettingSpec>& setting_specs();
const SettingSpec* find_setting(std::string_view key);
std::string flag_name(const SettingSpec& spec);

enum class Layer { fallback, config_file, environment, flag };
std::string_view to_string(Layer l);

struct Setting {
  std::string value;
  Layer source = Layer::fallback;
};

using Settings = std::map<std::string, Setting>;
using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

EnvLookup process_environment();

// Checks keys and value types; list values may be arrays or comma strings.
std::map<std::string, std::string> read_config_values(const json& config);
std::map<std::string, std::string> load_config_file(const std::filesystem::path& path);

// Highest precedence first: flags, environment, config file, built-in fallback.
Settings resolve_settings(const std::map<std::string, std::string>& config_file, const EnvLookup& env,
                          const std::map<std::string, std::string>& flags);

// One "key = value  (source)" line per setting, secrets redacted.
std::string render_settings(const Settings& settings);

enum class BrowserKind { offline, cdp, none };

struct CliConfig {
  agent::AgentConfig agent;
  int viewport_width = 1280;
  int viewport_height = 720;
  std::filesystem::path output_dir;
  runtime::SandboxMode sandbox = runtime::SandboxMode::local;
  std::optional<std::filesystem::path> sandbox_root;
  std::optional<std::string> runtime_address;  // host:port; empty runs the runtime in-process
  std::optional<std::filesystem::path> runtime_config;
  BrowserKind browser = BrowserKind::offline;
  std::string browser_path;
  std::optional<std::filesystem::path> site;
  std::optional<std::filesystem::path> search_fixture;
  std::optional<std::filesystem::path> record;
  std::size_t parallel = 1;
  Settings settings;
};

// Typed view; throws ConfigError naming the offending setting.
CliConfig build_config(const Settings& settings);

// "1280x720" -> {1280, 720}
std::pair<int, int> parse_viewport(std::string_view s);

}  // namespace versa::cli
