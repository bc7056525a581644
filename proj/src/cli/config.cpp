#include "versa/cli/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdlib>

#include "versa/core/assets.hpp"
#include "versa/core/text.hpp"

namespace versa::cli {

namespace fs = std::filesystem;

const std::vector<SettingSpec>& setting_specs() {
  static const std::vector<SettingSpec> specs = {
      {"k", SettingType::integer, "VERSA_K", "1", "browsing observations kept unmasked"},
      {"tau", SettingType::integer, "VERSA_TAU", "10", "planning interval in steps"},
      {"max_steps", SettingType::integer, "VERSA_MAX_STEPS", "100", "step cap"},
      {"temperature", SettingType::number, "VERSA_TEMPERATURE", "0", "sampling temperature"},
      {"search_provider", SettingType::list, "VERSA_SEARCH_PROVIDER", "tavily,exa,brave", "search fallback chain"},
      {"search_fixture", SettingType::string, "VERSA_SEARCH_FIXTURE", "", "fixture for the mock search provider"},
      {"backend", SettingType::string, "VERSA_BACKEND", "live", "live or scripted"},
      {"transcript", SettingType::string, "VERSA_TRANSCRIPT", "", "scripted backend transcript"},
      {"model", SettingType::string, "LLM_MODEL", "", "model id for the live backend"},
      {"base_url", SettingType::string, "LLM_BASE_URL", "", "OpenAI-compatible endpoint root"},
      {"api_key", SettingType::string, "LLM_API_KEY", "", "API key for the live backend", true},
      {"context_window", SettingType::integer, "VERSA_CONTEXT_WINDOW", "200000", "context window in tokens"},
      {"viewport", SettingType::string, "VERSA_VIEWPORT", "1280x720", "browser viewport WxH"},
      {"axtree_budget", SettingType::integer, "VERSA_AXTREE_BUDGET", "20000", "accessibility tree token budget"},
      {"output_budget", SettingType::integer, "VERSA_OUTPUT_BUDGET", "32768", "byte budget per tool output"},
      {"output_dir", SettingType::string, "VERSA_OUTPUT_DIR", "", "output directory (default runs/<timestamp>)"},
      {"loop_nudge", SettingType::boolean, "VERSA_LOOP_NUDGE", "false", "nudge after repeated identical actions"},
      {"sandbox", SettingType::string, "VERSA_SANDBOX", "local-chroot", "local-chroot or container"},
      {"sandbox_root", SettingType::string, "VERSA_SANDBOX_ROOT", "", "sandbox directory (default <output>/sandbox)"},
      {"runtime", SettingType::string, "VERSA_RUNTIME", "", "host:port of a remote runtime"},
      {"runtime_config", SettingType::string, "VERSA_RUNTIME_CONFIG", "", "runtime configuration file"},
      {"browser", SettingType::string, "VERSA_BROWSER", "offline", "offline, cdp or none"},
      {"browser_path", SettingType::string, "VERSA_BROWSER_PATH", "", "chrome binary for the cdp browser"},
      {"site", SettingType::string, "VERSA_SITE", "", "web root served by the offline browser"},
      {"parallel", SettingType::integer, "VERSA_PARALLEL", "1", "concurrent tasks in eval"},
      {"record", SettingType::string, "VERSA_RECORD", "", "append live responses to this transcript"},
  };
  return specs;
}

const SettingSpec* find_setting(std::string_view key) {
  for (const auto& s : setting_specs()) {
    if (s.key == key) return &s;
  }
  return nullptr;
}

std::string flag_name(const SettingSpec& spec) {
  std::string f = "--" + spec.key;
  std::replace(f.begin(), f.end(), '_', '-');
  return f;
}

std::string_view to_string(Layer l) {
  switch (l) {
    case Layer::fallback: return "default";
    case Layer::config_file: return "config";
    case Layer::environment: return "env";
    case Layer::flag: return "flag";
  }
  return "?";
}

EnvLookup process_environment() {
  return [](const std::string& name) -> std::optional<std::string> {
    if (const char* v = std::getenv(name.c_str()); v && *v) return std::string(v);
    return std::nullopt;
  };
}

namespace {

std::string number_text(const json& v) {
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  return v.dump();
}

}  // namespace

std::map<std::string, std::string> read_config_values(const json& config) {
  if (!config.is_object()) throw ConfigError("config file must hold a JSON object");
  std::map<std::string, std::string> out;
  for (const auto& [key, v] : config.items()) {
    const SettingSpec* spec = find_setting(key);
    if (!spec) throw ConfigError("unknown config key '" + key + "'");
    switch (spec->type) {
      case SettingType::integer:
        if (!v.is_number_integer()) throw ConfigError("config key '" + key + "' must be an integer");
        out[key] = number_text(v);
        break;
      case SettingType::number:
        if (!v.is_number()) throw ConfigError("config key '" + key + "' must be a number");
        out[key] = number_text(v);
        break;
      case SettingType::boolean:
        if (!v.is_boolean()) throw ConfigError("config key '" + key + "' must be true or false");
        out[key] = v.get<bool>() ? "true" : "false";
        break;
      case SettingType::string:
        if (!v.is_string()) throw ConfigError("config key '" + key + "' must be a string");
        out[key] = v.get<std::string>();
        break;
      case SettingType::list:
        if (v.is_string()) {
          out[key] = v.get<std::string>();
        } else if (v.is_array() && std::all_of(v.begin(), v.end(), [](const json& x) { return x.is_string(); })) {
          out[key] = text::join(v.get<std::vector<std::string>>(), ",");
        } else {
          throw ConfigError("config key '" + key + "' must be a list of strings");
        }
        break;
    }
  }
  return out;
}

std::map<std::string, std::string> load_config_file(const fs::path& path) {
  if (!fs::exists(path)) throw ConfigError("config file not found: " + path.string());
  try {
    return read_config_values(json::parse(assets::read_file(path)));
  } catch (const json::exception& e) {
    throw ConfigError("cannot parse config file " + path.string() + ": " + e.what());
  }
}

Settings resolve_settings(const std::map<std::string, std::string>& config_file, const EnvLookup& env,
                          const std::map<std::string, std::string>& flags) {
  Settings out;
  for (const auto& spec : setting_specs()) {
    Setting s{spec.fallback, Layer::fallback};
    if (auto it = config_file.find(spec.key); it != config_file.end()) s = {it->second, Layer::config_file};
    if (env) {
      if (auto v = env(spec.env)) s = {*v, Layer::environment};
    }
    if (auto it = flags.find(spec.key); it != flags.end()) s = {it->second, Layer::flag};
    out[spec.key] = std::move(s);
  }
  for (const auto& [key, value] : flags) {
    if (!find_setting(key)) throw ConfigError("unknown setting '" + key + "'");
  }
  return out;
}

std::string render_settings(const Settings& settings) {
  std::string out;
  for (const auto& spec : setting_specs()) {
    auto it = settings.find(spec.key);
    if (it == settings.end()) continue;
    std::string value = spec.secret && !it->second.value.empty() ? "***" : it->second.value;
    out += spec.key + " = " + value + "  (" + std::string(to_string(it->second.source)) + ")\n";
  }
  return out;
}

std::pair<int, int> parse_viewport(std::string_view s) {
  auto x = s.find('x');
  if (x == std::string_view::npos) throw ConfigError("viewport must look like 1280x720");
  int w = 0, h = 0;
  auto a = std::from_chars(s.data(), s.data() + x, w);
  auto b = std::from_chars(s.data() + x + 1, s.data() + s.size(), h);
  if (a.ec != std::errc() || a.ptr != s.data() + x || b.ec != std::errc() || b.ptr != s.data() + s.size() || w < 64 ||
      h < 64 || w > 8192 || h > 8192) {
    throw ConfigError("viewport must look like 1280x720 with sides between 64 and 8192");
  }
  return {w, h};
}

namespace {

long long as_int(const Settings& s, const std::string& key, long long min) {
  const std::string& v = s.at(key).value;
  long long out = 0;
  auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size()) throw ConfigError(key + " must be an integer, got '" + v + "'");
  if (out < min) throw ConfigError(key + " must be >= " + std::to_string(min));
  return out;
}

double as_number(const Settings& s, const std::string& key) {
  const std::string& v = s.at(key).value;
  try {
    std::size_t used = 0;
    double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError(key + " must be a number, got '" + v + "'");
  }
}

bool as_bool(const Settings& s, const std::string& key) {
  std::string v = text::to_lower(text::trim(s.at(key).value));
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off" || v.empty()) return false;
  throw ConfigError(key + " must be true or false, got '" + s.at(key).value + "'");
}

std::optional<fs::path> as_path(const Settings& s, const std::string& key) {
  const std::string& v = s.at(key).value;
  if (v.empty()) return std::nullopt;
  return fs::path(v);
}

}  // namespace

CliConfig build_config(const Settings& settings) {
  CliConfig c;
  c.settings = settings;
  auto& a = c.agent;
  a.k = static_cast<std::size_t>(as_int(settings, "k", 0));
  a.tau = static_cast<int>(as_int(settings, "tau", 1));
  a.max_steps = static_cast<int>(as_int(settings, "max_steps", 1));
  a.temperature = as_number(settings, "temperature");
  if (a.temperature < 0 || a.temperature > 2) throw ConfigError("temperature must be between 0 and 2");
  a.token_budget_axtree = static_cast<std::size_t>(as_int(settings, "axtree_budget", 1));
  a.output_byte_budget = static_cast<std::size_t>(as_int(settings, "output_budget", 1));
  a.loop_nudge = as_bool(settings, "loop_nudge");
  a.provider_chain.clear();
  for (auto& p : text::split(settings.at("search_provider").value, ',')) {
    std::string name = text::trim(p);
    if (!name.empty()) a.provider_chain.push_back(name);
  }

  const std::string backend = settings.at("backend").value;
  if (backend == "live") a.backend.kind = llm::BackendKind::live;
  else if (backend == "scripted") a.backend.kind = llm::BackendKind::scripted;
  else throw ConfigError("backend must be live or scripted, got '" + backend + "'");
  if (auto t = as_path(settings, "transcript")) a.backend.transcript_path = *t;
  a.backend.model_id = settings.at("model").value;
  a.backend.base_url = settings.at("base_url").value;
  a.backend.api_key = settings.at("api_key").value;
  a.backend.context_window_tokens = static_cast<std::size_t>(as_int(settings, "context_window", 1024));
  c.record = as_path(settings, "record");
  a.backend.record_path = c.record;

  std::tie(c.viewport_width, c.viewport_height) = parse_viewport(settings.at("viewport").value);
  if (auto o = as_path(settings, "output_dir")) c.output_dir = *o;
  try {
    c.sandbox = runtime::parse_sandbox_mode(settings.at("sandbox").value);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("sandbox: ") + e.what());
  }
  c.sandbox_root = as_path(settings, "sandbox_root");
  if (!settings.at("runtime").value.empty()) c.runtime_address = settings.at("runtime").value;
  c.runtime_config = as_path(settings, "runtime_config");
  const std::string browser = settings.at("browser").value;
  if (browser == "offline") c.browser = BrowserKind::offline;
  else if (browser == "cdp") c.browser = BrowserKind::cdp;
  else if (browser == "none") c.browser = BrowserKind::none;
  else throw ConfigError("browser must be offline, cdp or none, got '" + browser + "'");
  c.browser_path = settings.at("browser_path").value;
  c.site = as_path(settings, "site");
  c.search_fixture = as_path(settings, "search_fixture");
  c.parallel = static_cast<std::size_t>(as_int(settings, "parallel", 1));
  try {
    a.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return c;
}

}  // namespace versa::cli
