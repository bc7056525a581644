#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "versa/core/bytes.hpp"
#include "versa/core/condenser.hpp"
#include "versa/core/json.hpp"
#include "versa/net/http.hpp"
#include "versa/tools/schema.hpp"

namespace versa::llm {

enum class Role { system, user, assistant, tool };

std::string_view to_string(Role r);

struct TextPart {
  std::string text;
  bool operator==(const TextPart&) const = default;
};

struct ImagePart {
  std::string mime;
  Bytes data;
  bool operator==(const ImagePart&) const = default;
};

using Part = std::variant<TextPart, ImagePart>;

struct ChatTurn {
  Role role = Role::user;
  std::vector<Part> parts;

  void validate() const;  // non-empty parts, png/jpeg images only
  std::string text() const;  // text parts joined by newlines
  std::size_t image_count() const;
  bool operator==(const ChatTurn&) const = default;
};

struct LLMRequest {
  std::vector<ChatTurn> turns;
  std::vector<tools::ToolSchema> tools;
  double temperature = 0.0;
  int max_output_tokens = 4096;
};

struct Usage {
  std::int64_t input_tokens = 0;
  std::int64_t output_tokens = 0;
  bool operator==(const Usage&) const = default;
};

struct LLMResponse {
  std::optional<std::string> thought;
  std::optional<tools::ToolCall> tool_call;
  std::optional<std::string> finish;
  Usage usage;

  void validate() const;  // exactly one of tool_call / finish
  bool operator==(const LLMResponse&) const = default;
};

json to_json(const LLMResponse& r);
LLMResponse response_from_json(const json& j);

enum class BackendKind { live, scripted };

struct BackendSpec {
  BackendKind kind = BackendKind::scripted;
  std::string model_id;
  std::filesystem::path transcript_path;
  std::size_t context_window_tokens = 200'000;
  std::string base_url;  // live: OpenAI-compatible endpoint root, e.g. https://host/v1
  std::string api_key;
  std::optional<std::filesystem::path> record_path;
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{2000};
  double request_timeout_s = 300;

  // Fills model/base_url/api_key from LLM_MODEL, LLM_BASE_URL, LLM_API_KEY
  // where not already set.
  void apply_environment();
  // Throws std::invalid_argument naming what is missing.
  void validate() const;
};

class GatewayError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ContextOverflowError : public GatewayError {
 public:
  ContextOverflowError(std::size_t estimated, std::size_t window);
  std::size_t estimated_tokens() const { return estimated_; }
  std::size_t window_tokens() const { return window_; }

 private:
  std::size_t estimated_;
  std::size_t window_;
};

class ReplayError : public GatewayError {
 public:
  ReplayError(const std::string& what, std::optional<std::size_t> divergent_turn = std::nullopt);
  std::optional<std::size_t> divergent_turn() const { return divergent_turn_; }

 private:
  std::optional<std::size_t> divergent_turn_;
};

class TransportError : public GatewayError {
 public:
  using GatewayError::GatewayError;
};

inline constexpr std::size_t kTokensPerImage = 1536;

// ceil(text bytes / 4) + 1536 per image.
std::size_t estimate_tokens(const std::vector<ChatTurn>& turns);
std::size_t estimate_tokens(std::string_view text);

std::string turn_fingerprint(const ChatTurn& turn);
std::vector<std::string> turn_fingerprints(const LLMRequest& request);
// Hash of turn texts and tool names. Images contribute only their count.
std::string fingerprint(const LLMRequest& request);

class Backend {
 public:
  virtual ~Backend() = default;
  virtual LLMResponse complete(const LLMRequest& request) = 0;
};

struct TranscriptEntry {
  std::optional<std::string> fingerprint;  // absent: matches any request
  std::vector<std::string> turn_fingerprints;
  LLMResponse response;
};

json to_json(const TranscriptEntry& e);
TranscriptEntry transcript_entry_from_json(const json& j);
std::vector<TranscriptEntry> load_transcript(const std::filesystem::path& path);

// Deterministic replay of recorded request -> response pairs, in order.
class ScriptedBackend final : public Backend {
 public:
  explicit ScriptedBackend(std::vector<TranscriptEntry> entries);
  explicit ScriptedBackend(const std::filesystem::path& transcript);

  LLMResponse complete(const LLMRequest& request) override;
  std::size_t remaining() const;

 private:
  mutable std::mutex mutex_;
  std::vector<TranscriptEntry> entries_;
  std::size_t cursor_ = 0;
};

// Wraps any backend and appends {fingerprint, turn_fingerprints, response}
// lines for later scripted replay.
class RecordingBackend final : public Backend {
 public:
  RecordingBackend(std::unique_ptr<Backend> inner, const std::filesystem::path& out);
  LLMResponse complete(const LLMRequest& request) override;

 private:
  std::unique_ptr<Backend> inner_;
  std::mutex mutex_;
  std::ofstream out_;
};

// OpenAI-compatible chat-completions client with native tool calling and a
// fenced-block fallback.
class LiveBackend final : public Backend {
 public:
  LiveBackend(BackendSpec spec, std::shared_ptr<net::HttpClient> http = net::default_http_client());
  LLMResponse complete(const LLMRequest& request) override;

  json build_payload(const LLMRequest& request) const;
  static LLMResponse parse_completion(const json& body);

 private:
  BackendSpec spec_;
  std::shared_ptr<net::HttpClient> http_;
};

std::unique_ptr<Backend> make_backend(const BackendSpec& spec);

// Parses a ```tool_call fenced block ({"tool": ..., "arguments": {...}}).
std::optional<tools::ToolCall> parse_fenced_tool_call(std::string_view text);

// Renders the call in the same fenced syntax the parser accepts.
std::string render_fenced_tool_call(const tools::ToolCall& call);

// One gateway per agent session: guards the context window, then forwards.
class Gateway {
 public:
  Gateway(BackendSpec spec, std::unique_ptr<Backend> backend);
  explicit Gateway(const BackendSpec& spec);

  LLMResponse complete(const LLMRequest& request);
  const BackendSpec& spec() const { return spec_; }

 private:
  BackendSpec spec_;
  std::unique_ptr<Backend> backend_;
};

// Single-line answer reformatted to what the task asks for.
std::string extract_final_answer(std::string_view task, std::string_view final_thought, Gateway& gateway);

LLMRequest extraction_request(std::string_view task, std::string_view final_thought);

}  // namespace versa::llm
