#include "versa/llm/gateway.hpp"

#include <cstdlib>
#include <sstream>

#include "versa/core/assets.hpp"
#include "versa/core/text.hpp"

namespace versa::llm {

std::string_view to_string(Role r) {
  switch (r) {
    case Role::system:
      return "system";
    case Role::user:
      return "user";
    case Role::assistant:
      return "assistant";
    case Role::tool:
      return "tool";
  }
  return "user";
}

void ChatTurn::validate() const {
  if (parts.empty()) throw std::invalid_argument("chat turn has no parts");
  for (const auto& p : parts) {
    if (const auto* img = std::get_if<ImagePart>(&p)) {
      if (img->mime != "image/png" && img->mime != "image/jpeg") {
        throw std::invalid_argument("unsupported image mime in chat turn: " + img->mime);
      }
    }
  }
}

std::string ChatTurn::text() const {
  std::string out;
  for (const auto& p : parts) {
    if (const auto* t = std::get_if<TextPart>(&p)) {
      if (!out.empty()) out += '\n';
      out += t->text;
    }
  }
  return out;
}

std::size_t ChatTurn::image_count() const {
  std::size_t n = 0;
  for (const auto& p : parts) n += std::holds_alternative<ImagePart>(p) ? 1 : 0;
  return n;
}

void LLMResponse::validate() const {
  if (tool_call.has_value() == finish.has_value()) {
    throw GatewayError("LLM response must carry exactly one of tool_call or finish");
  }
}

json to_json(const LLMResponse& r) {
  json j = json::object();
  if (r.thought) j["thought"] = *r.thought;
  if (r.tool_call) j["tool_call"] = {{"tool", r.tool_call->tool}, {"arguments", r.tool_call->arguments}};
  if (r.finish) j["finish"] = *r.finish;
  j["usage"] = {{"input_tokens", r.usage.input_tokens}, {"output_tokens", r.usage.output_tokens}};
  return j;
}

LLMResponse response_from_json(const json& j) {
  LLMResponse r;
  if (j.contains("thought") && !j["thought"].is_null()) r.thought = j["thought"].get<std::string>();
  if (j.contains("tool_call") && !j["tool_call"].is_null()) {
    const auto& tc = j["tool_call"];
    r.tool_call = tools::ToolCall{tc.at("tool").get<std::string>(), tc.value("arguments", json::object())};
  }
  if (j.contains("finish") && !j["finish"].is_null()) r.finish = j["finish"].get<std::string>();
  if (j.contains("usage")) {
    r.usage.input_tokens = j["usage"].value("input_tokens", std::int64_t{0});
    r.usage.output_tokens = j["usage"].value("output_tokens", std::int64_t{0});
  }
  r.validate();
  return r;
}

void BackendSpec::apply_environment() {
  auto env = [](const char* name) -> std::string {
    const char* v = std::getenv(name);
    return v ? v : "";
  };
  if (model_id.empty()) model_id = env("LLM_MODEL");
  if (base_url.empty()) base_url = env("LLM_BASE_URL");
  if (api_key.empty()) api_key = env("LLM_API_KEY");
}

void BackendSpec::validate() const {
  if (context_window_tokens == 0) throw std::invalid_argument("context_window_tokens must be positive");
  if (kind == BackendKind::scripted) {
    if (transcript_path.empty()) throw std::invalid_argument("scripted backend needs a transcript path");
    return;
  }
  if (api_key.empty()) throw std::invalid_argument("live backend needs LLM_API_KEY");
  if (model_id.empty()) throw std::invalid_argument("live backend needs LLM_MODEL");
  if (base_url.empty()) throw std::invalid_argument("live backend needs LLM_BASE_URL");
}

ContextOverflowError::ContextOverflowError(std::size_t estimated, std::size_t window)
    : GatewayError("prompt needs ~" + std::to_string(estimated) + " tokens, context window is " +
                   std::to_string(window)),
      estimated_(estimated),
      window_(window) {}

ReplayError::ReplayError(const std::string& what, std::optional<std::size_t> divergent_turn)
    : GatewayError(what), divergent_turn_(divergent_turn) {}

std::size_t estimate_tokens(std::string_view text) { return (text.size() + 3) / 4; }

std::size_t estimate_tokens(const std::vector<ChatTurn>& turns) {
  std::size_t text_bytes = 0;
  std::size_t images = 0;
  for (const auto& t : turns) {
    for (const auto& p : t.parts) {
      if (const auto* tp = std::get_if<TextPart>(&p)) {
        text_bytes += tp->text.size();
      } else {
        ++images;
      }
    }
  }
  return (text_bytes + 3) / 4 + images * kTokensPerImage;
}

std::string turn_fingerprint(const ChatTurn& turn) {
  std::string material(to_string(turn.role));
  for (const auto& p : turn.parts) {
    material += '\x1f';
    if (const auto* t = std::get_if<TextPart>(&p)) {
      material += t->text;
    } else {
      material += "[image]";
    }
  }
  return sha256_hex(material);
}

std::vector<std::string> turn_fingerprints(const LLMRequest& request) {
  std::vector<std::string> out;
  out.reserve(request.turns.size());
  for (const auto& t : request.turns) out.push_back(turn_fingerprint(t));
  return out;
}

std::string fingerprint(const LLMRequest& request) {
  std::string material;
  for (const auto& fp : turn_fingerprints(request)) {
    material += fp;
    material += '\n';
  }
  material += "tools:";
  for (const auto& t : request.tools) {
    material += t.name;
    material += ',';
  }
  return sha256_hex(material);
}

json to_json(const TranscriptEntry& e) {
  json j = {{"fingerprint", e.fingerprint ? json(*e.fingerprint) : json(nullptr)}, {"response", to_json(e.response)}};
  if (!e.turn_fingerprints.empty()) j["turn_fingerprints"] = e.turn_fingerprints;
  return j;
}

TranscriptEntry transcript_entry_from_json(const json& j) {
  TranscriptEntry e;
  if (j.contains("fingerprint") && !j["fingerprint"].is_null()) e.fingerprint = j["fingerprint"].get<std::string>();
  e.turn_fingerprints = j.value("turn_fingerprints", std::vector<std::string>{});
  e.response = response_from_json(j.at("response"));
  return e;
}

std::vector<TranscriptEntry> load_transcript(const std::filesystem::path& path) {
  std::string doc = assets::read_file(path);
  std::vector<TranscriptEntry> entries;
  std::size_t line_no = 0;
  for (const auto& line : text::split_lines(doc)) {
    if (!text::trim(line).empty()) {
      try {
        entries.push_back(transcript_entry_from_json(json::parse(line)));
      } catch (const std::exception& e) {
        throw GatewayError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
      }
    }
    ++line_no;
  }
  return entries;
}

ScriptedBackend::ScriptedBackend(std::vector<TranscriptEntry> entries) : entries_(std::move(entries)) {}

ScriptedBackend::ScriptedBackend(const std::filesystem::path& transcript) : entries_(load_transcript(transcript)) {}

LLMResponse ScriptedBackend::complete(const LLMRequest& request) {
  std::lock_guard lock(mutex_);
  if (cursor_ >= entries_.size()) {
    throw ReplayError("transcript exhausted after " + std::to_string(entries_.size()) + " entries");
  }
  const TranscriptEntry& entry = entries_[cursor_];
  if (entry.fingerprint) {
    const std::string fp = fingerprint(request);
    if (fp != *entry.fingerprint) {
      auto actual = turn_fingerprints(request);
      std::optional<std::size_t> divergent;
      const auto& expected = entry.turn_fingerprints;
      if (!expected.empty()) {
        std::size_t i = 0;
        while (i < expected.size() && i < actual.size() && expected[i] == actual[i]) ++i;
        divergent = i;
      }
      std::string what = "transcript entry " + std::to_string(cursor_) + " does not match the request";
      if (divergent) {
        what += ": first divergent turn " + std::to_string(*divergent);
        if (*divergent < request.turns.size()) {
          std::string preview = request.turns[*divergent].text().substr(0, 120);
          what += " (" + std::string(to_string(request.turns[*divergent].role)) + ": " + preview + ")";
        }
      } else {
        what += " (tools or turns differ)";
      }
      throw ReplayError(what, divergent);
    }
  }
  ++cursor_;
  return entry.response;
}

std::size_t ScriptedBackend::remaining() const {
  std::lock_guard lock(mutex_);
  return entries_.size() - cursor_;
}

RecordingBackend::RecordingBackend(std::unique_ptr<Backend> inner, const std::filesystem::path& out)
    : inner_(std::move(inner)) {
  if (out.has_parent_path()) std::filesystem::create_directories(out.parent_path());
  out_.open(out, std::ios::binary | std::ios::trunc);
  if (!out_) throw GatewayError("cannot open transcript for recording: " + out.string());
}

LLMResponse RecordingBackend::complete(const LLMRequest& request) {
  LLMResponse r = inner_->complete(request);
  TranscriptEntry e{fingerprint(request), turn_fingerprints(request), r};
  std::lock_guard lock(mutex_);
  out_ << to_json(e).dump() << '\n';
  out_.flush();
  return r;
}

std::unique_ptr<Backend> make_backend(const BackendSpec& spec) {
  spec.validate();
  std::unique_ptr<Backend> backend;
  if (spec.kind == BackendKind::scripted) {
    backend = std::make_unique<ScriptedBackend>(spec.transcript_path);
  } else {
    backend = std::make_unique<LiveBackend>(spec);
  }
  if (spec.record_path) backend = std::make_unique<RecordingBackend>(std::move(backend), *spec.record_path);
  return backend;
}

std::optional<tools::ToolCall> parse_fenced_tool_call(std::string_view text) {
  static constexpr std::string_view kOpen = "```tool_call";
  auto open = text.find(kOpen);
  if (open == std::string_view::npos) return std::nullopt;
  auto body_start = text.find('\n', open);
  if (body_start == std::string_view::npos) return std::nullopt;
  auto close = text.find("```", body_start);
  if (close == std::string_view::npos) return std::nullopt;
  json j = json::parse(text.substr(body_start + 1, close - body_start - 1), nullptr, false);
  if (j.is_discarded() || !j.is_object() || !j.contains("tool") || !j["tool"].is_string()) return std::nullopt;
  json args = j.value("arguments", json::object());
  if (!args.is_object()) return std::nullopt;
  return tools::ToolCall{j["tool"].get<std::string>(), std::move(args)};
}

std::string render_fenced_tool_call(const tools::ToolCall& call) {
  json j = {{"tool", call.tool}, {"arguments", call.arguments}};
  return "```tool_call\n" + j.dump() + "\n```";
}

Gateway::Gateway(BackendSpec spec, std::unique_ptr<Backend> backend)
    : spec_(std::move(spec)), backend_(std::move(backend)) {}

Gateway::Gateway(const BackendSpec& spec) : spec_(spec), backend_(make_backend(spec)) {}

LLMResponse Gateway::complete(const LLMRequest& request) {
  for (const auto& t : request.turns) t.validate();
  const std::size_t estimated = estimate_tokens(request.turns);
  if (estimated > spec_.context_window_tokens) throw ContextOverflowError(estimated, spec_.context_window_tokens);
  LLMResponse r = backend_->complete(request);
  r.validate();
  return r;
}

LLMRequest extraction_request(std::string_view task, std::string_view final_thought) {
  LLMRequest req;
  req.turns.push_back(ChatTurn{Role::system, {TextPart{assets::load("prompts/extract_answer.v1.txt")}}});
  std::string user = "Task:\n" + std::string(task) + "\n\nFinal thought of the agent:\n" + std::string(final_thought);
  req.turns.push_back(ChatTurn{Role::user, {TextPart{std::move(user)}}});
  req.temperature = 0.0;
  req.max_output_tokens = 256;
  return req;
}

std::string extract_final_answer(std::string_view task, std::string_view final_thought, Gateway& gateway) {
  if (text::trim(final_thought).empty()) throw std::invalid_argument("final thought must be non-empty");
  LLMResponse r = gateway.complete(extraction_request(task, final_thought));
  std::string raw;
  if (r.finish) {
    raw = *r.finish;
  } else if (r.tool_call && r.tool_call->tool == "finish") {
    raw = r.tool_call->arguments.value("message", "");
  } else {
    throw GatewayError("answer extraction expected a plain answer, got a tool call");
  }
  for (const auto& line : text::split_lines(raw)) {
    std::string t = text::trim(line);
    if (!t.empty()) return t;
  }
  return "";
}

}  // namespace versa::llm
